#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <numbers>
#include <random>
#include <sstream>

#include "hypertrace/stats.hpp"
#include "scenes.hpp"

using namespace hypertrace;

namespace {

// Kolmogorov tail from the theta-function series, the other classical form.
double kolmogorov_tail(double lambda) {
  double s = 0;
  for (int k = 1; k <= 50; ++k) {
    const double a = (2 * k - 1) * std::numbers::pi / lambda;
    s += std::exp(-a * a / 8);
  }
  return 1 - std::sqrt(2 * std::numbers::pi) / lambda * s;
}

std::vector<double> normals(std::size_t n, double mean, double sd, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(mean, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = N(rng);
  return v;
}

View m004_view(double fov = 90) { return default_view(scenes::m004(), ViewKind::Material, 0, fov); }

}  // namespace

TEST_CASE("KS p-value matches the theta-series form of the Kolmogorov tail") {
  const std::size_t n = 1000000000000ULL;  // Stephens' correction is negligible here
  for (double lambda : {0.5, 0.8, 1.0, 1.2224, 1.3581, 1.6276, 2.0}) {
    const double D = lambda / std::sqrt(static_cast<double>(n));
    CHECK(ks_p_value(D, n) == doctest::Approx(kolmogorov_tail(lambda)).epsilon(1e-5));
  }
  CHECK(ks_p_value(1.3581 / 1e6, n) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(ks_p_value(1.6276 / 1e6, n) == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(ks_p_value(0, 100) == 1);
}

TEST_CASE("synthetic normal samples pass, uniform samples fail") {
  const auto s = summarize_values(normals(100000, 0, 1, 11), 0.1);
  CHECK_FALSE(s.lattice);
  const auto r = normality_test(s);
  CHECK_FALSE(r.skipped);
  CHECK(r.pass);
  CHECK(r.p > 0.01);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> U(-1, 1);
  std::vector<double> u(100000);
  for (auto& x : u) x = U(rng);
  const auto ru = normality_test(summarize_values(u, 0.1));
  CHECK_FALSE(ru.pass);
  CHECK(ru.p < 1e-10);
}

TEST_CASE("rounded normal samples pass the lattice comparison") {
  for (double sd : {1.0, 3.0, 8.0}) {
    auto v = normals(100000, 0.25, sd, 21);
    for (auto& x : v) x = std::round(x) - 0.5;  // half-integer lattice, like flow values with a -w/2 basepoint
    const auto s = summarize_values(v);
    CHECK(s.lattice);
    CHECK(normality_test(s).pass);
  }
  // A lattice sample far from normal still fails.
  std::vector<double> two(100000);
  for (std::size_t i = 0; i < two.size(); ++i) two[i] = (i % 2) ? 5 : -5;
  CHECK_FALSE(normality_test(summarize_values(two)).pass);
}

TEST_CASE("moments and histogram agree with a long double two-pass oracle") {
  const auto v = normals(54321, 3.5, 2.25, 5);
  const auto s = summarize_values(v, 0.5);
  long double m = 0;
  for (double x : v) m += x;
  m /= v.size();
  long double q = 0;
  for (double x : v) q += (x - m) * (x - m);
  const double sd = std::sqrt(static_cast<double>(q / (v.size() - 1)));
  CHECK(s.n == v.size());
  CHECK(s.mean == doctest::Approx(static_cast<double>(m)).epsilon(1e-13));
  CHECK(s.std == doctest::Approx(sd).epsilon(1e-13));
  std::uint64_t total = 0;
  for (auto c : s.histogram.counts) total += c;
  CHECK(total == v.size());
  // Each value lands in its bucket.
  for (std::size_t i = 0; i < 100; ++i) {
    const auto b = static_cast<std::size_t>(std::floor((v[i] - s.histogram.origin) / s.histogram.width));
    REQUIRE(b < s.histogram.counts.size());
    CHECK(s.histogram.counts[b] > 0);
  }
}

TEST_CASE("pairwise sum agrees with an extended precision sum") {
  std::vector<double> x(100003);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0 / (i + 1) * ((i % 3) ? 1 : -1);
  long double ref = 0;
  for (double v : x) ref += v;
  CHECK(pairwise_sum(x.data(), x.size()) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-15));
  CHECK(pairwise_sum(x.data(), 0) == 0);
}

TEST_CASE("constant data: std 0 and the normality test is skipped") {
  const auto s = summarize_values(std::vector<double>(20000, 2.5));
  CHECK(s.std == 0);
  CHECK(s.mean == 2.5);
  CHECK(s.ks_statistic == 0);
  const auto r = normality_test(s);
  CHECK(r.skipped);
  CHECK_FALSE(r.pass);
  CHECK_THROWS_AS(normality_test(summarize_values(std::vector<double>(9999, 1.0))), InputError);
}

TEST_CASE("failed rays are dropped below 0.1% and fatal at 0.1%") {
  std::vector<Sample> s(2000, Sample{1, 1, Termination::Radius});
  s[7].tag = Termination::Failed;
  s[9].tag = Termination::RayBudget;
  const auto st = summarize(s);
  CHECK(st.n == 1999);
  CHECK(st.failed == 1);
  CHECK(st.capped == 1);
  s[8].tag = Termination::Failed;
  CHECK_THROWS_AS(summarize(s), NumericalError);
}

TEST_CASE("region below the first face crossing is constant at the base weight") {
  View v = m004_view();
  v.base_weight = -1.5;
  RenderConfig cfg;
  cfg.R = 1e-3;
  for (int m : {2, 7, 50}) {
    const auto s = sample_region(scenes::m004(), {v, {0.2, -0.1}, 0.1, m}, cfg);
    CHECK(s.n == static_cast<std::size_t>(m) * m);
    CHECK(s.std == 0);
    CHECK(s.mean == -1.5);
  }
}

TEST_CASE("mean on a constant field does not depend on the grid") {
  RenderConfig cfg;
  cfg.R = 1e-3;
  const View v = m004_view();
  const auto a = sample_region(scenes::m004(), {v, {}, 0.1, 40}, cfg);
  const auto b = sample_region(scenes::m004(), {v, {}, 0.1, 80}, cfg);
  CHECK(a.mean == b.mean);
  const auto rows = pixel_mean_convergence(scenes::m004(), {v, {}, 0.1, 20}, {{1e-3, 2e-3}}, cfg);
  CHECK(rows[0].diff == 0);
  CHECK(rows[0].pass);
}

TEST_CASE("basepoint shift moves the mean and keeps std and KS bit-identical") {
  RenderConfig cfg;
  cfg.R = 6;
  View v = m004_view();
  v.base_weight = -0.5;
  RegionSpec r{v, {0.1, 0.05}, 20, 110};
  const auto a = sample_region(scenes::m004(), r, cfg);
  r.view.base_weight += 3;
  const auto b = sample_region(scenes::m004(), r, cfg);
  CHECK(a.std > 0);
  CHECK(b.mean == doctest::Approx(a.mean + 3).epsilon(1e-15));
  CHECK(b.std == a.std);
  CHECK(b.ks_statistic == a.ks_statistic);
  CHECK(b.histogram.counts == a.histogram.counts);
}

TEST_CASE("mean curve is a step function at small R") {
  RenderConfig cfg;
  std::vector<double> Rs;
  for (int i = 1; i <= 150; ++i) Rs.push_back(0.01 * i);
  const auto rows = mean_std_curve(scenes::m004(), {m004_view(), {}, 0.1, 8}, Rs, cfg);
  REQUIRE(rows.size() == Rs.size());
  CHECK(rows[0].mean == 0);
  CHECK(rows[0].std == 0);
  int changes = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) changes += rows[i].mean != rows[i - 1].mean;
  CHECK(changes >= 1);
  CHECK(changes <= 15);
  CHECK_THROWS_AS(mean_std_curve(scenes::m004(), {m004_view(), {}, 0.1, 8}, {2, 1}, cfg), InputError);
}

TEST_CASE("curve CSV: header, 17 significant digits, LF endings") {
  const std::vector<CurveRow> rows{{0.1, 1.0 / 3, std::numbers::pi, 4, 0, 1}, {2, -0.5, 0, 4, 1, 0}};
  const auto csv = curve_csv(rows);
  CHECK(csv.find('\r') == std::string::npos);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "R,mean,std,n,failed,capped");
  std::getline(in, line);
  CHECK(line == "0.10000000000000001,0.33333333333333331,3.1415926535897931,4,0,1");
  std::getline(in, line);
  CHECK(line == "2,-0.5,0,4,1,0");
  CHECK(std::strtod("0.33333333333333331", nullptr) == 1.0 / 3);
}

TEST_CASE("zero cocycle gives sigma 0") {
  GeomTriangulation g = scenes::m004();
  for (auto& t : g.tets) t.weights = {0, 0, 0, 0};
  const auto e = estimate_sigma(g, default_view(g, ViewKind::Material), 4, 10000, 3);
  CHECK(e.sigma == 0);
  CHECK(e.lo == 0);
  CHECK(e.hi == 0);
  CHECK(normality_test(e.stats).skipped);
}

TEST_CASE("sigma estimate is deterministic across thread counts and brackets its CI") {
  const View v = m004_view();
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto a = estimate_sigma(scenes::m004(), v, 4, 10000, 99, {}, 50);
  omp_set_num_threads(3);
  const auto b = estimate_sigma(scenes::m004(), v, 4, 10000, 99, {}, 50);
  omp_set_num_threads(saved);
  CHECK(a.sigma == b.sigma);
  CHECK(a.lo == b.lo);
  CHECK(a.hi == b.hi);
  CHECK(a.stats.values == b.stats.values);
  CHECK(a.lo < a.sigma);
  CHECK(a.sigma < a.hi);
  CHECK(a.sigma == doctest::Approx(a.stats.std / 2).epsilon(1e-15));
  const auto c = estimate_sigma(scenes::m004(), v, 4, 10000, 100, {}, 50);
  CHECK(c.stats.values != a.stats.values);
  CHECK_THROWS_AS(estimate_sigma(scenes::m004(), v, 3.9, 10000, 1), InputError);
  CHECK_THROWS_AS(estimate_sigma(scenes::m004(), v, 4, 9999, 1), InputError);
}

TEST_CASE("sigma agreement uses the combined half-widths") {
  SigmaEstimate a, b;
  a.sigma = 1.0, a.lo = 0.97, a.hi = 1.03;
  b.sigma = 1.05, b.lo = 1.01, b.hi = 1.09;
  CHECK(sigma_agree(a, b));  // 0.05 <= hypot(0.03, 0.04) = 0.05
  b.sigma = 1.0501;
  CHECK_FALSE(sigma_agree(a, b));
  CHECK(sigma_agree(a, a));
}

TEST_CASE("uniform screen points fill the frame and replay from the seed") {
  const auto p = uniform_screen_points(200, 100, 40000, 5);
  const auto q = uniform_screen_points(200, 100, 40000, 5);
  double mx = 0, my = 0, ax = 0, ay = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p[i].x == q[i].x);
    REQUIRE(std::abs(p[i].x) < 1);
    REQUIRE(std::abs(p[i].y) < 0.5);
    mx += p[i].x, my += p[i].y;
    ax = std::max(ax, std::abs(p[i].x)), ay = std::max(ay, std::abs(p[i].y));
  }
  CHECK(std::abs(mx / p.size()) < 0.02);
  CHECK(std::abs(my / p.size()) < 0.01);
  CHECK(ax > 0.99);
  CHECK(ay > 0.49);
}

TEST_CASE("pearson on exact relations") {
  std::vector<double> a{1, 2, 3, 4, 5}, b, c, d{2, 2, 2, 2, 2};
  for (double x : a) b.push_back(2 * x + 1), c.push_back(-x);
  CHECK(pearson(a, b) == doctest::Approx(1));
  CHECK(pearson(a, c) == doctest::Approx(-1));
  CHECK(pearson(a, d) == 0);
  CHECK(pearson({1, 2, 1, 2}, {1, 1, 2, 2}) == doctest::Approx(0));
  CHECK_THROWS_AS(pearson({1}, {1}), InputError);
}

TEST_CASE("region validation") {
  RenderConfig cfg;
  View ideal = default_view(scenes::m004(), ViewKind::Ideal);
  CHECK_THROWS_AS(sample_region(scenes::m004(), {ideal, {0.99, 0}, ideal.fov * 0.1, 4}, cfg), InputError);
  CHECK_NOTHROW(sample_region(scenes::m004(), {ideal, {0.5, 0}, ideal.fov * 0.1, 4}, cfg));
  CHECK_THROWS_AS(sample_region(scenes::m004(), {m004_view(), {}, 0.1, 0}, cfg), InputError);
  CHECK_THROWS_AS(sample_region(scenes::m004(), {m004_view(), {}, -1, 4}, cfg), InputError);
}

TEST_CASE("stats JSON carries the summary") {
  const auto s = summarize_values({-0.5, 0.5, 0.5, 1.5});
  const auto j = nlohmann::json::parse(stats_json(s, NormalityResult{true, 0, 1, false}));
  CHECK(j["n"] == 4);
  CHECK(j["mean"].get<double>() == 0.5);
  CHECK(j["lattice"] == true);
  CHECK(j["histogram"]["counts"] == std::vector<int>{1, 2, 1});
  CHECK(j["normality"]["skipped"] == true);
}
