// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exit status 0 only when every criterion passes.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hypertrace/facade.hpp"
#include "oracles.hpp"

using namespace hypertrace;

namespace {

struct Outcome {
  bool pass = false;
  std::string summary;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char b[512];
  std::snprintf(b, sizeof b, f, args...);
  return b;
}

void detail(const std::string& s) { std::printf("    %s\n", s.c_str()); }

double max_shape_diff(const ShapeAssignment& a, const ShapeAssignment& b) {
  double m = 0;
  for (std::size_t t = 0; t < a.shapes.size(); ++t) m = std::max(m, std::abs(a.shapes[t] - b.shapes[t]));
  return m;
}

Outcome gluing_solver() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto m004 = load_manifold("m004");
  const auto s = solve_shapes(m004);
  const auto m122 = load_manifold("m122");
  const auto f = solve_shapes(m122, {Filling{4, -1}});
  const double secs = seconds_since(t0);
  // 2 * 3 * Lobachevsky(pi/3) by quadrature, independent of the solver.
  const double expected = 6 * oracle::lobachevsky(std::numbers::pi / 3);
  const double vol = volume(s.shapes);
  double min_im = 1e300;
  for (const auto& z : f.shapes) min_im = std::min(min_im, z.imag());
  detail(fmt("m004: residual %.3g, volume %.15f, oracle %.15f, |diff| %.3g", s.residual, vol, expected,
             std::abs(vol - expected)));
  detail(fmt("m122(4,-1): residual %.3g, min Im z %.6f, %d iterations", f.residual, min_im, f.iterations));
  const bool ok = s.residual < 1e-12 && std::abs(vol - expected) < 1e-9 && f.residual < 1e-12 && min_im > 0 &&
                  secs < 1;
  return {ok, fmt("m004 residual %.2g, volume error %.2g; m122(4,-1) min Im z %.3g; %.2fs", s.residual,
                  std::abs(vol - expected), min_im, secs)};
}

Outcome scaling_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto scene = load_scene("m004");
  const auto& g = scene->geom;
  const View v = default_view(g, ViewKind::Ideal, 0, 2);
  RenderConfig cfg;
  cfg.width = cfg.height = 512;
  const double R = 5;
  bool ok = true;
  std::string sum;
  for (double d : {0.5, 1.0}) {
    cfg.R = R + d;
    const auto far = render(g, v, cfg);
    View pushed = flow_view(g, v, d);
    pushed.fov = v.fov * std::exp(d);
    cfg.R = R;
    const auto near = render(g, pushed, cfg);
    std::size_t equal = 0;
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < far.samples.size(); ++i) {
      equal += far.samples[i].weight == near.samples[i].weight;
      lo = std::min(lo, far.samples[i].weight);
      hi = std::max(hi, far.samples[i].weight);
    }
    const double frac = static_cast<double>(equal) / far.samples.size();
    detail(fmt("d = %.1f: %.5f of 512^2 weights equal (field range %g..%g)", d, frac, lo, hi));
    ok = ok && frac >= 0.995 && hi > lo;
    sum += fmt("d=%.1f %.4f ", d, frac);
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 60, sum + fmt("; %.1fs", secs)};
}

Outcome ct_match() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto scene = load_scene("m004");
  const auto& g = scene->geom;
  const View v = fiber_basepoint(g, default_view(g, ViewKind::Material, 0, 90));
  const double e2 = std::exp(2.0);
  std::vector<double> haus;
  double coverage = 0;
  for (double R : {5.0, 6.0, e2}) {
    const auto disk = build_elevation_disk(g, v, R);
    const auto line = boundary_polyline(disk);
    RenderConfig cfg;
    cfg.R = R;
    cfg.width = cfg.height = 256;
    const auto field = render(g, v, cfg);
    const auto rep = match_level_set(line, field, v);
    detail(fmt("R = R_disk = %.4f: %zu triangles, %s", R, disk.triangles.size(), to_json(rep).c_str()));
    haus.push_back(rep.hausdorff_px);
    coverage = rep.coverage;
  }
  const bool monotone = haus[0] > haus[1] && haus[1] > haus[2];
  const double secs = seconds_since(t0);
  return {coverage >= 0.95 && monotone && secs < 300,
          fmt("coverage at e^2 %.4f; Hausdorff %.2f > %.2f > %.2f px; %.1fs", coverage, haus[0], haus[1], haus[2],
              secs)};
}

struct Gate {
  SigmaEstimate est;
  NormalityResult normal;
};

Gate gate(const GeomTriangulation& g, ViewKind kind, double T) {
  Gate r{estimate_sigma(g, default_view(g, kind), T, 100000, 1234), {}};
  r.normal = normality_test(r.est.stats);
  return r;
}

std::string gate_line(const char* label, double T, const Gate& r) {
  return fmt("%s T = %g: sigma %.4f [%.4f, %.4f], std %.4f, KS %.4f, p %.3g (%s)", label, T, r.est.sigma, r.est.lo,
             r.est.hi, r.est.stats.std, r.normal.statistic, r.normal.p, r.normal.pass ? "normal" : "not normal");
}

Outcome clt() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto scene = load_scene("m004", "fiber");
  bool ok = true;
  std::vector<Gate> at16;
  std::string sum;
  for (ViewKind kind : {ViewKind::Material, ViewKind::Ideal}) {
    const auto a = gate(scene->geom, kind, 8), b = gate(scene->geom, kind, 16);
    const double ratio = b.est.stats.std / a.est.stats.std;
    const bool agree = sigma_agree(a.est, b.est);
    detail(gate_line(to_string(kind), 8, a));
    detail(gate_line(to_string(kind), 16, b));
    detail(fmt("%s: std ratio %.4f (window [1.30, 1.53]), sigma T/2T agree: %s", to_string(kind), ratio,
               agree ? "yes" : "no"));
    ok = ok && a.normal.pass && b.normal.pass && ratio >= 1.30 && ratio <= 1.53 && agree;
    sum += fmt("%s ratio %.3f p8 %.2g p16 %.2g; ", to_string(kind), ratio, a.normal.p, b.normal.p);
    at16.push_back(b);
  }
  const bool cross = sigma_agree(at16[0].est, at16[1].est);
  detail(fmt("material vs ideal sigma at T = 16 agree: %s", cross ? "yes" : "no"));
  const double secs = seconds_since(t0);
  return {ok && cross && secs < 600, sum + fmt("cross-view %s; %.0fs", cross ? "agree" : "disagree", secs)};
}

Outcome tails() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto van = load_scene("s789", "cusp_vanishing");
  const auto non = load_scene("s789", "cusp_nonvanishing");
  bool ok = true;
  std::string sum;
  for (double T : {8.0, 16.0}) {
    const auto a = gate(van->geom, ViewKind::Material, T), b = gate(non->geom, ViewKind::Material, T);
    detail(gate_line("vanishing", T, a));
    detail(gate_line("non-vanishing", T, b));
    const bool leg = a.normal.pass && !b.normal.pass;
    detail(fmt("T = %g leg: %s", T, leg ? "contrast holds" : "contrast does not hold"));
    ok = ok && leg;
    sum += fmt("T=%g %s (p %.2g vs %.2g); ", T, leg ? "holds" : "fails", a.normal.p, b.normal.p);
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 600, sum + fmt("%.0fs", secs)};
}

Outcome pixel_mean() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto scene = load_scene("m122_4_-1");
  const auto& g = scene->geom;
  RegionSpec region;
  region.view = default_view(g, ViewKind::Material);
  region.side = 0.1;
  region.m = 300;
  const RenderConfig cfg;
  const auto rows = pixel_mean_convergence(g, region, {{10, 12}}, cfg);
  const auto& r = rows.at(0);
  detail(fmt("0.1 deg square, 300^2 samples: mean(10) %.5f, mean(12) %.5f, diff %.5f, standard error %.5f", r.mean1,
             r.mean2, r.diff, r.std_error));
  View centres = region.view;
  centres.fov = 0.1;
  const double corr = single_sample_correlation(g, centres, 40, 25, 10, 12, cfg);
  detail(fmt("single samples at 1000 pixel centres of the square: correlation(R=10, R=12) %.4f", corr));
  const double secs = seconds_since(t0);
  return {r.pass && corr < 0.2 && secs < 600,
          fmt("|diff| %.4f vs 2 SE %.4f; correlation %.3f (need < 0.2); %.0fs", std::abs(r.diff), 2 * r.std_error,
              corr, secs)};
}

Outcome precision() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto scene = load_scene("m122_4_-1");
  const auto& g = scene->geom;
  const int W = 256;
  bool ok = true;
  std::string sum;
  for (double R : {9.0, 13.5}) {
    // Zoomed so the frame spans a fixed distance at radius R.
    const View v = default_view(g, ViewKind::Material, 0, 0.015 * std::exp(-(R - 10.5)));
    RenderConfig ref;
    ref.R = R;
    ref.width = ref.height = W;
    ref.k = 3;
    const auto fr = render(g, v, ref);
    // Pixels whose nine reference sub-samples agree; a test sample disagrees
    // when it differs from that common weight.
    std::vector<char> settled(static_cast<std::size_t>(W) * W);
    std::size_t n_settled = 0;
    for (int row = 0; row < W; ++row)
      for (int col = 0; col < W; ++col) {
        bool same = true;
        for (int s = 1; s < 9; ++s) same = same && fr.at(col, row, s).weight == fr.at(col, row, 0).weight;
        settled[row * W + col] = same;
        n_settled += same;
      }
    double frac[2];
    for (int i = 0; i < 2; ++i) {
      RenderConfig t = ref;
      t.k = 1;
      t.precision = i == 0 ? Precision::F32 : Precision::F64;
      t.jitter = true;
      t.seed = 7;
      const auto ft = render(g, v, t);
      std::size_t bad = 0;
      for (int row = 0; row < W; ++row)
        for (int col = 0; col < W; ++col)
          bad += settled[row * W + col] && ft.at(col, row).weight != fr.at(col, row, 0).weight;
      frac[i] = static_cast<double>(bad) / n_settled;
    }
    detail(fmt("R = %.1f, fov %.3g deg, %.3f of pixels settled: f32 disagrees on %.4f, f64 on %.4f", R, v.fov,
               static_cast<double>(n_settled) / (W * W), frac[0], frac[1]));
    ok = ok && frac[1] < 0.01 && (R < 10 ? frac[0] < 0.01 : frac[0] > 0.10);
    sum += fmt("R=%.1f f32 %.4f f64 %.4f; ", R, frac[0], frac[1]);
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 300, sum + fmt("%.0fs", secs)};
}

Outcome surgery_path() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto m122 = load_manifold("m122");
  const auto path = trace_path(m122, {}, kDefaultPathSamples);
  double worst = 0;
  for (const auto& s : path.samples) worst = std::max(worst, s.shapes.residual);
  const bool all = path.complete_path();
  const auto direct = solve_shapes(m122, {Filling{4, -1}});
  const double d1 = all ? max_shape_diff(direct, path.samples.back().shapes) : 1e300;
  const double solve_secs = seconds_since(t0);
  detail(fmt("%zu of %zu samples solved, worst residual %.3g%s", path.samples.size(), path.s_values.size(), worst,
             path.diagnostic.empty() ? "" : (", " + path.diagnostic).c_str()));
  detail(fmt("s = 1 vs direct (4,-1) solve: %.3g", d1));

  double cap[2][2] = {};
  const std::size_t i12 = 8;
  const bool have12 = path.samples.size() > i12 && path.samples[i12].s == 1.2;
  if (have12) {
    const auto g0 = path_geometry(m122, path.complete);
    const auto g12 = path_geometry(m122, path.samples[i12].shapes);
    const View v0 = default_view(g0, ViewKind::Material);
    const View v12 = place_view(g12, tet_local(g0, v0));
    RenderConfig cfg;
    cfg.width = cfg.height = 128;
    for (int j = 0; j < 2; ++j) {
      cfg.S = j == 0 ? 55 : 1000;
      cap[j][0] = step_cap_fraction(render(g0, v0, cfg));
      cap[j][1] = step_cap_fraction(render(g12, v12, cfg));
      detail(fmt("step cap S = %d, R = e^2, 128^2: complete %.4f, s = 1.2 %.4f", cfg.S, cap[j][0], cap[j][1]));
    }
  }
  const double secs = seconds_since(t0);
  return {all && worst < 1e-12 && d1 < 1e-10 && have12 && cap[0][1] > cap[0][0] && solve_secs < 120,
          fmt("worst residual %.2g; s=1 vs direct %.2g; cap fraction at S=55 %.4f vs complete %.4f; %.0fs", worst,
              d1, cap[0][1], cap[0][0], secs)};
}

Outcome properties() {
  const auto t0 = std::chrono::steady_clock::now();
  int failed = 0;
  auto check = [&](bool c, const std::string& what) {
    if (!c) {
      ++failed;
      detail("failed: " + what);
    }
  };

  // hypgeom: equivariance and round trip.
  std::mt19937_64 rng(11);
  double equi = 0, trip = 0;
  for (int i = 0; i < 200; ++i) {
    const Mat4d gm = oracle::random_isometry(rng);
    const Vec4d x = oracle::random_point(rng), v = oracle::random_direction(rng, x);
    const double t = std::uniform_real_distribution<double>(0, 7)(rng);
    const auto [y, w] = geodesic_at(x, v, t);
    const auto [gy, gw] = geodesic_at(gm * x, gm * v, t);
    equi = std::max({equi, max_abs_diff(gy, gm * y) / (1 + std::abs(y[0])), max_abs_diff(gw, gm * w) / (1 + std::abs(w[0]))});
    const auto [x2, v2] = geodesic_at(y, -1.0 * w, t);
    trip = std::max({trip, max_abs_diff(x2, x), max_abs_diff(-1.0 * v2, v)});
  }
  detail(fmt("hypgeom: equivariance %.3g (relative), round trip t <= 7 %.3g", equi, trip));
  check(equi < 1e-9, "geodesic equivariance");
  check(trip < 1e-9, "geodesic round trip");

  // engine: bit-identical dumps across worker counts and the serial reference.
  const auto m004 = load_scene("m004");
  const View mv = default_view(m004->geom, ViewKind::Material, 0, 60);
  RenderConfig cfg;
  cfg.width = 96;
  cfg.height = 64;
  cfg.k = 2;
  cfg.R = 6;
  cfg.tile = 16;
  const std::string ref = encode_wfld(render_serial(m004->geom, mv, cfg));
  const int saved = omp_get_max_threads();
  bool same = true;
  for (int threads : {1, 2, 3, 8}) {
    omp_set_num_threads(threads);
    same = same && encode_wfld(render(m004->geom, mv, cfg)) == ref;
  }
  omp_set_num_threads(saved);
  detail(fmt("engine: WFLD bit-identical for 1, 2, 3, 8 workers and serial: %s", same ? "yes" : "no"));
  check(same, "determinism across worker counts");

  // basepoint shift: every weight moves by exactly the shift; std and KS do not move.
  for (ViewKind kind : {ViewKind::Material, ViewKind::Ideal}) {
    View a = default_view(m004->geom, kind), b = a;
    b.base_weight += 3;
    RenderConfig c2;
    c2.width = c2.height = 128;
    c2.R = 6;
    const auto fa = render(m004->geom, a, c2), fb = render(m004->geom, b, c2);
    bool exact = true;
    for (std::size_t i = 0; i < fa.samples.size(); ++i) exact = exact && fb.samples[i].weight - fa.samples[i].weight == 3;
    const auto sa = summarize(fa.samples), sb = summarize(fb.samples);
    exact = exact && sa.std == sb.std && sb.mean - sa.mean == 3 &&
            normality_test(sa).statistic == normality_test(sb).statistic;
    detail(fmt("basepoint shift +3 (%s view): exact %s", to_string(kind), exact ? "yes" : "no"));
    check(exact, "basepoint shift");
  }

  // edge cycles on every bundled structure, plus the filled one.
  for (const char* name : {"m004", "m122", "s789", "m122_4_-1"}) {
    const auto rep = validate(load_scene(name)->geom);
    const auto* e = rep.find("edge_cycle");
    detail(fmt("%s: edge cycle worst %.3g, validation %s", name, e ? e->worst : -1.0, rep.ok() ? "ok" : "failed"));
    check(e && rep.ok(), std::string("edge cycles ") + name);
  }
  {
    const auto m122 = load_manifold("m122");
    const auto filled = build_geometry_ideal(m122, solve_shapes(m122, {Filling{4, -1}}));
    check(validate(filled).ok(), "edge cycles on the filled structure");
  }

  // validator fault injection.
  auto bad = m004->geom;
  bad.tets[0].pairing[1](1, 2) += 1e-3;
  const auto r1 = validate(bad);
  auto w = m004->geom;
  w.tets[0].weights[1] += 1;
  const auto r2 = validate(w);
  const bool caught = !r1.find("pairing_inverse")->pass && r1.find("pairing_inverse")->location == "tet 0 face 1" &&
                      !r2.find("cocycle_edge")->pass && !r2.find("cocycle_antisymmetry")->pass;
  detail(fmt("fault injection: perturbed pairing and broken cocycle caught: %s", caught ? "yes" : "no"));
  check(caught, "fault injection");

  const double secs = seconds_since(t0);
  return {failed == 0 && secs < 120, fmt("%d failed checks; %.1fs", failed, secs)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gluing-equation solver", gluing_solver},
      {"ideal-view scaling identity", scaling_identity},
      {"CT polyline matches the sign boundary", ct_match},
      {"CLT on the m004 fiber class", clt},
      {"non-normal cusp class on s789", tails},
      {"pixel-mean convergence", pixel_mean},
      {"precision regression", precision},
      {"surgery path", surgery_path},
      {"property suites", properties},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::printf("criterion %zu: %s\n", i + 1, criteria[i].first);
    std::fflush(stdout);
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.summary.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
