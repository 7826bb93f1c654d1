#include "hypertrace/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace hypertrace {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

void check_region(const RegionSpec& r) {
  if (r.m < 1 || r.m > 16384) throw InputError("region: m must be in [1, 16384]");
  if (!(r.side > 0) || !std::isfinite(r.side)) throw InputError("region: side must be positive");
  const double half = r.view.kind == ViewKind::Material ? 0 : r.side / r.view.fov;
  if (std::abs(r.centre.x) + half > 1 + 1e-12 || std::abs(r.centre.y) + half > 1 + 1e-12)
    throw InputError("region: footprint leaves the view frame");
  if (r.view.kind == ViewKind::Material && r.side >= 180) throw InputError("region: side must be below 180 degrees");
}

std::string num(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.17g", x);
  return b;
}

}  // namespace

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

SampleStats summarize_values(std::vector<double> values, double bucket_width) {
  if (!(bucket_width > 0)) throw InputError("histogram bucket width must be positive");
  SampleStats s;
  s.n = values.size();
  s.values = std::move(values);
  if (s.n == 0) return s;
  // Work with differences from the first value: exact for lattice data and
  // unchanged when every value is shifted by the same integer.
  const double x0 = s.values[0];
  std::vector<double> d(s.n);
  s.lattice = true;
  for (std::size_t i = 0; i < s.n; ++i) {
    d[i] = s.values[i] - x0;
    s.lattice = s.lattice && d[i] == std::round(d[i]);
  }
  const double md = pairwise_sum(d.data(), s.n) / s.n;
  s.mean = x0 + md;
  std::vector<double> sq(s.n);
  for (std::size_t i = 0; i < s.n; ++i) sq[i] = (d[i] - md) * (d[i] - md);
  s.std = s.n > 1 ? std::sqrt(pairwise_sum(sq.data(), s.n) / (s.n - 1)) : 0;

  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  s.histogram.width = bucket_width;
  s.histogram.origin = x0 + *lo - bucket_width / 2;
  s.histogram.counts.assign(static_cast<std::size_t>(std::floor((*hi - *lo) / bucket_width + 0.5)) + 1, 0);
  for (double v : d) {
    auto b = static_cast<std::size_t>(std::floor((v - *lo) / bucket_width + 0.5));
    s.histogram.counts[std::min(b, s.histogram.counts.size() - 1)]++;
  }

  if (s.std > 0) {
    std::sort(d.begin(), d.end());
    const double n = static_cast<double>(s.n);
    double D = 0;
    if (s.lattice) {
      const double var_c = s.std * s.std - 1.0 / 12;
      const double sc = var_c > 0 ? std::sqrt(var_c) : s.std;
      std::size_t i = 0;
      for (double k = d.front() - 1; k <= d.back(); k += 1) {
        while (i < d.size() && d[i] <= k) ++i;
        D = std::max(D, std::abs(i / n - normal_cdf((k + 0.5 - md) / sc)));
      }
    } else {
      for (std::size_t i = 0; i < s.n; ++i) {
        const double F = normal_cdf((d[i] - md) / s.std);
        D = std::max({D, (i + 1) / n - F, F - i / n});
      }
    }
    s.ks_statistic = D;
  }
  return s;
}

SampleStats summarize(const std::vector<Sample>& samples, double bucket_width) {
  std::vector<double> v;
  v.reserve(samples.size());
  std::size_t failed = 0, capped = 0;
  for (const auto& s : samples) {
    if (s.tag == Termination::Failed) {
      ++failed;
      continue;
    }
    capped += s.tag == Termination::RayBudget;
    v.push_back(s.weight);
  }
  if (failed * 1000 >= samples.size() && failed > 0)
    throw NumericalError(std::to_string(failed) + " of " + std::to_string(samples.size()) +
                         " rays failed (limit 0.1%)");
  SampleStats st = summarize_values(std::move(v), bucket_width);
  st.failed = failed;
  st.capped = capped;
  return st;
}

std::pair<View, std::vector<ScreenPoint>> region_rays(const RegionSpec& r) {
  check_region(r);
  std::vector<ScreenPoint> pts;
  pts.reserve(static_cast<std::size_t>(r.m) * r.m);
  View v = r.view;
  if (v.kind == ViewKind::Material) {
    // Re-aim at the centre; the region is then the whole frame of a view
    // with fov = side.
    auto ray = screen_ray(v, r.centre);
    v.forward = ray->second;
    v.fov = r.side;
    orthonormalize(v);
    for (int j = 0; j < r.m; ++j)
      for (int i = 0; i < r.m; ++i) pts.push_back({2 * (i + 0.5) / r.m - 1, (r.m - 2 * (j + 0.5)) / r.m});
  } else {
    const double s = r.side / v.fov;
    for (int j = 0; j < r.m; ++j)
      for (int i = 0; i < r.m; ++i)
        pts.push_back({r.centre.x + s * (2 * (i + 0.5) / r.m - 1), r.centre.y + s * (r.m - 2 * (j + 0.5)) / r.m});
  }
  return {v, pts};
}

SampleStats sample_region(const GeomTriangulation& geom, const RegionSpec& region, const RenderConfig& cfg) {
  check_config(cfg);
  const auto [v, pts] = region_rays(region);
  return summarize(trace_points(geom, v, cfg, pts));
}

std::vector<CurveRow> mean_std_curve(const GeomTriangulation& geom, const RegionSpec& region,
                                     const std::vector<double>& R_list, const RenderConfig& cfg) {
  if (!std::is_sorted(R_list.begin(), R_list.end())) throw InputError("R list must be ascending");
  const auto [v, pts] = region_rays(region);
  std::vector<CurveRow> rows;
  for (double R : R_list) {
    RenderConfig c = cfg;
    c.R = R;
    check_config(c);
    const auto s = summarize(trace_points(geom, v, c, pts));
    rows.push_back({R, s.mean, s.std, s.n, s.failed, s.capped});
  }
  return rows;
}

std::string curve_csv(const std::vector<CurveRow>& rows) {
  std::string out = "R,mean,std,n,failed,capped\n";
  for (const auto& r : rows)
    out += num(r.R) + "," + num(r.mean) + "," + num(r.std) + "," + std::to_string(r.n) + "," +
           std::to_string(r.failed) + "," + std::to_string(r.capped) + "\n";
  return out;
}

double ks_p_value(double D, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * D;
  if (lambda < 0.2) return 1;
  double p = 0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    p += (j % 2 ? 2 : -2) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

NormalityResult normality_test(const SampleStats& s) {
  if (s.n < 10000) throw InputError("normality test needs at least 10^4 samples, got " + std::to_string(s.n));
  NormalityResult r;
  if (s.std == 0) {
    r.skipped = true;
    return r;
  }
  r.statistic = s.ks_statistic;
  r.p = ks_p_value(s.ks_statistic, s.n);
  r.pass = r.p > 0.01;
  return r;
}

std::vector<ScreenPoint> uniform_screen_points(int width, int height, std::size_t n, std::uint64_t seed) {
  std::vector<ScreenPoint> pts(n);
  const double aspect = static_cast<double>(height) / width;
  for (std::size_t i = 0; i < n; ++i)
    pts[i] = {2 * uniform_at(seed, 2 * i) - 1, (2 * uniform_at(seed, 2 * i + 1) - 1) * aspect};
  return pts;
}

SigmaEstimate estimate_sigma(const GeomTriangulation& geom, const View& view, double T, std::size_t n_samples,
                             std::uint64_t seed, const RenderConfig& cfg, int resamples) {
  if (!(T >= 4)) throw InputError("estimate_sigma needs T >= 4");
  if (n_samples < 10000) throw InputError("estimate_sigma needs at least 10^4 samples");
  if (resamples < 10) throw InputError("at least 10 bootstrap resamples");
  RenderConfig c = cfg;
  c.R = T;
  check_config(c);
  SigmaEstimate out;
  out.T = T;
  out.stats = summarize(trace_points(geom, view, c, uniform_screen_points(c.width, c.height, n_samples, seed)));
  const double rt = std::sqrt(T);
  out.sigma = out.stats.std / rt;

  const auto& x = out.stats.values;
  const std::size_t n = x.size();
  std::vector<double> boot(resamples);
  const std::uint64_t bseed = splitmix64(seed ^ 0x626f6f7473747261ULL);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < resamples; ++b) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(uniform_at(bseed, static_cast<std::uint64_t>(b) * n + i) * n);
      y[i] = x[std::min(j, n - 1)] - x[0];
    }
    const double m = pairwise_sum(y.data(), n) / n;
    for (auto& v : y) v = (v - m) * (v - m);
    boot[b] = std::sqrt(pairwise_sum(y.data(), n) / (n - 1)) / rt;
  }
  std::sort(boot.begin(), boot.end());
  const auto at = [&](double q) {
    const double pos = q * (resamples - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - i;
    return i + 1 < boot.size() ? boot[i] * (1 - f) + boot[i + 1] * f : boot[i];
  };
  out.lo = at(0.025);
  out.hi = at(0.975);
  return out;
}

bool sigma_agree(const SigmaEstimate& a, const SigmaEstimate& b) {
  const double ha = (a.hi - a.lo) / 2, hb = (b.hi - b.lo) / 2;
  return std::abs(a.sigma - b.sigma) <= std::hypot(ha, hb);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw InputError("pearson: need two equal-length samples");
  const std::size_t n = a.size();
  const double ma = pairwise_sum(a.data(), n) / n, mb = pairwise_sum(b.data(), n) / n;
  std::vector<double> ab(n), aa(n), bb(n);
  for (std::size_t i = 0; i < n; ++i) {
    ab[i] = (a[i] - ma) * (b[i] - mb);
    aa[i] = (a[i] - ma) * (a[i] - ma);
    bb[i] = (b[i] - mb) * (b[i] - mb);
  }
  const double den = std::sqrt(pairwise_sum(aa.data(), n) * pairwise_sum(bb.data(), n));
  return den > 0 ? pairwise_sum(ab.data(), n) / den : 0;
}

std::vector<ConvergenceRow> pixel_mean_convergence(const GeomTriangulation& geom, const RegionSpec& region,
                                                   const std::vector<std::pair<double, double>>& R_pairs,
                                                   const RenderConfig& cfg) {
  const auto [v, pts] = region_rays(region);
  std::vector<ConvergenceRow> rows;
  for (const auto& [R1, R2] : R_pairs) {
    if (!(R1 < R2)) throw InputError("R pairs must be ascending");
    RenderConfig c1 = cfg, c2 = cfg;
    c1.R = R1;
    c2.R = R2;
    check_config(c1);
    check_config(c2);
    const auto s1 = trace_points(geom, v, c1, pts), s2 = trace_points(geom, v, c2, pts);
    std::vector<double> a, b, d;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < s1.size(); ++i) {
      if (s1[i].tag == Termination::Failed || s2[i].tag == Termination::Failed) {
        ++failed;
        continue;
      }
      a.push_back(s1[i].weight);
      b.push_back(s2[i].weight);
      d.push_back(s2[i].weight - s1[i].weight);
    }
    if (failed > 0 && failed * 1000 >= s1.size())
      throw NumericalError(std::to_string(failed) + " rays failed (limit 0.1%)");
    ConvergenceRow row;
    row.R1 = R1;
    row.R2 = R2;
    const auto sa = summarize_values(a), sb = summarize_values(b), sd = summarize_values(d);
    row.mean1 = sa.mean;
    row.mean2 = sb.mean;
    row.diff = sd.mean;
    row.std_error = sd.n > 0 ? sd.std / std::sqrt(static_cast<double>(sd.n)) : 0;
    row.pass = row.diff == 0 || std::abs(row.diff) < 2 * row.std_error;
    rows.push_back(row);
  }
  return rows;
}

double single_sample_correlation(const GeomTriangulation& geom, const View& view, int width, int height, double R1,
                                 double R2, const RenderConfig& cfg) {
  RenderConfig c = cfg;
  c.width = width;
  c.height = height;
  c.k = 1;
  c.jitter = false;
  std::vector<ScreenPoint> pts;
  for (int r = 0; r < height; ++r)
    for (int col = 0; col < width; ++col) pts.push_back(pixel_sample(c, col, r, 0));
  c.R = R1;
  check_config(c);
  const auto s1 = trace_points(geom, view, c, pts);
  c.R = R2;
  check_config(c);
  const auto s2 = trace_points(geom, view, c, pts);
  std::vector<double> a, b;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (s1[i].tag != Termination::Failed && s2[i].tag != Termination::Failed) {
      a.push_back(s1[i].weight);
      b.push_back(s2[i].weight);
    }
  return pearson(a, b);
}

std::string stats_json(const SampleStats& s, const std::optional<NormalityResult>& nt) {
  std::ostringstream o;
  o << "{\"n\": " << s.n << ", \"mean\": " << num(s.mean) << ", \"std\": " << num(s.std)
    << ", \"ks_statistic\": " << num(s.ks_statistic) << ", \"lattice\": " << (s.lattice ? "true" : "false")
    << ", \"failed\": " << s.failed << ", \"capped\": " << s.capped << ", \"histogram\": {\"origin\": "
    << num(s.histogram.origin) << ", \"width\": " << num(s.histogram.width) << ", \"counts\": [";
  for (std::size_t i = 0; i < s.histogram.counts.size(); ++i) o << (i ? ", " : "") << s.histogram.counts[i];
  o << "]}";
  if (nt) {
    o << ", \"normality\": {\"skipped\": " << (nt->skipped ? "true" : "false") << ", \"statistic\": "
      << num(nt->statistic) << ", \"p\": " << num(nt->p) << ", \"pass\": " << (nt->pass ? "true" : "false") << "}";
  }
  o << "}";
  return o.str();
}

}  // namespace hypertrace
