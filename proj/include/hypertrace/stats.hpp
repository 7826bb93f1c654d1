#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hypertrace/engine.hpp"

namespace hypertrace {

// A square patch of a view sampled on an m x m grid. `centre` is a screen
// point of the view; `side` is the patch width in the view's fov units
// (degrees of arc for a material view, flat or Klein width otherwise).
struct RegionSpec {
  View view;
  ScreenPoint centre{};
  double side = 0.1;
  int m = 100;
};

struct Histogram {
  double origin = 0;  // bucket i covers [origin + i*width, origin + (i+1)*width)
  double width = 1;
  std::vector<std::uint64_t> counts;
};

struct SampleStats {
  std::size_t n = 0;
  double mean = 0;
  double std = 0;  // unbiased
  Histogram histogram;
  double ks_statistic = 0;
  bool lattice = false;  // values all differ by integers
  std::size_t failed = 0;
  std::size_t capped = 0;  // rays that hit the step cap (kept, with their partial weight)
  std::vector<double> values;
};

// Successful samples are kept in order; throws NumericalError when 0.1% or
// more of the rays failed.
SampleStats summarize(const std::vector<Sample>& samples, double bucket_width = 1);
SampleStats summarize_values(std::vector<double> values, double bucket_width = 1);

// The view and screen points whose rays make up the region.
std::pair<View, std::vector<ScreenPoint>> region_rays(const RegionSpec& region);

SampleStats sample_region(const GeomTriangulation& geom, const RegionSpec& region, const RenderConfig& cfg);

struct CurveRow {
  double R = 0, mean = 0, std = 0;
  std::size_t n = 0, failed = 0, capped = 0;
};

std::vector<CurveRow> mean_std_curve(const GeomTriangulation& geom, const RegionSpec& region,
                                     const std::vector<double>& R_list, const RenderConfig& cfg);
std::string curve_csv(const std::vector<CurveRow>& rows);

// Two-sided Kolmogorov-Smirnov test against Normal(mean, std). Lattice data
// are compared at the half-integers against a normal whose variance has the
// rounding term 1/12 removed (Sheppard), since a continuous CDF against an
// integer-valued sample fails at any size.
struct NormalityResult {
  bool skipped = false;  // std = 0
  double statistic = 0;
  double p = 1;
  bool pass = false;
};
NormalityResult normality_test(const SampleStats& stats);

// Asymptotic Kolmogorov tail with Stephens' small-sample adjustment.
double ks_p_value(double D, std::size_t n);

// Uniform screen points over the frame of a width x height view
// (aspect only matters), drawn from (seed, counter).
std::vector<ScreenPoint> uniform_screen_points(int width, int height, std::size_t n, std::uint64_t seed);

struct SigmaEstimate {
  double T = 0;
  double sigma = 0;
  double lo = 0, hi = 0;  // 95% bootstrap interval
  SampleStats stats;
};

SigmaEstimate estimate_sigma(const GeomTriangulation& geom, const View& view, double T, std::size_t n_samples,
                             std::uint64_t seed, const RenderConfig& cfg = {}, int resamples = 200);

// Whether two estimates agree: difference within the combined half-widths
// of the two intervals (sqrt(h1^2 + h2^2)).
bool sigma_agree(const SigmaEstimate& a, const SigmaEstimate& b);

struct ConvergenceRow {
  double R1 = 0, R2 = 0;
  double mean1 = 0, mean2 = 0;
  double diff = 0;
  double std_error = 0;  // of the paired differences' mean
  bool pass = false;     // |diff| < 2 standard errors
};

std::vector<ConvergenceRow> pixel_mean_convergence(const GeomTriangulation& geom, const RegionSpec& region,
                                                   const std::vector<std::pair<double, double>>& R_pairs,
                                                   const RenderConfig& cfg);

// Pearson correlation of single-sample values at radii R1 and R2 over the
// pixel centres of a width x height frame of the view.
double single_sample_correlation(const GeomTriangulation& geom, const View& view, int width, int height, double R1,
                                 double R2, const RenderConfig& cfg);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

// Fixed-order pairwise summation, independent of thread count.
double pairwise_sum(const double* x, std::size_t n);

std::string stats_json(const SampleStats& s, const std::optional<NormalityResult>& normality = std::nullopt);

}  // namespace hypertrace
