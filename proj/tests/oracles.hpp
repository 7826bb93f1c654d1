#pragma once

// Independent numerical oracles used by the tests. Deliberately naive:
// bracketing and quadrature rather than closed forms.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "hypertrace/hypgeom.hpp"

namespace oracle {

inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double golden_min(const std::function<double(double)>& f, double a, double b, int iters = 300) {
  const double g = (std::sqrt(5.0) - 1) / 2;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return f(0.5 * (a + b));
}

// Lobachevsky function L(theta) = -int_0^theta log|2 sin t| dt by adaptive
// Simpson after removing the log singularity at the origin:
// log|2 sin t| = log t + log|2 sin t / t|, and int_0^x log t = x log x - x.
inline double lobachevsky(double theta) {
  theta = std::fmod(theta, std::numbers::pi);
  if (theta < 0) theta += std::numbers::pi;
  auto smooth = [](double t) { return t == 0 ? std::log(2.0) : std::log(std::abs(2 * std::sin(t) / t)); };
  std::function<double(double, double, double, double, double, int)> simpson =
      [&](double a, double b, double fa, double fm, double fb, int depth) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const double flm = smooth(lm), frm = smooth(rm);
        const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
        const double left = (m - a) / 6 * (fa + 4 * flm + fm);
        const double right = (b - m) / 6 * (fm + 4 * frm + fb);
        if (depth > 40 || std::abs(left + right - whole) < 1e-15) return left + right;
        return simpson(a, m, fa, flm, fm, depth + 1) + simpson(m, b, fm, frm, fb, depth + 1);
      };
  // 2 sin t / t has a zero at t = pi; integrate up to theta < pi only, and
  // split the range so the near-pi log singularity is handled by recursion.
  if (theta == 0) return 0;
  const double x = theta;
  double integral_smooth = 0;
  const int pieces = 64;
  for (int i = 0; i < pieces; ++i) {
    const double a = x * i / pieces, b = x * (i + 1) / pieces;
    integral_smooth += simpson(a, b, smooth(a), smooth(0.5 * (a + b)), smooth(b), 0);
  }
  return -(x * std::log(x) - x + integral_smooth);
}

inline double ideal_volume(std::complex<double> z) {
  const double a = std::arg(z), b = std::arg(1.0 / (1.0 - z)), c = std::arg((z - 1.0) / z);
  return lobachevsky(a) + lobachevsky(b) + lobachevsky(c);
}

using hypertrace::Vec4d;

// Random point on the hyperboloid, distance at most r from the origin.
inline Vec4d random_point(std::mt19937_64& rng, double r = 2) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0, r);
  Vec4d d{{0, n(rng), n(rng), n(rng)}};
  const double len = std::sqrt(d[1] * d[1] + d[2] * d[2] + d[3] * d[3]);
  const double s = u(rng);
  return {{std::cosh(s), std::sinh(s) * d[1] / len, std::sinh(s) * d[2] / len, std::sinh(s) * d[3] / len}};
}

// Random unit tangent vector at x.
inline Vec4d random_direction(std::mt19937_64& rng, const Vec4d& x) {
  std::normal_distribution<double> n;
  Vec4d v{{n(rng), n(rng), n(rng), n(rng)}};
  v = v + hypertrace::minkowski_dot(x, v) * x;
  return v / std::sqrt(hypertrace::minkowski_dot(v, v));
}

// Random orientation-preserving isometry: translation then rotation.
inline hypertrace::Mat4d random_isometry(std::mt19937_64& rng) {
  using namespace hypertrace;
  const Vec4d o{{1, 0, 0, 0}};
  Mat4d g = Mat4d::identity();
  for (int k = 0; k < 3; ++k) {
    const Vec4d x = g * o;
    const Vec4d u = random_direction(rng, x);
    std::uniform_real_distribution<double> d(0, 1.5), a(0, 6.28);
    g = translation(x, u, d(rng)) * g;
    Vec4d e1 = random_direction(rng, x);
    Vec4d e2 = random_direction(rng, x);
    e2 = e2 - minkowski_dot(e2, e1) * e1;
    e2 = e2 / std::sqrt(minkowski_dot(e2, e2));
    g = rotation(e1, e2, a(rng)) * g;
  }
  return g;
}

}  // namespace oracle
