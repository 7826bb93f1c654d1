#pragma once

// Hyperboloid model of H^3 in R^{1,3}, signature (-,+,+,+).
// Everything is templated on the scalar so the same kernels run in float,
// double and the wider reference types.

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <utility>

#include "hypertrace/scalar.hpp"

namespace hypertrace {

template <class T>
struct Vec4 {
  std::array<T, 4> c{};

  constexpr T& operator[](int i) { return c[i]; }
  constexpr const T& operator[](int i) const { return c[i]; }

  template <class U>
  Vec4<U> cast() const {
    return {{U(c[0]), U(c[1]), U(c[2]), U(c[3])}};
  }

  friend Vec4 operator+(const Vec4& a, const Vec4& b) {
    return {{a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]}};
  }
  friend Vec4 operator-(const Vec4& a, const Vec4& b) {
    return {{a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]}};
  }
  friend Vec4 operator-(const Vec4& a) { return {{-a[0], -a[1], -a[2], -a[3]}}; }
  friend Vec4 operator*(T s, const Vec4& a) {
    return {{s * a[0], s * a[1], s * a[2], s * a[3]}};
  }
  friend Vec4 operator*(const Vec4& a, T s) { return s * a; }
  friend Vec4 operator/(const Vec4& a, T s) {
    return {{a[0] / s, a[1] / s, a[2] / s, a[3] / s}};
  }
  friend bool operator==(const Vec4&, const Vec4&) = default;
};

using Vec4d = Vec4<double>;

// Row-major 4x4.
template <class T>
struct Mat4 {
  std::array<T, 16> m{};

  static constexpr Mat4 identity() {
    Mat4 r;
    r.m[0] = r.m[5] = r.m[10] = r.m[15] = T(1);
    return r;
  }

  constexpr T& operator()(int i, int j) { return m[4 * i + j]; }
  constexpr const T& operator()(int i, int j) const { return m[4 * i + j]; }

  template <class U>
  Mat4<U> cast() const {
    Mat4<U> r;
    for (int i = 0; i < 16; ++i) r.m[i] = U(m[i]);
    return r;
  }

  Vec4<T> col(int j) const { return {{m[j], m[4 + j], m[8 + j], m[12 + j]}}; }
  void set_col(int j, const Vec4<T>& v) {
    for (int i = 0; i < 4; ++i) m[4 * i + j] = v[i];
  }

  friend Vec4<T> operator*(const Mat4& a, const Vec4<T>& v) {
    Vec4<T> r;
    for (int i = 0; i < 4; ++i)
      r[i] = a.m[4 * i] * v[0] + a.m[4 * i + 1] * v[1] + a.m[4 * i + 2] * v[2] +
             a.m[4 * i + 3] * v[3];
    return r;
  }
  friend Mat4 operator*(const Mat4& a, const Mat4& b) {
    Mat4 r;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        T s = 0;
        for (int k = 0; k < 4; ++k) s += a.m[4 * i + k] * b.m[4 * k + j];
        r.m[4 * i + j] = s;
      }
    return r;
  }
  friend bool operator==(const Mat4&, const Mat4&) = default;
};

using Mat4d = Mat4<double>;

template <class T>
constexpr T minkowski_dot(const Vec4<T>& a, const Vec4<T>& b) {
  return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

// Strong wrappers. They carry no behaviour beyond documenting intent; the
// hot loops work on the raw Vec4.
template <class T>
struct MPoint {
  Vec4<T> x;
};
template <class T>
struct MDirection {
  Vec4<T> v;
};
template <class T>
struct Plane {
  Vec4<T> n;  // inside is <x,n> < 0
};
template <class T>
struct LightVector {
  Vec4<T> l;
};
template <class T>
struct Isometry {
  Mat4<T> m = Mat4<T>::identity();

  Isometry operator*(const Isometry& o) const { return {m * o.m}; }
  Vec4<T> operator()(const Vec4<T>& v) const { return m * v; }
};

using Isometryd = Isometry<double>;

// J M^T J, the inverse of an O(1,3) matrix.
template <class T>
Mat4<T> lorentz_inverse(const Mat4<T>& a) {
  Mat4<T> r;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      T s = ((i == 0) != (j == 0)) ? T(-1) : T(1);
      r(i, j) = s * a(j, i);
    }
  return r;
}

template <class T>
Isometry<T> inverse(const Isometry<T>& g) {
  return {lorentz_inverse(g.m)};
}

// Largest entry of |M^T J M - J|.
template <class T>
T lorentz_defect(const Mat4<T>& a) {
  T worst = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      T d = minkowski_dot(a.col(i), a.col(j)) - (i == j ? (i == 0 ? T(-1) : T(1)) : T(0));
      worst = std::max(worst, ScalarOps<T>::abs(d));
    }
  return worst;
}

template <class T>
T max_abs_diff(const Mat4<T>& a, const Mat4<T>& b) {
  T worst = 0;
  for (int i = 0; i < 16; ++i) worst = std::max(worst, ScalarOps<T>::abs(a.m[i] - b.m[i]));
  return worst;
}

template <class T>
T max_abs_diff(const Vec4<T>& a, const Vec4<T>& b) {
  T worst = 0;
  for (int i = 0; i < 4; ++i) worst = std::max(worst, ScalarOps<T>::abs(a[i] - b[i]));
  return worst;
}

template <class T>
std::pair<Vec4<T>, Vec4<T>> geodesic_at(const Vec4<T>& x, const Vec4<T>& v, T t) {
  if (t == T(0)) return {x, v};
  const T ch = ScalarOps<T>::cosh(t), sh = ScalarOps<T>::sinh(t);
  return {ch * x + sh * v, sh * x + ch * v};
}

template <class T>
std::pair<MPoint<T>, MDirection<T>> geodesic_at(const MPoint<T>& x, const MDirection<T>& v, T t) {
  auto [y, w] = geodesic_at(x.x, v.v, t);
  return {{y}, {w}};
}

// Push x back onto the hyperboloid and v onto its unit tangent sphere.
template <class T>
void renormalize(Vec4<T>& x, Vec4<T>& v) {
  T nx = ScalarOps<T>::sqrt(ScalarOps<T>::abs(minkowski_dot(x, x)));
  x = x / nx;
  if (x[0] < 0) x = -x;
  v = v + minkowski_dot(x, v) * x;
  v = v / ScalarOps<T>::sqrt(minkowski_dot(v, v));
}

inline constexpr double kExitTMin = 1e-9;

// Smallest t > t_min with <gamma(t), n> = 0. <gamma(t),n> = a cosh t + b sinh t.
template <class T>
std::optional<T> exit_parameter(const Vec4<T>& x, const Vec4<T>& v, const Vec4<T>& n,
                                T t_min = T(kExitTMin)) {
  const T a = minkowski_dot(x, n);
  const T b = minkowski_dot(v, n);
  // tanh t = -a/b must lie in (0, 1).
  if (!(b > -a) || !(b > a)) return std::nullopt;
  // t = atanh(-a/b) = log((b - a)/(b + a)) / 2
  const T t = ScalarOps<T>::log((b - a) / (b + a)) / T(2);
  if (!(t > t_min)) return std::nullopt;
  return t;
}

template <class T>
std::optional<T> exit_parameter(const MPoint<T>& x, const MDirection<T>& v, const Plane<T>& n) {
  return exit_parameter(x.x, v.v, n.n);
}

// Distance from x to the geodesic with ideal endpoints l1, l2:
// cosh^2 d = -2 <x,l1><x,l2> / <l1,l2>.
template <class T>
T dist_point_to_ideal_geodesic(const Vec4<T>& x, const Vec4<T>& l1, const Vec4<T>& l2) {
  const T p = minkowski_dot(l1, l2);
  const T scale = ScalarOps<T>::abs(l1[0] * l2[0]);
  if (!(ScalarOps<T>::abs(p) > T(1e-14) * scale))
    throw std::invalid_argument("dist_point_to_ideal_geodesic: degenerate edge endpoints");
  const T s2 = T(-2) * minkowski_dot(x, l1) * minkowski_dot(x, l2) / p - T(1);
  return ScalarOps<T>::asinh(ScalarOps<T>::sqrt(s2 > T(0) ? s2 : T(0)));
}

template <class T>
std::array<T, 3> klein_project(const Vec4<T>& x) {
  return {x[1] / x[0], x[2] / x[0], x[3] / x[0]};
}

// Boundary identification with C u {inf}: the light vector of the Hermitian
// matrix (z,1)(z,1)^*, i.e. [[x0+x3, x1+i x2], [x1-i x2, x0-x3]].
struct BoundaryPoint {
  bool infinite = false;
  std::complex<double> z{};
};

inline Vec4d light_vector(const BoundaryPoint& p) {
  if (p.infinite) return {{0.5, 0.0, 0.0, 0.5}};
  const double r2 = std::norm(p.z);
  return {{(r2 + 1) / 2, p.z.real(), p.z.imag(), (r2 - 1) / 2}};
}

inline Vec4d light_vector(std::complex<double> z) { return light_vector(BoundaryPoint{false, z}); }

inline BoundaryPoint upper_half_space(const Vec4d& l) {
  const double den = l[0] - l[3];
  if (std::abs(den) <= 1e-13 * std::abs(l[0])) return {true, {}};
  return {false, {l[1] / den, l[2] / den}};
}

// Euclidean 4D cross product of three vectors, turned into a Minkowski
// normal: the result n satisfies <n,a> = <n,b> = <n,c> = 0.
template <class T>
Vec4<T> minkowski_normal(const Vec4<T>& a, const Vec4<T>& b, const Vec4<T>& c) {
  auto det3 = [](T a00, T a01, T a02, T a10, T a11, T a12, T a20, T a21, T a22) {
    return a00 * (a11 * a22 - a12 * a21) - a01 * (a10 * a22 - a12 * a20) +
           a02 * (a10 * a21 - a11 * a20);
  };
  Vec4<T> m;
  m[0] = det3(a[1], a[2], a[3], b[1], b[2], b[3], c[1], c[2], c[3]);
  m[1] = -det3(a[0], a[2], a[3], b[0], b[2], b[3], c[0], c[2], c[3]);
  m[2] = det3(a[0], a[1], a[3], b[0], b[1], b[3], c[0], c[1], c[3]);
  m[3] = -det3(a[0], a[1], a[2], b[0], b[1], b[2], c[0], c[1], c[2]);
  m[0] = -m[0];
  return m;
}

// Unit spacelike normal of the plane through a, b, c, oriented so `inside`
// has a negative pairing with it.
template <class T>
Vec4<T> plane_through(const Vec4<T>& a, const Vec4<T>& b, const Vec4<T>& c, const Vec4<T>& inside) {
  Vec4<T> n = minkowski_normal(a, b, c);
  const T nn = minkowski_dot(n, n);
  if (!(nn > T(0))) throw std::invalid_argument("plane_through: points do not span a plane");
  n = n / ScalarOps<T>::sqrt(nn);
  if (minkowski_dot(n, inside) > 0) n = -n;
  return n;
}

template <class T>
T determinant(const Mat4<T>& a) {
  T d = 0;
  for (int j = 0; j < 4; ++j) {
    T minor[9];
    int k = 0;
    for (int r = 1; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        if (c != j) minor[k++] = a(r, c);
    T m3 = minor[0] * (minor[4] * minor[8] - minor[5] * minor[7]) -
           minor[1] * (minor[3] * minor[8] - minor[5] * minor[6]) +
           minor[2] * (minor[3] * minor[7] - minor[4] * minor[6]);
    d += ((j % 2) ? -a(0, j) : a(0, j)) * m3;
  }
  return d;
}

// Hyperbolic translation along the unit tangent u at x by distance d.
inline Mat4d translation(const Vec4d& x, const Vec4d& u, double d) {
  // Acts as the identity on the orthogonal complement of span(x, u).
  Mat4d g = Mat4d::identity();
  const double ch = std::cosh(d) - 1, sh = std::sinh(d);
  for (int j = 0; j < 4; ++j) {
    Vec4d e{};
    e[j] = 1;
    // Components of e along x and u (x timelike, u spacelike, orthonormal).
    const double ex = -minkowski_dot(e, x), eu = minkowski_dot(e, u);
    Vec4d img = e + (ex * ch + eu * sh) * x + (ex * sh + eu * ch) * u;
    g.set_col(j, img);
  }
  return g;
}

// Rotation by angle a in the tangent 2-plane span(e1, e2) at a point
// (e1, e2 orthonormal spacelike, both orthogonal to the point).
inline Mat4d rotation(const Vec4d& e1, const Vec4d& e2, double a) {
  Mat4d g = Mat4d::identity();
  const double c = std::cos(a) - 1, s = std::sin(a);
  for (int j = 0; j < 4; ++j) {
    Vec4d e{};
    e[j] = 1;
    const double p1 = minkowski_dot(e, e1), p2 = minkowski_dot(e, e2);
    Vec4d img = e + (p1 * c - p2 * s) * e1 + (p1 * s + p2 * c) * e2;
    g.set_col(j, img);
  }
  return g;
}

}  // namespace hypertrace
