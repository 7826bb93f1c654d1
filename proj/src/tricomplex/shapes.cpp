#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "hypertrace/tricomplex.hpp"

namespace hypertrace {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Real-coefficient form of a row, so filled cusps can combine p and q.
struct LinearRow {
  std::vector<std::array<double, 3>> abc;
  double target = 0;  // multiples of pi i
};

LinearRow as_linear(const EquationRow& r) {
  LinearRow l;
  l.target = r.target;
  for (const auto& t : r.abc) l.abc.push_back({double(t[0]), double(t[1]), double(t[2])});
  return l;
}

std::vector<LinearRow> system_rows(const CombTriangulation& tri,
                                   const std::vector<std::optional<Filling>>& filling) {
  const auto& eq = tri.equations;
  std::vector<LinearRow> rows;
  for (const auto& r : eq.edge_rows) rows.push_back(as_linear(r));
  bool any_fill = false;
  for (const auto& f : filling) any_fill = any_fill || f.has_value();
  if (!any_fill) {
    for (const auto& r : eq.completeness_rows) rows.push_back(as_linear(r));
    return rows;
  }
  const std::size_t cusps = eq.cusp_rows_meridian.size();
  if (filling.size() > cusps || eq.cusp_rows_longitude.size() != cusps)
    throw InputError("filling given for " + std::to_string(filling.size()) + " cusps but " + tri.name +
                     " has cusp rows for " + std::to_string(cusps));
  for (std::size_t c = 0; c < cusps; ++c) {
    const auto& m = eq.cusp_rows_meridian[c];
    const auto& l = eq.cusp_rows_longitude[c];
    if (c < filling.size() && filling[c]) {
      const double p = filling[c]->p, q = filling[c]->q;
      LinearRow row;
      row.target = 2;
      for (std::size_t t = 0; t < m.abc.size(); ++t)
        row.abc.push_back({p * m.abc[t][0] + q * l.abc[t][0], p * m.abc[t][1] + q * l.abc[t][1],
                           p * m.abc[t][2] + q * l.abc[t][2]});
      rows.push_back(row);
    } else {
      rows.push_back(as_linear(m));
      rows.push_back(as_linear(l));
    }
  }
  return rows;
}

// log z, log z' = -log(1 - z), log z'' = log(z - 1) - log z.
std::array<cd, 3> shape_logs(cd z) {
  const cd lz = std::log(z);
  return {lz, -std::log(1.0 - z), std::log(z - 1.0) - lz};
}

std::array<cd, 3> shape_log_derivs(cd z) {
  return {1.0 / z, 1.0 / (1.0 - z), 1.0 / (z * (z - 1.0))};
}

cd row_value(const LinearRow& r, const std::vector<cd>& z) {
  cd s = 0;
  for (std::size_t t = 0; t < z.size(); ++t) {
    const auto lg = shape_logs(z[t]);
    s += r.abc[t][0] * lg[0] + r.abc[t][1] * lg[1] + r.abc[t][2] * lg[2];
  }
  return s - cd(0, r.target * kPi);
}

double sq_residual(const std::vector<LinearRow>& rows, const std::vector<cd>& z) {
  double s = 0;
  for (const auto& r : rows) s += std::norm(row_value(r, z));
  return s;
}

double max_residual(const std::vector<LinearRow>& rows, const std::vector<cd>& z) {
  double worst = 0;
  for (const auto& r : rows) worst = std::max(worst, std::abs(row_value(r, z)));
  return worst;
}

}  // namespace

double evaluate_row(const EquationRow& row, const std::vector<cd>& z, cd* value) {
  const cd v = row_value(as_linear(row), z);
  if (value) *value = v;
  return std::abs(v);
}

double equation_residual(const CombTriangulation& tri,
                         const std::vector<std::optional<Filling>>& filling,
                         const std::vector<cd>& z) {
  return max_residual(system_rows(tri, filling), z);
}

ShapeAssignment solve_shapes(const CombTriangulation& tri,
                             const std::vector<std::optional<Filling>>& filling,
                             const std::optional<ShapeAssignment>& initial) {
  const int n = tri.n_tets();
  if (tri.equations.edge_rows.empty())
    throw InputError(tri.name + ": no gluing equation rows (material data cannot be shape-solved)");
  const auto rows = system_rows(tri, filling);
  const int m = static_cast<int>(rows.size());

  ShapeAssignment out;
  out.shapes = initial ? initial->shapes : std::vector<cd>(n, cd(0, 1));
  if (static_cast<int>(out.shapes.size()) != n) throw InputError("initial shapes: wrong count");
  for (int t = 0; t < n; ++t)
    if (!(out.shapes[t].imag() > 0)) throw InputError("initial shapes: Im z must be positive");

  constexpr double kTol = 1e-12;
  constexpr int kMaxIter = 100;
  double res = max_residual(rows, out.shapes);
  out.residual_history.push_back(res);

  Eigen::MatrixXcd J(m, n);
  Eigen::VectorXcd F(m);
  while (res >= kTol) {
    if (out.iterations >= kMaxIter) {
      std::ostringstream s;
      s << tri.name << ": Newton did not converge in " << kMaxIter << " iterations (residual " << res
        << ")";
      throw NumericalError(s.str());
    }
    ++out.iterations;
    std::vector<std::array<cd, 3>> d(n);
    for (int t = 0; t < n; ++t) d[t] = shape_log_derivs(out.shapes[t]);
    for (int r = 0; r < m; ++r) {
      F(r) = row_value(rows[r], out.shapes);
      for (int t = 0; t < n; ++t)
        J(r, t) = rows[r].abc[t][0] * d[t][0] + rows[r].abc[t][1] * d[t][1] + rows[r].abc[t][2] * d[t][2];
    }
    const Eigen::VectorXcd step = J.completeOrthogonalDecomposition().solve(-F);

    // Backtrack until the residual drops and no shape loses more than half
    // its height in one step; without the second guard Newton from z = i can
    // slide into a degenerate (flat) solution.
    double alpha = 1;
    std::vector<cd> trial(n);
    double trial_res = res;
    bool accepted = false;
    const double merit = sq_residual(rows, out.shapes);
    for (int k = 0; k < 40; ++k, alpha /= 2) {
      bool upper = true;
      for (int t = 0; t < n; ++t) {
        trial[t] = out.shapes[t] + alpha * step(t);
        upper = upper && trial[t].imag() > 0.5 * out.shapes[t].imag();
      }
      if (!upper) continue;
      trial_res = max_residual(rows, trial);
      if (sq_residual(rows, trial) < merit) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      std::ostringstream s;
      s << tri.name << ": Newton stalled at residual " << res;
      throw NumericalError(s.str());
    }
    out.shapes = trial;
    res = trial_res;
    out.residual_history.push_back(res);
    for (int t = 0; t < n; ++t)
      if (out.shapes[t].imag() < 1e-9) {
        std::ostringstream s;
        s << tri.name << ": shape of tet " << t << " degenerated to the real axis (z = "
          << out.shapes[t].real() << (out.shapes[t].imag() < 0 ? "" : "+") << out.shapes[t].imag()
          << "i)";
        throw NumericalError(s.str());
      }
  }
  out.residual = res;
  return out;
}

// zeta(2k) for k = 1..kZeta, by direct summation with an Euler-Maclaurin tail.
constexpr int kZeta = 60;
static const std::array<double, kZeta + 1>& zeta_even() {
  static const std::array<double, kZeta + 1> table = [] {
    std::array<double, kZeta + 1> z{};
    constexpr int N = 1000;
    for (int k = 1; k <= kZeta; ++k) {
      const double s = 2.0 * k;
      double sum = 0;
      for (int j = N; j >= 1; --j) sum += std::pow(double(j), -s);
      sum += std::pow(double(N), 1 - s) / (s - 1) - 0.5 * std::pow(double(N), -s) +
             s / 12 * std::pow(double(N), -s - 1);
      z[k] = sum;
    }
    return z;
  }();
  return table;
}

// Clausen function Cl2 on [0, pi] from
// Cl2(x) = x - x log x + sum_k 2 zeta(2k) x^{2k+1} / (2k (2k+1) (2 pi)^{2k}).
static double clausen(double x) {
  x = std::fmod(x, 2 * kPi);
  if (x < 0) x += 2 * kPi;
  if (x > kPi) return -clausen(2 * kPi - x);
  if (x == 0 || x == kPi) return 0;
  const auto& zeta = zeta_even();
  const double r = x / (2 * kPi);
  double s = x - x * std::log(x);
  double rk = 1;
  for (int k = 1; k <= kZeta; ++k) {
    rk *= r * r;
    const double term = 2 * zeta[k] * rk * x / (2.0 * k * (2.0 * k + 1));
    s += term;
    if (term < 1e-18 * std::abs(s)) break;
  }
  return s;
}

double lobachevsky(double theta) { return 0.5 * clausen(2 * theta); }

double bloch_wigner(cd z) {
  if (z.imag() == 0) return 0;
  if (z.imag() < 0) return -bloch_wigner(std::conj(z));
  const double a = std::arg(z);
  const double b = std::arg(1.0 / (1.0 - z));
  const double c = std::arg((z - 1.0) / z);
  return lobachevsky(a) + lobachevsky(b) + lobachevsky(c);
}

double volume(const std::vector<cd>& shapes) {
  double v = 0;
  for (const auto& z : shapes) v += bloch_wigner(z);
  return v;
}

}  // namespace hypertrace
