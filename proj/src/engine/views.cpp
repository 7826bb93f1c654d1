#include <cmath>
#include <numbers>
#include <sstream>

#include "hypertrace/engine.hpp"

namespace hypertrace {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::RayBudget: return "ray-budget";
    case Termination::Radius: return "radius";
    case Termination::EdgeHit: return "edge-hit";
    case Termination::ElevationHit: return "elevation-hit";
    case Termination::Failed: return "failed";
  }
  return "?";
}

const char* to_string(Precision p) {
  switch (p) {
    case Precision::F32: return "f32";
    case Precision::F64: return "f64";
    case Precision::F80: return "f80";
  }
  return "?";
}

Precision parse_precision(const std::string& s) {
  if (s == "f32") return Precision::F32;
  if (s == "f64") return Precision::F64;
  if (s == "f80") return Precision::F80;
  throw InputError("unknown precision '" + s + "' (expected f32, f64 or f80)");
}

const char* to_string(ViewKind k) {
  switch (k) {
    case ViewKind::Material: return "material";
    case ViewKind::Ideal: return "ideal";
    case ViewKind::Hyperideal: return "hyperideal";
  }
  return "?";
}

ViewKind parse_view_kind(const std::string& s) {
  if (s == "material") return ViewKind::Material;
  if (s == "ideal") return ViewKind::Ideal;
  if (s == "hyperideal") return ViewKind::Hyperideal;
  throw InputError("unknown view kind '" + s + "' (expected material, ideal or hyperideal)");
}

void check_config(const RenderConfig& c) {
  auto bad = [](const std::string& m) { throw InputError("render config: " + m); };
  if (!(c.R >= 0) || !std::isfinite(c.R)) bad("R must be a finite non-negative number");
  if (c.S < 1) bad("S must be at least 1");
  if (c.k < 1 || c.k > 1024) bad("k must be in [1, 1024]");
  if (c.width < 1 || c.height < 1 || c.width > 16384 || c.height > 16384)
    bad("resolution must be between 1x1 and 16384x16384");
  if (c.edge_eps && !(*c.edge_eps >= 0)) bad("edge_eps must be non-negative");
  if (c.elevation_wmax && !std::isfinite(*c.elevation_wmax)) bad("elevation w_max must be finite");
  if (!(c.colour.scale > 0)) bad("colour scale must be positive");
  if (c.tile < 1) bad("tile must be positive");
}

std::size_t WeightField::count(Termination t) const {
  std::size_t n = 0;
  for (const auto& s : samples) n += s.tag == t;
  return n;
}

namespace {

Vec4d tangent_unit(const Vec4d& x, Vec4d v) {
  v = v + minkowski_dot(x, v) * x;
  return v / std::sqrt(minkowski_dot(v, v));
}

}  // namespace

std::optional<std::pair<Vec4d, Vec4d>> screen_ray(const View& view, ScreenPoint p) {
  if (view.kind == ViewKind::Material) {
    const double h = std::tan(view.fov * std::numbers::pi / 360);
    const double X = p.x * h, Y = p.y * h;
    return std::pair{view.origin, (view.forward + X * view.right + Y * view.up) / std::sqrt(1 + X * X + Y * Y)};
  }
  const double X = p.x * view.fov / 2, Y = p.y * view.fov / 2;
  if (view.kind == ViewKind::Ideal) {
    // Horosphere {<x,l> = -1} with l = origin - forward; flat coordinates
    // z map to origin + z + |z|^2/2 l, normals point away from l.
    const Vec4d l = view.origin - view.forward;
    const Vec4d base = view.origin + X * view.right + Y * view.up + 0.5 * (X * X + Y * Y) * l;
    return std::pair{base, base - l};
  }
  const double r2 = X * X + Y * Y;
  if (!(r2 < 1)) return std::nullopt;
  return std::pair{(view.origin + X * view.right + Y * view.up) / std::sqrt(1 - r2), view.forward};
}

std::optional<RayState<double>> view_ray(const Kernel<double>& k, const View& view, ScreenPoint p) {
  auto ray = screen_ray(view, p);
  if (!ray) return std::nullopt;
  RayState<double> s;
  s.tet = view.anchor_tet;
  s.weight = view.base_weight;
  s.point = ray->first;
  s.dir = ray->second;
  if (view.kind == ViewKind::Material) return s;
  auto loc = locate(k, view.anchor_tet, view.origin, ray->first, 1 << 20);
  if (!loc) return std::nullopt;
  s.tet = loc->tet;
  s.point = loc->point;
  s.dir = loc->holonomy * ray->second;
  renormalize(s.point, s.dir);
  s.weight += loc->weight;
  return s;
}

ScreenPoint pixel_sample(const RenderConfig& cfg, int col, int row, int sub) {
  const int a = sub % cfg.k, b = sub / cfg.k;
  double ox = (a + 0.5) / cfg.k, oy = (b + 0.5) / cfg.k;
  if (cfg.jitter) {
    const std::uint64_t id =
        ((static_cast<std::uint64_t>(row) * cfg.width + col) * cfg.k * cfg.k + sub) * 2;
    ox = (a + uniform_at(cfg.seed, id)) / cfg.k;
    oy = (b + uniform_at(cfg.seed, id + 1)) / cfg.k;
  }
  const double u = col + ox, v = row + oy;
  return {2 * u / cfg.width - 1, (cfg.height - 2 * v) / cfg.width};
}

void orthonormalize(View& v) {
  Vec4d& o = v.origin;
  o = o / std::sqrt(-minkowski_dot(o, o));
  v.forward = tangent_unit(o, v.forward);
  Vec4d r = v.right + minkowski_dot(o, v.right) * o;
  r = r - minkowski_dot(r, v.forward) * v.forward;
  v.right = r / std::sqrt(minkowski_dot(r, r));
  Vec4d u = v.up + minkowski_dot(o, v.up) * o;
  u = u - minkowski_dot(u, v.forward) * v.forward - minkowski_dot(u, v.right) * v.right;
  v.up = u / std::sqrt(minkowski_dot(u, u));
}

void check_view(const GeomTriangulation& geom, const View& v) {
  if (v.anchor_tet < 0 || v.anchor_tet >= geom.n_tets())
    throw InputError("view: anchor tet " + std::to_string(v.anchor_tet) + " out of range");
  if (!(v.fov > 0) || !std::isfinite(v.fov)) throw InputError("view: fov must be positive");
  if (v.kind == ViewKind::Material && !(v.fov < 180)) throw InputError("view: material fov must be below 180");
  const Vec4d* f[4] = {&v.origin, &v.forward, &v.right, &v.up};
  double worst = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double want = i == j ? (i == 0 ? -1 : 1) : 0;
      worst = std::max(worst, std::abs(minkowski_dot(*f[i], *f[j]) - want));
    }
  if (worst > 1e-9) {
    std::ostringstream s;
    s << "view: frame not orthonormal (defect " << worst << ")";
    throw InputError(s.str());
  }
  if (!(v.origin[0] > 0)) throw InputError("view: origin not on the forward sheet");
  for (int face = 0; face < 4; ++face) {
    const double d = minkowski_dot(v.origin, geom.tets[v.anchor_tet].planes[face]);
    if (d > 1e-7) {
      std::ostringstream s;
      s << "view: origin outside anchor tet " << v.anchor_tet << " (face " << face << ", " << d << ")";
      throw InputError(s.str());
    }
  }
}

View default_view(const GeomTriangulation& geom, ViewKind kind, int tet, double fov) {
  if (tet < 0 || tet >= geom.n_tets()) throw InputError("default view: tet out of range");
  View v;
  v.kind = kind;
  v.anchor_tet = tet;
  Vec4d c{};
  for (const auto& p : geom.tets[tet].vertices) c = c + p / p[0];
  v.origin = c / std::sqrt(-minkowski_dot(c, c));
  // A fixed direction in general position with respect to the faces.
  v.forward = Vec4d{{0, 0.31, 0.57, 0.76}};
  v.right = Vec4d{{0, 0.83, -0.52, 0.1}};
  v.up = Vec4d{{0, 0.2, 0.6, -0.7}};
  orthonormalize(v);
  if (fov > 0)
    v.fov = fov;
  else
    v.fov = kind == ViewKind::Material ? 90 : kind == ViewKind::Ideal ? 4 : 1.6;
  return v;
}

}  // namespace hypertrace
