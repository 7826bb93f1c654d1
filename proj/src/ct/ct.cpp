#include "hypertrace/ct.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace hypertrace {

// The elevation is a plane ideally triangulated with every vertex at
// infinity, so its triangles and their edge adjacencies form a tree. The
// search below walks that tree and never needs to recognise a lifted cell it
// has met before; comparing developed placements of far cells would be
// hopeless in double precision anyway.

namespace {

bool negative(double level) { return level < 0; }

std::array<int, 3> face_verts(int f) {
  std::array<int, 3> v{};
  int n = 0;
  for (int i = 0; i < 4; ++i)
    if (i != f) v[n++] = i;
  return v;
}

int other_vertex(int a, int b, int c) { return 6 - a - b - c; }

// Distance from x to the geodesic with ideal ends l1, l2 via the unit
// tangents u_i at x pointing at them: cosh d = 2 / |u1 - u2|. Stays finite
// and accurate when the ends are visually close.
double edge_distance(const Vec4d& x, const Vec4d& l1, const Vec4d& l2) {
  const Vec4d u1 = l1 / (-minkowski_dot(l1, x)) - x, u2 = l2 / (-minkowski_dot(l2, x)) - x;
  const Vec4d d = u1 - u2;
  const double n = std::sqrt(std::max(minkowski_dot(d, d), 0.0));
  return n > 0 ? std::acosh(std::max(1.0, 2 / n)) : std::numeric_limits<double>::infinity();
}

LiftedCell across(const GeomTriangulation& geom, const LiftedCell& c, int f) {
  const GeomTet& t = geom.tets[c.tet];
  return {t.neighbor[f], c.placement * lorentz_inverse(t.pairing[f]), c.level + t.weights[f]};
}

struct Hinge {
  LiftedCell cell;
  int face;
  int a, b;  // the shared edge in the found cell's tet
  double angle;
};

// Rotate about the edge (a, b) of face `face` of a negative cell, through the
// negative wedge, up to the next face where the level crosses 0.
Hinge rotate(const GeomTriangulation& geom, LiftedCell cell, int face, int a, int b) {
  const int start_tet = cell.tet, start_face = face;
  int entry = face;
  double angle = 0;
  // A full turn brings us back to the starting face, so the surface met
  // the edge once: the weights are not a cocycle there.
  while (angle < 2 * std::numbers::pi - 1e-9) {
    const GeomTet& t = geom.tets[cell.tet];
    const int exit = other_vertex(a, b, entry);
    angle += t.dihedral[edge_slot(a, b)];
    LiftedCell next = across(geom, cell, exit);
    if (!negative(next.level)) return {cell, exit, a, b, angle};
    const auto& p = t.perm[exit];
    a = p[a];
    b = p[b];
    entry = t.neighbor_face[exit];
    cell = next;
  }
  throw InputError("weight data is not dual to a carried surface: the level-0 surface ends at an edge of face " +
                   std::to_string(start_face) + " of tet " + std::to_string(start_tet));
}

// The level function is well defined on the cover when the weights are
// antisymmetric across faces and sum to zero around every edge.
void check_levels(const GeomTriangulation& geom) {
  for (int t = 0; t < geom.n_tets(); ++t)
    for (int f = 0; f < 4; ++f) {
      const GeomTet& gt = geom.tets[t];
      const int n = gt.neighbor[f], nf = gt.neighbor_face[f];
      if (gt.weights[f] + geom.tets[n].weights[nf] != 0)
        throw InputError("weight data is not dual to a carried surface: crossing tet " + std::to_string(t) +
                         " face " + std::to_string(f) + " and back to tet " + std::to_string(n) + " face " +
                         std::to_string(nf) + " changes the level");
    }
  for (int t0 = 0; t0 < geom.n_tets(); ++t0)
    for (const auto& [a0, b0] : kEdgePairs) {
      int t = t0, a = a0, b = b0, entry = -1;  // one of the two faces containing the edge
      for (int v = 0; v < 4; ++v)
        if (v != a0 && v != b0) entry = v;
      const int entry0 = entry;
      double sum = 0;
      for (int guard = 0; guard < 4 * geom.n_tets() * 6 + 8; ++guard) {
        const GeomTet& gt = geom.tets[t];
        const int exit = other_vertex(a, b, entry);
        sum += gt.weights[exit];
        const auto& p = gt.perm[exit];
        a = p[a];
        b = p[b];
        entry = gt.neighbor_face[exit];
        t = gt.neighbor[exit];
        if (t == t0 && entry == entry0 && ((a == a0 && b == b0) || (a == b0 && b == a0))) break;
      }
      if (sum != 0)
        throw InputError("weight data is not dual to a carried surface: weights around edge " + std::to_string(a0) +
                         "-" + std::to_string(b0) + " of tet " + std::to_string(t0) + " sum to " +
                         std::to_string(sum));
    }
}

}  // namespace

View fiber_basepoint(const GeomTriangulation& geom, const View& view) {
  if (view.anchor_tet < 0 || view.anchor_tet >= geom.n_tets()) throw InputError("anchor tet out of range");
  View v = view;
  for (double w : geom.tets[view.anchor_tet].weights)
    if (w > 0) {
      v.base_weight = -w / 2;
      return v;
    }
  throw InputError("anchor tet " + std::to_string(view.anchor_tet) + " has no face of positive weight");
}

ElevationDisk build_elevation_disk(const GeomTriangulation& geom, const View& view, double R_disk,
                                   std::size_t max_triangles) {
  if (geom.kind != GeomKind::Ideal) throw InputError("elevation disks need an ideal geometry");
  if (view.anchor_tet < 0 || view.anchor_tet >= geom.n_tets()) throw InputError("anchor tet out of range");
  if (!(R_disk >= 0) || !std::isfinite(R_disk)) throw InputError("R_disk must be finite and non-negative");
  check_levels(geom);

  const LiftedCell c0{view.anchor_tet, Mat4d::identity(), view.base_weight};
  std::optional<std::pair<LiftedCell, int>> seed;
  for (int f = 0; f < 4 && !seed; ++f) {
    const LiftedCell c1 = across(geom, c0, f);
    if (negative(c0.level) == negative(c1.level)) continue;
    if (negative(c0.level)) seed = {c0, f};
    else seed = {c1, geom.tets[c0.tet].neighbor_face[f]};
  }
  if (!seed)
    throw InputError("no face of anchor tet " + std::to_string(view.anchor_tet) +
                     " lies on the level-0 elevation for base weight " + std::to_string(view.base_weight));

  auto make = [&](const LiftedCell& cell, int face) {
    DiskTriangle t;
    t.cell = cell;
    t.face = face;
    t.verts = face_verts(face);
    for (int i = 0; i < 3; ++i) t.ideal[i] = cell.placement * geom.tets[cell.tet].vertices[t.verts[i]];
    return t;
  };
  auto in_ball = [&](const DiskTriangle& t) {
    for (int i = 0; i < 3; ++i)
      if (edge_distance(view.origin, t.ideal[(i + 1) % 3], t.ideal[(i + 2) % 3]) < R_disk)
        return true;
    return false;
  };

  ElevationDisk disk;
  disk.basepoint = view.origin;
  disk.triangles.push_back(make(seed->first, seed->second));
  // parent_edge[i]: local edge of triangle i leading back to its parent.
  std::vector<int> parent_edge{-1};
  for (std::size_t ti = 0; ti < disk.triangles.size(); ++ti) {
    for (int i = 0; i < 3; ++i) {
      if (i == parent_edge[ti]) continue;
      const DiskTriangle& t = disk.triangles[ti];
      std::array<int, 2> e{};
      int n = 0;
      for (int j = 0; j < 3; ++j)
        if (j != i) e[n++] = t.verts[j];
      const Hinge h = rotate(geom, t.cell, t.face, e[0], e[1]);
      DiskTriangle nb = make(h.cell, h.face);
      disk.triangles[ti].neighbor_verts[i] = {h.a, h.b};
      disk.triangles[ti].pleating[i] = h.angle;
      if (!in_ball(nb)) continue;
      if (disk.triangles.size() >= max_triangles)
        throw NumericalError("elevation disk exceeds " + std::to_string(max_triangles) + " triangles");
      // The back edge of the child: the one opposite its vertex not in {a, b}.
      int back = 0;
      for (int j = 0; j < 3; ++j)
        if (nb.verts[j] != h.a && nb.verts[j] != h.b) back = j;
      nb.neighbor[back] = static_cast<int>(ti);
      nb.neighbor_verts[back] = h.a < h.b ? std::array<int, 2>{e[0], e[1]} : std::array<int, 2>{e[1], e[0]};
      nb.pleating[back] = h.angle;
      disk.triangles[ti].neighbor[i] = static_cast<int>(disk.triangles.size());
      disk.triangles.push_back(nb);
      parent_edge.push_back(back);
    }
  }
  return disk;
}

CTPolyline boundary_polyline(const ElevationDisk& disk) {
  const auto& tris = disk.triangles;
  auto local = [](const DiskTriangle& t, int v) {
    for (int i = 0; i < 3; ++i)
      if (t.verts[i] == v) return i;
    throw std::logic_error("vertex not on triangle");
  };
  // Edge of t between tet vertices x and y: the one opposite the third vertex.
  auto edge_of = [&](const DiskTriangle& t, int x, int y) { return 3 - local(t, x) - local(t, y); };

  std::size_t n_boundary = 0;
  int t0 = -1, e0 = -1;
  for (std::size_t i = 0; i < tris.size(); ++i)
    for (int e = 0; e < 3; ++e)
      if (tris[i].neighbor[e] < 0) {
        ++n_boundary;
        if (t0 < 0) {
          t0 = static_cast<int>(i);
          e0 = e;
        }
      }
  CTPolyline line;
  if (t0 < 0) throw NumericalError("elevation disk has no boundary");

  // Directed boundary edge p -> q of triangle t.
  int t = t0, p = tris[t0].verts[(e0 + 1) % 3], q = tris[t0].verts[(e0 + 2) % 3];
  const int sp = p, sq = q;
  do {
    const DiskTriangle& tr = tris[t];
    line.points.push_back(tr.ideal[local(tr, p)]);
    line.source.push_back(t);
    if (line.points.size() > n_boundary) throw NumericalError("disk boundary traversal did not close");
    // Turn about q inside the disk until the next boundary edge.
    int cur = t, x = p, y = q;
    for (std::size_t guard = 0;; ++guard) {
      if (guard > tris.size()) throw NumericalError("disk boundary traversal is stuck at an ideal vertex");
      const DiskTriangle& c = tris[cur];
      const int r = c.verts[3 - local(c, x) - local(c, y)];
      const int e = edge_of(c, y, r);
      if (c.neighbor[e] < 0) {
        t = cur;
        p = y;
        q = r;
        break;
      }
      // neighbor_verts lists the images of the edge's vertices in increasing order.
      const int u = c.verts[e == 0 ? 1 : 0];
      const auto& img = c.neighbor_verts[e];
      const int y2 = (y == u) ? img[0] : img[1];
      const int r2 = (r == u) ? img[0] : img[1];
      cur = c.neighbor[e];
      x = r2;
      y = y2;
    }
  } while (!(t == t0 && p == sp && q == sq));
  if (line.points.size() != n_boundary)
    throw NumericalError("disk boundary is not a single loop (" + std::to_string(line.points.size()) + " of " +
                         std::to_string(n_boundary) + " edges)");
  return line;
}

std::complex<double> view_plane(const View& v, const Vec4d& l) {
  const double y0 = -minkowski_dot(l, v.origin), y1 = minkowski_dot(l, v.right), y2 = minkowski_dot(l, v.up),
               y3 = -minkowski_dot(l, v.forward);
  const double den = y0 - y3;
  if (den == 0) return {std::numeric_limits<double>::infinity(), 0};
  return {y1 / den, y2 / den};
}

bool ideal_to_screen(const View& v, const Vec4d& l, ScreenPoint& out) {
  const double s = -minkowski_dot(l, v.origin) > 0 ? 1 : -1;
  const double f = s * minkowski_dot(l, v.forward);
  if (!(f > 0)) return false;
  const double h = std::tan(v.fov * std::numbers::pi / 360);
  out.x = s * minkowski_dot(l, v.right) / (f * h);
  out.y = s * minkowski_dot(l, v.up) / (f * h);
  return true;
}

std::string polyline_svg(const CTPolyline& line, const View& view) {
  std::vector<std::complex<double>> z;
  double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
  for (const auto& p : line.points) {
    z.push_back(view_plane(view, p));
    if (!std::isfinite(z.back().real())) continue;
    lo_x = std::min(lo_x, z.back().real());
    hi_x = std::max(hi_x, z.back().real());
    lo_y = std::min(lo_y, -z.back().imag());
    hi_y = std::max(hi_y, -z.back().imag());
  }
  std::ostringstream o;
  o.precision(17);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << lo_x << ' ' << lo_y << ' '
    << std::max(hi_x - lo_x, 1e-9) << ' ' << std::max(hi_y - lo_y, 1e-9) << "\">\n";
  // SVG y grows downwards, so the imaginary part is negated.
  o << "<polygon fill=\"none\" stroke=\"black\" vector-effect=\"non-scaling-stroke\" points=\"";
  bool first = true;
  for (const auto& c : z) {
    if (!std::isfinite(c.real())) continue;
    if (!first) o << ' ';
    first = false;
    o << c.real() << ',' << -c.imag();
  }
  o << "\"/>\n</svg>\n";
  return o.str();
}

namespace {

// Exact squared Euclidean distance transform (Felzenszwalb and Huttenlocher).
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  const double inf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == inf) continue;
    if (f[v[k]] == inf) {
      v[k] = q;
      continue;
    }
    double s;
    for (;;) {
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * (q - v[k]));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      v[k] = q;  // k == 0
      z[k + 1] = inf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = f[v[k]] == inf ? inf : dq * dq + f[v[k]];
  }
}

std::vector<double> distance_to(const std::vector<char>& set, int w, int h) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) g[i] = set[i] ? 0 : inf;
  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  for (int x = 0; x < w; ++x) {
    f.resize(h);
    d.resize(h);
    for (int y = 0; y < h; ++y) f[y] = g[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) g[static_cast<std::size_t>(y) * w + x] = d[y];
  }
  for (int y = 0; y < h; ++y) {
    f.resize(w);
    d.resize(w);
    for (int x = 0; x < w; ++x) f[x] = g[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) g[static_cast<std::size_t>(y) * w + x] = std::sqrt(d[x]);
  }
  return g;
}

}  // namespace

MatchReport match_level_set(const CTPolyline& line, const WeightField& field, const View& view,
                            const std::vector<MaskDisk>& mask) {
  if (view.kind != ViewKind::Material) throw InputError("level-set matching needs a material view");
  const int W = field.width, H = field.height;
  const std::size_t N = static_cast<std::size_t>(W) * H;
  if (field.samples.size() < N * field.k * field.k) throw InputError("weight field is truncated");

  std::vector<char> masked(N, 0);
  for (const auto& m : mask) {
    const int r0 = std::max(0, static_cast<int>(std::floor(m.row - m.radius))),
              r1 = std::min(H - 1, static_cast<int>(std::ceil(m.row + m.radius)));
    const int c0 = std::max(0, static_cast<int>(std::floor(m.col - m.radius))),
              c1 = std::min(W - 1, static_cast<int>(std::ceil(m.col + m.radius)));
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c)
        if (std::hypot(c + 0.5 - m.col, r + 0.5 - m.row) <= m.radius) masked[static_cast<std::size_t>(r) * W + c] = 1;
  }

  std::vector<char> inZ(N), boundary(N, 0), poly(N, 0);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) inZ[static_cast<std::size_t>(r) * W + c] = field.at(c, r).weight >= 0;
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * W + c;
      if (!inZ[i]) continue;
      const bool edge = (c > 0 && !inZ[i - 1]) || (c + 1 < W && !inZ[i + 1]) || (r > 0 && !inZ[i - W]) ||
                        (r + 1 < H && !inZ[i + W]);
      boundary[i] = edge;
    }

  // Segments of ideal boundary arcs are straight lines on a gnomonic screen.
  auto to_pixel = [&](const ScreenPoint& s) { return std::pair{(s.x + 1) * W / 2, (H - s.y * W) / 2}; };
  const std::size_t n = line.points.size();
  for (std::size_t i = 0; i < n; ++i) {
    ScreenPoint a, b;
    if (!ideal_to_screen(view, line.points[i], a) || !ideal_to_screen(view, line.points[(i + 1) % n], b)) continue;
    auto [ax, ay] = to_pixel(a);
    auto [bx, by] = to_pixel(b);
    // Clip to a margin around the frame before sampling.
    double t0 = 0, t1 = 1;
    const double dx = bx - ax, dy = by - ay;
    auto clip = [&](double p, double q) {
      if (p == 0) return q >= 0;
      const double t = q / p;
      if (p < 0) t0 = std::max(t0, t);
      else t1 = std::min(t1, t);
      return true;
    };
    if (!clip(-dx, ax + 1) || !clip(dx, W + 1 - ax) || !clip(-dy, ay + 1) || !clip(dy, H + 1 - ay) || t0 > t1)
      continue;
    const double len = std::hypot(dx, dy) * (t1 - t0);
    const int steps = static_cast<int>(std::ceil(len * 4)) + 1;
    for (int s = 0; s <= steps; ++s) {
      const double t = t0 + (t1 - t0) * s / steps;
      const double x = ax + t * dx, y = ay + t * dy;
      const int c = static_cast<int>(std::floor(x)), r = static_cast<int>(std::floor(y));
      if (c >= 0 && c < W && r >= 0 && r < H) poly[static_cast<std::size_t>(r) * W + c] = 1;
    }
  }

  if (std::find(poly.begin(), poly.end(), 1) == poly.end())
    throw InputError("the polyline does not meet the frame; is the view the one the disk was built from?");

  MatchReport rep;
  std::size_t n_masked = 0;
  for (std::size_t i = 0; i < N; ++i) {
    n_masked += masked[i];
    if (masked[i]) boundary[i] = poly[i] = 0;
    rep.polyline_pixels += poly[i];
    rep.boundary_pixels += boundary[i];
  }
  rep.masked_fraction = static_cast<double>(n_masked) / N;
  if (rep.polyline_pixels == 0 || rep.boundary_pixels == 0) {
    rep.hausdorff_px = (rep.polyline_pixels == rep.boundary_pixels) ? 0 : std::numeric_limits<double>::infinity();
    return rep;
  }
  const auto to_b = distance_to(boundary, W, H), to_p = distance_to(poly, W, H);
  std::size_t covered = 0;
  for (std::size_t i = 0; i < N; ++i)
    if (poly[i]) {
      rep.hausdorff_px = std::max(rep.hausdorff_px, to_b[i]);
      covered += to_b[i] <= 3;
    }
  // The polyline approximates one component of the boundary of Z, so the
  // reverse direction only looks at the 8-connected components of boundary
  // pixels that come within 3 px of it.
  std::vector<int> comp(N, -1);
  std::vector<char> keep;
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < N; ++i) {
    if (!boundary[i] || comp[i] >= 0) continue;
    const int id = static_cast<int>(keep.size());
    keep.push_back(0);
    comp[i] = id;
    stack.push_back(i);
    while (!stack.empty()) {
      const std::size_t j = stack.back();
      stack.pop_back();
      if (to_p[j] <= 3) keep[id] = 1;
      const int c = static_cast<int>(j % W), r = static_cast<int>(j / W);
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int cc = c + dc, rr = r + dr;
          if (cc < 0 || cc >= W || rr < 0 || rr >= H) continue;
          const std::size_t k = static_cast<std::size_t>(rr) * W + cc;
          if (boundary[k] && comp[k] < 0) {
            comp[k] = id;
            stack.push_back(k);
          }
        }
    }
  }
  rep.boundary_pixels = 0;
  for (std::size_t i = 0; i < N; ++i)
    if (boundary[i] && keep[comp[i]]) {
      ++rep.boundary_pixels;
      rep.hausdorff_px = std::max(rep.hausdorff_px, to_p[i]);
    }
  rep.coverage = static_cast<double>(covered) / rep.polyline_pixels;
  return rep;
}

std::vector<MaskDisk> cusp_mask(const ElevationDisk& disk, const View& view, int width, int height,
                                double radius_px, int min_degree) {
  // Ideal vertices are matched by the rounded unit tangent pointing at them
  // from the basepoint.
  std::map<std::array<long long, 4>, std::pair<Vec4d, int>> verts;
  for (const auto& t : disk.triangles)
    for (const auto& l : t.ideal) {
      const Vec4d u = l / (-minkowski_dot(l, disk.basepoint)) - disk.basepoint;
      std::array<long long, 4> key;
      for (int i = 0; i < 4; ++i) key[i] = std::llround(u[i] * 1e8);
      auto& slot = verts[key];
      slot.first = u;
      ++slot.second;
    }
  std::vector<MaskDisk> out;
  for (const auto& [key, val] : verts) {
    if (val.second < min_degree) continue;
    const Vec4d l = disk.basepoint + val.first;
    ScreenPoint s;
    if (!ideal_to_screen(view, l, s)) continue;
    out.push_back({(s.x + 1) * width / 2, (height - s.y * width) / 2, radius_px});
  }
  return out;
}

std::string to_json(const MatchReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"hausdorff_px\": %.17g, \"coverage\": %.17g, \"masked_fraction\": %.17g, "
                "\"polyline_pixels\": %zu, \"boundary_pixels\": %zu}",
                std::isfinite(r.hausdorff_px) ? r.hausdorff_px : 1e308, r.coverage, r.masked_fraction,
                r.polyline_pixels, r.boundary_pixels);
  return buf;
}

}  // namespace hypertrace
