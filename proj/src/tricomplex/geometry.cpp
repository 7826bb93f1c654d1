#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "hypertrace/tricomplex.hpp"

namespace hypertrace {

namespace {

constexpr double kPi = std::numbers::pi;

std::string at(int t, int f) {
  std::ostringstream s;
  s << "tet " << t << " face " << f;
  return s.str();
}

Eigen::Matrix4d to_eigen(const Mat4d& a) {
  Eigen::Matrix4d e;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) e(i, j) = a(i, j);
  return e;
}

Mat4d from_eigen(const Eigen::Matrix4d& e) {
  Mat4d a;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = e(i, j);
  return a;
}

// Face frame: the three vertices of face f (in increasing vertex order),
// scaled for ideal tets so their pairwise products are -1.
std::array<Vec4d, 3> face_frame(const GeomTet& tet, int f, GeomKind kind,
                                const std::array<int, 3>& verts) {
  std::array<Vec4d, 3> v{tet.vertices[verts[0]], tet.vertices[verts[1]], tet.vertices[verts[2]]};
  (void)f;
  if (kind == GeomKind::Ideal) {
    const double pab = minkowski_dot(v[0], v[1]), pac = minkowski_dot(v[0], v[2]),
                 pbc = minkowski_dot(v[1], v[2]);
    const double la = std::sqrt(-pbc / (pab * pac));
    const double lb = -1 / (la * pab), lc = -1 / (la * pac);
    v = {la * v[0], lb * v[1], lc * v[2]};
  }
  return v;
}

void finish_tets(GeomTriangulation& geom, const CombTriangulation& tri) {
  const int n = tri.n_tets();
  for (int t = 0; t < n; ++t) {
    GeomTet& g = geom.tets[t];
    Vec4d centre{};
    for (const auto& v : g.vertices) {
      const Vec4d u = geom.kind == GeomKind::Ideal ? v / v[0] : v;
      centre = centre + u;
    }
    for (int f = 0; f < 4; ++f) {
      std::array<Vec4d, 3> face;
      int k = 0;
      for (int v = 0; v < 4; ++v)
        if (v != f) face[k++] = g.vertices[v];
      g.planes[f] = plane_through(face[0], face[1], face[2], centre);
      g.neighbor[f] = tri.gluing[t][f].tet;
      g.perm[f] = tri.gluing[t][f].perm;
      g.neighbor_face[f] = g.perm[f][f];
      g.weights[f] = tri.weights[t][f];
    }
    for (int e = 0; e < 6; ++e) {
      const int a = kEdgePairs[e][0], b = kEdgePairs[e][1];
      if (geom.kind == GeomKind::Ideal) {
        g.edge_ends[e] = {g.vertices[a], g.vertices[b]};
      } else {
        const Vec4d& p = g.vertices[a];
        const Vec4d& q = g.vertices[b];
        Vec4d u = q + minkowski_dot(p, q) * p;
        u = u / std::sqrt(minkowski_dot(u, u));
        g.edge_ends[e] = {p - u, p + u};
      }
      // The two faces through edge (a,b) are those opposite the other vertices.
      int other[2], k = 0;
      for (int v = 0; v < 4; ++v)
        if (v != a && v != b) other[k++] = v;
      const double c = -minkowski_dot(g.planes[other[0]], g.planes[other[1]]);
      g.dihedral[e] = std::acos(std::clamp(c, -1.0, 1.0));
    }
  }
  // Pairings: B' B^{-1} with B = [face vertices, outward normal] and
  // B' = [image vertices, -outward normal of the partner face].
  for (int t = 0; t < n; ++t)
    for (int f = 0; f < 4; ++f) {
      GeomTet& g = geom.tets[t];
      const GeomTet& h = geom.tets[g.neighbor[f]];
      std::array<int, 3> src{}, dst{};
      int k = 0;
      for (int v = 0; v < 4; ++v)
        if (v != f) {
          src[k] = v;
          dst[k] = g.perm[f][v];
          ++k;
        }
      const auto a = face_frame(g, f, geom.kind, src);
      const auto b = face_frame(h, g.neighbor_face[f], geom.kind, dst);
      Mat4d B, Bp;
      for (int i = 0; i < 3; ++i) {
        B.set_col(i, a[i]);
        Bp.set_col(i, b[i]);
      }
      B.set_col(3, g.planes[f]);
      Bp.set_col(3, -h.planes[g.neighbor_face[f]]);
      g.pairing[f] = from_eigen(to_eigen(Bp) * to_eigen(B).inverse());
    }
}

}  // namespace

std::array<BoundaryPoint, 4> ideal_vertex_positions(std::complex<double> z) {
  return {BoundaryPoint{true, {}}, BoundaryPoint{false, {0, 0}}, BoundaryPoint{false, {1, 0}},
          BoundaryPoint{false, z}};
}

GeomTriangulation build_geometry_ideal(const CombTriangulation& tri, const ShapeAssignment& shapes,
                                       const Mat4d& global) {
  const int n = tri.n_tets();
  if (static_cast<int>(shapes.shapes.size()) != n) throw InputError("shape count does not match tetrahedra");
  GeomTriangulation geom;
  geom.kind = GeomKind::Ideal;
  geom.name = tri.name;
  geom.edge_classes = tri.edge_classes;
  geom.integral_weights = tri.integral_weights;
  geom.tets.resize(n);
  for (int t = 0; t < n; ++t) {
    if (!(shapes.shapes[t].imag() > 0)) throw InputError("shape of tet " + std::to_string(t) + " is not in the upper half plane");
    const auto pos = ideal_vertex_positions(shapes.shapes[t]);
    for (int v = 0; v < 4; ++v) geom.tets[t].vertices[v] = global * light_vector(pos[v]);
  }
  finish_tets(geom, tri);
  const auto report = validate(geom);
  for (const auto& c : report.checks)
    if (!c.pass && c.name != "angle_sum")
      throw NumericalError("ideal geometry for " + tri.name + " fails check '" + c.name + "' at " +
                           c.location);
  return geom;
}

std::array<double, 6> material_dihedral_angles(const std::array<double, 6>& d) {
  Eigen::Matrix4d G;
  for (int i = 0; i < 4; ++i) G(i, i) = -1;
  for (int e = 0; e < 6; ++e) {
    const int a = kEdgePairs[e][0], b = kEdgePairs[e][1];
    G(a, b) = G(b, a) = -std::cosh(d[e]);
  }
  const Eigen::Matrix4d H = G.inverse();
  std::array<double, 6> out{};
  for (int e = 0; e < 6; ++e) {
    const int a = kEdgePairs[e][0], b = kEdgePairs[e][1];
    int other[2], k = 0;
    for (int v = 0; v < 4; ++v)
      if (v != a && v != b) other[k++] = v;
    const int i = other[0], j = other[1];
    out[e] = std::acos(std::clamp(-H(i, j) / std::sqrt(H(i, i) * H(j, j)), -1.0, 1.0));
  }
  return out;
}

static void check_signature(const std::array<double, 6>& d, int t) {
  Eigen::Matrix4d G;
  for (int i = 0; i < 4; ++i) G(i, i) = -1;
  for (int e = 0; e < 6; ++e) {
    const int a = kEdgePairs[e][0], b = kEdgePairs[e][1];
    G(a, b) = G(b, a) = -std::cosh(d[e]);
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(G);
  const auto ev = es.eigenvalues();
  int neg = 0, pos = 0;
  const double scale = ev.cwiseAbs().maxCoeff();
  for (int i = 0; i < 4; ++i) {
    if (ev(i) < -1e-12 * scale) ++neg;
    if (ev(i) > 1e-12 * scale) ++pos;
  }
  if (neg != 1 || pos != 3) {
    std::ostringstream s;
    s << "tet " << t << ": edge lengths give a Gram matrix of signature (" << neg << "," << pos
      << "), expected (1,3)";
    throw InputError(s.str());
  }
}

std::array<Vec4d, 4> material_vertices(const std::array<double, 6>& d) {
  check_signature(d, -1);
  const double c01 = std::cosh(d[0]), c02 = std::cosh(d[1]), c03 = std::cosh(d[2]),
               c12 = std::cosh(d[3]), c13 = std::cosh(d[4]), c23 = std::cosh(d[5]);
  const double s01 = std::sinh(d[0]);
  Vec4d v0{{1, 0, 0, 0}};
  Vec4d v1{{c01, s01, 0, 0}};
  Vec4d v2{};
  v2[0] = c02;
  v2[1] = (c02 * c01 - c12) / s01;
  v2[2] = std::sqrt(std::max(0.0, c02 * c02 - 1 - v2[1] * v2[1]));
  Vec4d v3{};
  v3[0] = c03;
  v3[1] = (c03 * c01 - c13) / s01;
  v3[2] = (c03 * v2[0] - v3[1] * v2[1] - c23) / v2[2];
  v3[3] = std::sqrt(std::max(0.0, c03 * c03 - 1 - v3[1] * v3[1] - v3[2] * v3[2]));
  // Same orientation as the ideal construction (vertices inf, 0, 1, z).
  Mat4d ref, mat;
  const auto ideal = ideal_vertex_positions({0, 1});
  for (int v = 0; v < 4; ++v) ref.set_col(v, light_vector(ideal[v]));
  mat.set_col(0, v0);
  mat.set_col(1, v1);
  mat.set_col(2, v2);
  mat.set_col(3, v3);
  if ((determinant(ref) > 0) != (determinant(mat) > 0)) v3[3] = -v3[3];
  return {v0, v1, v2, v3};
}

GeomTriangulation build_geometry_material(const CombTriangulation& tri) {
  const int n = tri.n_tets();
  if (!tri.is_material()) throw InputError(tri.name + ": no material edge lengths");
  GeomTriangulation geom;
  geom.kind = GeomKind::Material;
  geom.name = tri.name;
  geom.edge_classes = tri.edge_classes;
  geom.integral_weights = tri.integral_weights;
  geom.tets.resize(n);
  for (int t = 0; t < n; ++t) {
    check_signature(tri.material_lengths[t], t);
    geom.tets[t].vertices = material_vertices(tri.material_lengths[t]);
  }
  finish_tets(geom, tri);
  const auto report = validate(geom);
  for (const auto& c : report.checks)
    if (!c.pass) {
      std::ostringstream s;
      s << tri.name << ": material geometry fails check '" << c.name << "' at " << c.location
        << " (residual " << c.worst << ")";
      if (c.name == "angle_sum") throw InputError(s.str());
      throw NumericalError(s.str());
    }
  return geom;
}

void set_weights(GeomTriangulation& geom, const CombTriangulation& tri) {
  for (int t = 0; t < geom.n_tets(); ++t) geom.tets[t].weights = tri.weights[t];
  geom.integral_weights = tri.integral_weights;
}

Mat4d edge_holonomy(const GeomTriangulation& geom, int e) {
  const auto& first = geom.edge_classes.at(e).front();
  int t = first.tet;
  int a = first.sign > 0 ? first.a : first.b, b = first.sign > 0 ? first.b : first.a;
  const int t0 = t, a0 = a, b0 = b;
  Mat4d g = Mat4d::identity();
  for (int guard = 0; guard < 6 * geom.n_tets() + 1; ++guard) {
    const int d = exit_face_of_edge(a, b);
    const GeomTet& tet = geom.tets[t];
    g = tet.pairing[d] * g;
    a = tet.perm[d][a];
    b = tet.perm[d][b];
    t = tet.neighbor[d];
    if (t == t0 && a == a0 && b == b0) return g;
  }
  throw NumericalError("edge holonomy walk did not close");
}

ValidationReport validate(const GeomTriangulation& geom) {
  ValidationReport rep;
  rep.checks.reserve(16);  // the references below must stay valid
  auto check = [&rep](const std::string& name, double tol) -> CheckResult& {
    rep.checks.push_back({name, 0, tol, true, ""});
    return rep.checks.back();
  };
  auto note = [](CheckResult& c, double r, const std::string& where) {
    if (!(r <= c.worst)) {  // also catches NaN
      c.worst = std::isnan(r) ? INFINITY : r;
      c.location = where;
    }
  };
  const int n = geom.n_tets();
  const bool ideal = geom.kind == GeomKind::Ideal;

  CheckResult& unit = check("plane_unit", 1e-9);
  CheckResult& lorentz = check("pairing_lorentz", 1e-8);
  CheckResult& orient = check("pairing_orientation", 1e-8);
  CheckResult& plane = check("pairing_plane", 1e-7);
  CheckResult& verts = check("pairing_vertices", 1e-7);
  CheckResult& inv = check("pairing_inverse", 1e-7);
  for (int t = 0; t < n; ++t) {
    const GeomTet& g = geom.tets[t];
    for (int f = 0; f < 4; ++f) {
      const std::string where = at(t, f);
      note(unit, std::abs(minkowski_dot(g.planes[f], g.planes[f]) - 1), where);
      const Mat4d& p = g.pairing[f];
      note(lorentz, lorentz_defect(p), where);
      // det = +1 and the forward sheet is preserved.
      note(orient, std::abs(determinant(p) - 1) + (p(0, 0) > 0 ? 0.0 : 1.0), where);
      const GeomTet& h = geom.tets[g.neighbor[f]];
      const int nf = g.neighbor_face[f];
      note(plane, max_abs_diff(p * g.planes[f], -h.planes[nf]), where);
      for (int v = 0; v < 4; ++v) {
        if (v == f) continue;
        Vec4d img = p * g.vertices[v];
        Vec4d tgt = h.vertices[g.perm[f][v]];
        if (ideal) {
          img = img / img[0];
          tgt = tgt / tgt[0];
        }
        note(verts, max_abs_diff(img, tgt), where);
      }
      note(inv, max_abs_diff(h.pairing[nf] * p, Mat4d::identity()), where);
    }
  }

  CheckResult& cycle = check("edge_cycle", 1e-6);
  CheckResult& angles = check("angle_sum", 1e-6);
  for (int e = 0; e < static_cast<int>(geom.edge_classes.size()); ++e) {
    const std::string where = "edge class " + std::to_string(e);
    note(cycle, max_abs_diff(edge_holonomy(geom, e), Mat4d::identity()), where);
    double sum = 0;
    for (const auto& emb : geom.edge_classes[e]) sum += geom.tets[emb.tet].dihedral[edge_slot(emb.a, emb.b)];
    note(angles, std::abs(sum - 2 * kPi), where);
  }

  const double wtol = geom.integral_weights ? 0.0 : 1e-9;
  CheckResult& anti = check("cocycle_antisymmetry", wtol);
  CheckResult& closed = check("cocycle_edge", wtol);
  for (int t = 0; t < n; ++t)
    for (int f = 0; f < 4; ++f) {
      const GeomTet& g = geom.tets[t];
      note(anti, std::abs(g.weights[f] + geom.tets[g.neighbor[f]].weights[g.neighbor_face[f]]), at(t, f));
    }
  for (int e = 0; e < static_cast<int>(geom.edge_classes.size()); ++e) {
    double sum = 0;
    for (const auto& emb : geom.edge_classes[e]) {
      const int src = emb.sign > 0 ? emb.a : emb.b, dst = emb.sign > 0 ? emb.b : emb.a;
      sum += geom.tets[emb.tet].weights[exit_face_of_edge(src, dst)];
    }
    note(closed, std::abs(sum), "edge class " + std::to_string(e));
  }

  for (auto& c : rep.checks) c.pass = c.worst <= c.tolerance;
  return rep;
}

}  // namespace hypertrace
