#include "hypertrace/surgery.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <json.hpp>

namespace hypertrace {

namespace {

std::string fmt_s(double s) {
  char b[32];
  std::snprintf(b, sizeof b, "%.10g", s);
  return b;
}

Eigen::Matrix4d vertex_matrix(const GeomTet& t) {
  Eigen::Matrix4d V;
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r) V(r, c) = t.vertices[c][r];
  return V;
}

}  // namespace

SurgeryPath trace_path(const CombTriangulation& tri, const SlopeFamily& family, const std::vector<double>& s_values) {
  if (tri.cusps < 1) throw InputError(tri.name + ": surgery needs a cusp");
  for (std::size_t i = 0; i < s_values.size(); ++i) {
    if (!(s_values[i] > 0) || !std::isfinite(s_values[i])) throw InputError("surgery: s values must be positive");
    if (i && !(s_values[i] < s_values[i - 1]))
      throw InputError("surgery: s values must decrease from the complete end toward the filling");
  }
  SurgeryPath path;
  path.manifold = tri.name;
  path.family = family;
  path.s_values = s_values;
  path.complete = solve_shapes(tri);
  const ShapeAssignment* prev = &path.complete;
  for (double s : s_values) {
    PathSample smp;
    smp.s = s;
    smp.filling = family.at(s);
    try {
      smp.shapes = solve_shapes(tri, {smp.filling}, *prev);
    } catch (const NumericalError& e) {
      path.diagnostic = "s = " + fmt_s(s) + ": " + e.what();
      break;
    }
    for (std::size_t t = 0; t < smp.shapes.shapes.size(); ++t)
      smp.jump = std::max(smp.jump, std::abs(smp.shapes.shapes[t] - prev->shapes[t]));
    std::string why;
    if (!(smp.shapes.residual < kPathResidual)) why = "residual " + fmt_s(smp.shapes.residual);
    for (std::size_t t = 0; t < smp.shapes.shapes.size() && why.empty(); ++t)
      if (!(smp.shapes.shapes[t].imag() > 0)) why = "tet " + std::to_string(t) + " degenerated";
    if (why.empty() && !(smp.jump < kMaxShapeJump)) why = "branch jump of " + fmt_s(smp.jump);
    if (!why.empty()) {
      path.diagnostic = "s = " + fmt_s(s) + ": " + why;
      break;
    }
    path.samples.push_back(std::move(smp));
    prev = &path.samples.back().shapes;
  }
  if (!path.diagnostic.empty() && !path.samples.empty())
    path.diagnostic += " (last good s = " + fmt_s(path.samples.back().s) + ")";
  return path;
}

ShapeAssignment solve_along_path(const CombTriangulation& tri, const SlopeFamily& family, double s) {
  std::vector<double> svals;
  for (double x : kDefaultPathSamples)
    if (x > s) svals.push_back(x);
  svals.push_back(s);
  const auto path = trace_path(tri, family, svals);
  if (!path.complete_path()) throw NumericalError("surgery continuation failed: " + path.diagnostic);
  return path.samples.back().shapes;
}

GeomTriangulation path_geometry(const CombTriangulation& tri, const ShapeAssignment& shapes) {
  return build_geometry_ideal(tri, shapes);
}

TetLocalView tet_local(const GeomTriangulation& geom, const View& view) {
  check_view(geom, view);
  TetLocalView out;
  out.view = view;
  const auto lu = vertex_matrix(geom.tets[view.anchor_tet]).fullPivLu();
  const Vec4d* f[4] = {&view.origin, &view.forward, &view.right, &view.up};
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector4d c = lu.solve(Eigen::Vector4d((*f[i])[0], (*f[i])[1], (*f[i])[2], (*f[i])[3]));
    for (int r = 0; r < 4; ++r) out.coeff[i][r] = c(r);
  }
  return out;
}

View place_view(const GeomTriangulation& geom, const TetLocalView& local) {
  View v = local.view;
  if (v.anchor_tet < 0 || v.anchor_tet >= geom.n_tets()) throw InputError("view: anchor tet out of range");
  const auto& verts = geom.tets[v.anchor_tet].vertices;
  Vec4d* f[4] = {&v.origin, &v.forward, &v.right, &v.up};
  for (int i = 0; i < 4; ++i) {
    Vec4d x{};
    for (int k = 0; k < 4; ++k) x = x + local.coeff[i][k] * verts[k];
    *f[i] = x;
  }
  orthonormalize(v);
  return v;
}

std::string frame_name(double s) {
  char b[32];
  std::snprintf(b, sizeof b, "frame_%06.3f", s);
  return b;
}

double step_cap_fraction(const WeightField& field) {
  if (field.samples.empty()) return 0;
  return static_cast<double>(field.count(Termination::RayBudget)) / field.samples.size();
}

std::vector<PathFrame> render_path(const CombTriangulation& tri, const SurgeryPath& path, const View& view,
                                   const RenderConfig& cfg, const std::string& out_dir) {
  check_config(cfg);
  std::vector<PathFrame> frames;
  if (path.samples.empty()) return frames;
  const auto local = tet_local(path_geometry(tri, path.samples.front().shapes), view);
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  for (const auto& smp : path.samples) {
    const auto geom = path_geometry(tri, smp.shapes);
    PathFrame fr;
    fr.s = smp.s;
    fr.name = frame_name(smp.s);
    fr.field = render(geom, place_view(geom, local), cfg);
    fr.step_cap_fraction = step_cap_fraction(fr.field);
    if (!out_dir.empty()) {
      const auto base = (std::filesystem::path(out_dir) / fr.name).string();
      write_png(base + ".png", colour_map(fr.field, cfg));
      write_wfld(base + ".wfld", fr.field);
    }
    frames.push_back(std::move(fr));
  }
  return frames;
}

std::string path_manifest(const SurgeryPath& path, const std::vector<PathFrame>& frames) {
  auto arr = nlohmann::json::array();
  for (const auto& smp : path.samples) {
    nlohmann::json e;
    e["s"] = smp.s;
    e["p"] = smp.filling.p;
    e["q"] = smp.filling.q;
    auto shapes = nlohmann::json::array();
    for (const auto& z : smp.shapes.shapes) shapes.push_back({z.real(), z.imag()});
    e["shapes"] = shapes;
    e["residual"] = smp.shapes.residual;
    e["iterations"] = smp.shapes.iterations;
    e["jump"] = smp.jump;
    for (const auto& f : frames)
      if (f.s == smp.s) {
        e["frame"] = f.name;
        e["step_cap_fraction"] = f.step_cap_fraction;
      }
    arr.push_back(std::move(e));
  }
  return arr.dump(2) + "\n";
}

}  // namespace hypertrace
