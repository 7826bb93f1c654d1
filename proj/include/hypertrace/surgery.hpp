#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hypertrace/engine.hpp"

namespace hypertrace {

// s -> (p s, q s) on the first cusp.
struct SlopeFamily {
  double p = 4, q = -1;
  Filling at(double s) const { return {p * s, q * s}; }
};

// The bending sequence for m122: from nearly complete down to the filling.
inline const std::vector<double> kDefaultPathSamples{10, 5, 4, 3, 2, 1.8, 1.6, 1.4, 1.2, 1};

// Consecutive solutions further apart than this (max per-tet |dz|) are
// treated as a branch jump.
inline constexpr double kMaxShapeJump = 0.5;
inline constexpr double kPathResidual = 1e-12;

struct PathSample {
  double s = 0;
  Filling filling;
  ShapeAssignment shapes;
  double jump = 0;  // max per-tet |z(s) - z(previous)|
};

struct SurgeryPath {
  std::string manifold;
  SlopeFamily family;
  std::vector<double> s_values;     // as requested
  ShapeAssignment complete;         // the starting point
  std::vector<PathSample> samples;  // the solved prefix
  std::string diagnostic;           // empty when the whole path solved

  bool complete_path() const { return samples.size() == s_values.size(); }
};

// Continuation from the complete structure through s_values, each solve
// started from its predecessor. Stops at the first sample whose Newton
// solve fails, leaves the upper half plane, misses kPathResidual or jumps
// by more than kMaxShapeJump, keeping the solved prefix.
SurgeryPath trace_path(const CombTriangulation& tri, const SlopeFamily& family, const std::vector<double>& s_values);

// Shapes at a single s, continued along the samples of kDefaultPathSamples
// above s. Throws NumericalError when the continuation breaks.
ShapeAssignment solve_along_path(const CombTriangulation& tri, const SlopeFamily& family, double s);

// Tet-local coordinates of the camera: origin and frame as coefficients on
// the anchor tet's vertices. Moving them to another geometry of the same
// triangulation keeps the camera's place relative to its tetrahedron.
struct TetLocalView {
  View view;  // kind, anchor, fov, base weight
  std::array<Vec4d, 4> coeff{};
};
TetLocalView tet_local(const GeomTriangulation& geom, const View& view);
View place_view(const GeomTriangulation& geom, const TetLocalView& local);

struct PathFrame {
  double s = 0;
  std::string name;  // frame_<s>
  WeightField field;
  double step_cap_fraction = 0;
};

// Renders every solved sample with the view carried along in tet-local
// coordinates. `view` is given in the geometry of the first sample. With
// `out_dir` set, writes <name>.png and <name>.wfld there.
std::vector<PathFrame> render_path(const CombTriangulation& tri, const SurgeryPath& path, const View& view,
                                   const RenderConfig& cfg, const std::string& out_dir = {});

GeomTriangulation path_geometry(const CombTriangulation& tri, const ShapeAssignment& shapes);

std::string frame_name(double s);
double step_cap_fraction(const WeightField& field);

// JSON array of {s, p, q, shapes: [[re, im], ...], residual, iterations, jump}
// plus the step-cap fraction of each rendered frame when given.
std::string path_manifest(const SurgeryPath& path, const std::vector<PathFrame>& frames = {});

}  // namespace hypertrace
