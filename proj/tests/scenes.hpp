#pragma once

// Bundled geometries shared by the test programs, built once.

#include "hypertrace/tricomplex.hpp"

namespace scenes {

inline const hypertrace::CombTriangulation& m004_comb() {
  static const auto t = hypertrace::load_manifold("m004");
  return t;
}

inline const hypertrace::GeomTriangulation& m004() {
  static const auto g = hypertrace::build_geometry_ideal(m004_comb(), hypertrace::solve_shapes(m004_comb()));
  return g;
}

inline const hypertrace::GeomTriangulation& m122_material() {
  static const auto g = hypertrace::build_geometry_material(hypertrace::load_manifold("m122_4_-1"));
  return g;
}

}  // namespace scenes
