#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "hypertrace/engine.hpp"

namespace hypertrace {

// A tetrahedron of the universal cover: `placement` maps the model tet's
// coordinates into the developed picture (the anchor tet's coordinates).
// `level` is the primitive W of the lifted cocycle on the cell.
struct LiftedCell {
  int tet = 0;
  Mat4d placement = Mat4d::identity();
  double level = 0;
};

// A triangle of the level-0 elevation: face `face` of `cell`, where the cell
// is on the negative side (W < 0) and its neighbour across the face is not.
struct DiskTriangle {
  LiftedCell cell;
  int face = 0;
  std::array<int, 3> verts{};   // tet vertices of the face, increasing
  std::array<Vec4d, 3> ideal{};  // developed light vectors of verts
  // Across the edge opposite local vertex i: the adjacent elevation triangle
  // (index into ElevationDisk::triangles, -1 when it is not in the disk) and
  // the tet vertices of that triangle matching the two shared ones (in the
  // order of this triangle's verts).
  std::array<int, 3> neighbor{-1, -1, -1};
  std::array<std::array<int, 2>, 3> neighbor_verts{};
  std::array<double, 3> pleating{};  // wedge angle on the negative side
};

struct ElevationDisk {
  std::vector<DiskTriangle> triangles;  // breadth-first, seed first
  Vec4d basepoint{};
};

// Breadth-first development from the view's anchor tet (level base_weight)
// over level-0 triangles having an edge within R_disk of the basepoint,
// starting from the triangle on the lowest-index anchor face that carries the
// level-0 elevation. Ideal geometry only. The lifted cells are not
// deduplicated: the triangles form a tree under edge adjacency.
ElevationDisk build_elevation_disk(const GeomTriangulation& geom, const View& basepoint, double R_disk,
                                   std::size_t max_triangles = 4000000);

// The anchor view with base_weight set so the elevation passes through a face
// of the anchor tet: -w/2 for its first face of positive weight w.
View fiber_basepoint(const GeomTriangulation& geom, const View& view);

struct CTPolyline {
  std::vector<Vec4d> points;  // circularly ordered ideal points
  std::vector<int> source;    // disk triangle of the segment starting at points[i]
};

CTPolyline boundary_polyline(const ElevationDisk& disk);

// Upper half space coordinate of an ideal point in the frame of the view:
// the point straight ahead is 0, right is +1 and up is +i.
std::complex<double> view_plane(const View& view, const Vec4d& ideal);

// Normalized screen coordinates (see ScreenPoint) of an ideal point seen from
// a material view; false when it is behind the camera.
bool ideal_to_screen(const View& view, const Vec4d& ideal, ScreenPoint& out);

std::string polyline_svg(const CTPolyline& line, const View& view);

struct MaskDisk {
  double col = 0, row = 0, radius = 0;  // pixel units
};

struct MatchReport {
  double hausdorff_px = 0;
  double coverage = 0;
  double masked_fraction = 0;
  std::size_t polyline_pixels = 0;
  std::size_t boundary_pixels = 0;
};

// Compares the rasterized polyline with the boundary pixels of the sign
// region Z = {w >= 0} (pixels of Z with a 4-neighbour outside Z), using the
// first sub-sample of each pixel. Pixels inside the mask are ignored.
// coverage: fraction of polyline pixels within 3 px of a boundary pixel.
// hausdorff_px: symmetric, against the 8-connected components of boundary
// pixels that come within 3 px of the polyline (boundary_pixels counts them).
MatchReport match_level_set(const CTPolyline& line, const WeightField& field, const View& view,
                            const std::vector<MaskDisk>& mask = {});

// Mask disks around the projected ideal vertices of the disk that at least
// `min_degree` disk triangles meet (the cusps that come close to the basepoint).
std::vector<MaskDisk> cusp_mask(const ElevationDisk& disk, const View& view, int width, int height,
                                double radius_px, int min_degree);

std::string to_json(const MatchReport& r);

}  // namespace hypertrace
