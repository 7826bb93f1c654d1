#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "hypertrace/hypgeom.hpp"
#include "hypertrace/tricomplex.hpp"

namespace hypertrace {

enum class Termination : std::uint8_t { RayBudget = 0, Radius = 1, EdgeHit = 2, ElevationHit = 3, Failed = 4 };

const char* to_string(Termination t);

// f80 is the x87 long double, used as the high-precision reference.
enum class Precision : std::uint8_t { F32 = 0, F64 = 1, F80 = 2 };

const char* to_string(Precision p);
Precision parse_precision(const std::string& s);

// The geometry flattened into arrays of the kernel scalar.
template <class T>
struct Kernel {
  std::vector<std::array<Vec4<T>, 4>> planes;
  std::vector<std::array<Mat4<T>, 4>> pairing;
  std::vector<std::array<int, 4>> neighbor, neighbor_face;
  std::vector<std::array<double, 4>> weight;
  std::vector<std::array<std::array<Vec4<T>, 2>, 6>> edge_ends;

  Kernel() = default;
  explicit Kernel(const GeomTriangulation& g) {
    const int n = g.n_tets();
    planes.resize(n);
    pairing.resize(n);
    neighbor.resize(n);
    neighbor_face.resize(n);
    weight.resize(n);
    edge_ends.resize(n);
    for (int t = 0; t < n; ++t) {
      const GeomTet& gt = g.tets[t];
      for (int f = 0; f < 4; ++f) {
        planes[t][f] = gt.planes[f].cast<T>();
        pairing[t][f] = gt.pairing[f].cast<T>();
      }
      neighbor[t] = gt.neighbor;
      neighbor_face[t] = gt.neighbor_face;
      weight[t] = gt.weights;
      for (int e = 0; e < 6; ++e)
        for (int s = 0; s < 2; ++s) edge_ends[t][e][s] = gt.edge_ends[e][s].cast<T>();
    }
  }
  int n_tets() const { return static_cast<int>(planes.size()); }
};

template <class T>
struct RayState {
  int tet = 0;
  Vec4<T> point{};
  Vec4<T> dir{};
  double weight = 0;  // exact for integer weights below 2^53
  T arclen = 0;
  int steps = 0;
  int entry_face = -1;  // face the ray last came through, skipped in exit search
};

struct RayParams {
  double R = 0;
  int S = 1000;
  double edge_eps = 0;  // 0 disables edge tubes
  std::optional<double> elevation_wmax;
};

// A crossing recorded by the tracing variant of develop_ray.
struct Crossing {
  int tet = 0, face = 0;
  double weight = 0;
};

// Develops the ray in place. With `g` non-null the product of the pairings
// applied so far is accumulated into it (left multiplication).
template <class T>
Termination develop_ray(const Kernel<T>& k, RayState<T>& s, const RayParams& p,
                        std::type_identity_t<Mat4<T>>* g = nullptr,
                        std::vector<Crossing>* trace = nullptr) {
  const double w0 = s.weight;
  const T R = T(p.R);
  if (!(s.arclen < R)) return Termination::Radius;
  for (;;) {
    int exit = -1;
    T best = 0;
    for (int f = 0; f < 4; ++f) {
      if (f == s.entry_face) continue;
      auto t = exit_parameter(s.point, s.dir, k.planes[s.tet][f]);
      if (t && (exit < 0 || *t < best)) {
        exit = f;
        best = *t;
      }
    }
    if (exit < 0) return Termination::Failed;
    if (s.arclen + best > R) {
      auto [x, v] = geodesic_at(s.point, s.dir, R - s.arclen);
      s.point = x;
      s.dir = v;
      s.arclen = R;
      return Termination::Radius;
    }
    {
      auto [x, v] = geodesic_at(s.point, s.dir, best);
      s.point = x;
      s.dir = v;
      s.arclen += best;
    }
    if (++s.steps > p.S) return Termination::RayBudget;
    if (p.edge_eps > 0) {
      for (int e = 0; e < 6; ++e) {
        const auto& ends = k.edge_ends[s.tet][e];
        if (dist_point_to_ideal_geodesic(s.point, ends[0], ends[1]) < T(p.edge_eps))
          return Termination::EdgeHit;
      }
    }
    const Mat4<T>& m = k.pairing[s.tet][exit];
    s.point = m * s.point;
    s.dir = m * s.dir;
    if (g) *g = m * *g;
    s.weight += k.weight[s.tet][exit];
    if (trace) trace->push_back({s.tet, exit, k.weight[s.tet][exit]});
    s.entry_face = k.neighbor_face[s.tet][exit];
    s.tet = k.neighbor[s.tet][exit];
    renormalize(s.point, s.dir);
    if (p.elevation_wmax) {
      const double wm = *p.elevation_wmax, wc = s.weight;
      if ((w0 < 0 && wc > 0) || (w0 > wm && wc < wm) || (0 < w0 && w0 < wm && wc != w0))
        return Termination::ElevationHit;
    }
  }
}

enum class ViewKind : std::uint8_t { Material, Ideal, Hyperideal };

const char* to_string(ViewKind k);
ViewKind parse_view_kind(const std::string& s);

// One frame for all three kinds: `origin` with orthonormal tangent vectors
// forward/right/up.
//   material:   rays leave origin through a gnomonic screen; fov in degrees,
//               measured between the midpoints of the left and right edges.
//   ideal:      the horosphere through origin centred at origin - forward,
//               rays along its normals facing away from the centre; fov is
//               the screen width in the horosphere's flat metric.
//   hyperideal: the plane through origin normal to forward, rays along
//               forward; fov is the screen width in Klein coordinates
//               (the plane's Klein disk has radius 1).
struct View {
  ViewKind kind = ViewKind::Material;
  int anchor_tet = 0;
  Vec4d origin{{1, 0, 0, 0}};
  Vec4d forward{{0, 1, 0, 0}};
  Vec4d right{{0, 0, 1, 0}};
  Vec4d up{{0, 0, 0, 1}};
  double fov = 90;
  double base_weight = 0;
};

struct ColourConfig {
  double scale = 1;
  std::string gradient = "default";
  std::optional<double> threshold;
  bool by_distance = false;  // colour edge/elevation hits by distance travelled
};

struct RenderConfig {
  double R = 7.38905609893065;
  int S = 1000;
  int k = 1;
  int width = 256, height = 256;
  std::optional<double> edge_eps;
  std::optional<double> elevation_wmax;
  ColourConfig colour;
  Precision precision = Precision::F64;
  bool jitter = false;
  std::uint64_t seed = 0;
  int tile = 32;

  RayParams ray_params() const { return {R, S, edge_eps.value_or(0), elevation_wmax}; }
};

// Throws InputError when a field is out of range.
void check_config(const RenderConfig& cfg);

struct Sample {
  double weight = 0;
  double distance = 0;
  Termination tag = Termination::Radius;
};

// Samples are stored pixel by pixel in row-major order, the k*k sub-samples
// of a pixel contiguous.
struct WeightField {
  int width = 0, height = 0, k = 1;
  Precision precision = Precision::F64;
  std::vector<Sample> samples;

  std::size_t index(int col, int row, int sub = 0) const {
    return (static_cast<std::size_t>(row) * width + col) * k * k + sub;
  }
  const Sample& at(int col, int row, int sub = 0) const { return samples[index(col, row, sub)]; }
  std::size_t count(Termination t) const;
};

// Normalized screen coordinates: x in [-1, 1] spans the screen width, y is
// measured in the same units (so it spans [-h/w, h/w]), up is positive.
struct ScreenPoint {
  double x = 0, y = 0;
};

// Base point and direction of the ray through a screen point, in the anchor
// tet's coordinates. nullopt outside the Klein disk of a hyperideal view.
std::optional<std::pair<Vec4d, Vec4d>> screen_ray(const View& view, ScreenPoint p);

// Start state of the ray through a screen point, in double. For ideal and
// hyperideal views the base is located by developing from the origin, so
// the returned state can lie in another tetrahedron and carries the path
// weight. nullopt when the base cannot be located.
std::optional<RayState<double>> view_ray(const Kernel<double>& k, const View& view, ScreenPoint p);

// Counter-based generator: a stateless hash of (seed, counter), so samples
// can be drawn in any order or thread and still replay.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform in [0, 1) from the top 53 bits.
inline double unit_from(std::uint64_t h) { return (h >> 11) * 0x1.0p-53; }

inline double uniform_at(std::uint64_t seed, std::uint64_t counter) {
  return unit_from(splitmix64(seed ^ splitmix64(counter)));
}

// Screen point of sub-sample `sub` of pixel (col, row).
ScreenPoint pixel_sample(const RenderConfig& cfg, int col, int row, int sub);

// Geometry checks on the view: frame orthonormality, origin inside anchor.
void check_view(const GeomTriangulation& geom, const View& view);

// A view centred in tet `tet` looking along a fixed generic direction.
View default_view(const GeomTriangulation& geom, ViewKind kind, int tet = 0, double fov = 0);

// Gram-Schmidt the frame against the origin.
void orthonormalize(View& v);

// Push the view distance d along forward; for an ideal view this is the
// horosphere flow. Screen coordinates are unchanged, so a flat displacement
// z ends up at e^d z. Re-anchors through the triangulation.
View flow_view(const GeomTriangulation& geom, const View& view, double d);

// The developing map image of a point, following the geodesic from `from`
// (a point of tet `tet`) to `to`, both in tet's coordinates.
struct Located {
  int tet = 0;
  Vec4d point{};
  Mat4d holonomy = Mat4d::identity();  // maps the start coordinates to the final tet's
  double weight = 0;
  int crossings = 0;
};
std::optional<Located> locate(const Kernel<double>& k, int tet, const Vec4d& from, const Vec4d& to,
                              int max_crossings);

struct StepTooLarge : NumericalError {
  using NumericalError::NumericalError;
};

inline constexpr int kMaxCameraCrossings = 64;

// Apply the motion (in the anchor tet's coordinates) to origin and frame and
// re-anchor, adding the weights of crossed faces to base_weight.
View step_camera(const GeomTriangulation& geom, const View& view, const Mat4d& motion);

enum class Motion { Forward, Back, Left, Right, Up, Down, YawLeft, YawRight, PitchUp, PitchDown, RollLeft, RollRight };
Motion parse_motion(const std::string& s);
Mat4d motion_matrix(const View& view, Motion m, double amount);

// Samples at arbitrary screen points; the same per-ray code as render.
std::vector<Sample> trace_points(const GeomTriangulation& geom, const View& view, const RenderConfig& cfg,
                                 const std::vector<ScreenPoint>& pts, bool parallel = true);

// Tiles of cfg.tile^2 pixels distributed over OpenMP threads.
WeightField render(const GeomTriangulation& geom, const View& view, const RenderConfig& cfg);
// Single-threaded reference, pixel by pixel.
WeightField render_serial(const GeomTriangulation& geom, const View& view, const RenderConfig& cfg);

struct RGBImage {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;
};

// Gradient position in [0, 1] to linear RGB.
std::array<double, 3> gradient_linear(const std::string& id, double s);
RGBImage colour_map(const WeightField& field, const RenderConfig& cfg);

void write_png(const std::string& path, const RGBImage& img);
std::string encode_png(const RGBImage& img);
void write_ppm(const std::string& path, const RGBImage& img);

// "WFLD", version, width, height, k, precision, 8 reserved bytes, then the
// f64 weights. Little-endian.
std::string encode_wfld(const WeightField& field);
WeightField decode_wfld(const std::string& bytes);
void write_wfld(const std::string& path, const WeightField& field);

}  // namespace hypertrace
