#include <cmath>
#include <sstream>

#include "hypertrace/engine.hpp"

namespace hypertrace {

namespace {

Vec4d tangent_unit(const Vec4d& x, Vec4d v) {
  v = v + minkowski_dot(x, v) * x;
  return v / std::sqrt(minkowski_dot(v, v));
}

}  // namespace

std::optional<Located> locate(const Kernel<double>& k, int tet, const Vec4d& from, const Vec4d& to,
                              int max_crossings) {
  Located out;
  out.tet = tet;
  const double c = -minkowski_dot(from, to);
  const double d = std::acosh(std::max(1.0, c));
  if (d < 1e-15) {
    out.point = to;
    return out;
  }
  RayState<double> s;
  s.tet = tet;
  s.point = from;
  s.dir = tangent_unit(from, to - c * from);
  RayParams p;
  p.R = d;
  p.S = max_crossings;
  Mat4d g = Mat4d::identity();
  if (develop_ray(k, s, p, &g) != Termination::Radius) return std::nullopt;
  out.tet = s.tet;
  Vec4d x = g * to, v = s.dir;
  renormalize(x, v);
  out.point = x;
  out.holonomy = g;
  out.weight = s.weight;
  out.crossings = s.steps;
  return out;
}

View step_camera(const GeomTriangulation& geom, const View& view, const Mat4d& motion) {
  if (motion == Mat4d::identity()) return view;
  const Kernel<double> k(geom);
  const Vec4d target = motion * view.origin;
  auto loc = locate(k, view.anchor_tet, view.origin, target, kMaxCameraCrossings);
  if (!loc) {
    std::ostringstream s;
    s << "camera step too large: the path leaves tet " << view.anchor_tet << " through more than "
      << kMaxCameraCrossings << " faces";
    throw StepTooLarge(s.str());
  }
  View out = view;
  const Mat4d g = loc->holonomy * motion;
  out.anchor_tet = loc->tet;
  out.origin = loc->point;
  out.forward = g * view.forward;
  out.right = g * view.right;
  out.up = g * view.up;
  out.base_weight = view.base_weight + loc->weight;
  orthonormalize(out);
  return out;
}

View flow_view(const GeomTriangulation& geom, const View& view, double d) {
  return step_camera(geom, view, translation(view.origin, view.forward, d));
}

Motion parse_motion(const std::string& s) {
  static const std::pair<const char*, Motion> names[] = {
      {"forward", Motion::Forward},   {"back", Motion::Back},           {"left", Motion::Left},
      {"right", Motion::Right},       {"up", Motion::Up},               {"down", Motion::Down},
      {"yaw_left", Motion::YawLeft},  {"yaw_right", Motion::YawRight},  {"pitch_up", Motion::PitchUp},
      {"pitch_down", Motion::PitchDown}, {"roll_left", Motion::RollLeft}, {"roll_right", Motion::RollRight}};
  for (const auto& [n, m] : names)
    if (s == n) return m;
  throw InputError("unknown motion '" + s + "'");
}

Mat4d motion_matrix(const View& v, Motion m, double a) {
  switch (m) {
    case Motion::Forward: return translation(v.origin, v.forward, a);
    case Motion::Back: return translation(v.origin, v.forward, -a);
    case Motion::Right: return translation(v.origin, v.right, a);
    case Motion::Left: return translation(v.origin, v.right, -a);
    case Motion::Up: return translation(v.origin, v.up, a);
    case Motion::Down: return translation(v.origin, v.up, -a);
    case Motion::YawRight: return rotation(v.forward, v.right, a);
    case Motion::YawLeft: return rotation(v.forward, v.right, -a);
    case Motion::PitchUp: return rotation(v.forward, v.up, a);
    case Motion::PitchDown: return rotation(v.forward, v.up, -a);
    case Motion::RollRight: return rotation(v.up, v.right, a);
    case Motion::RollLeft: return rotation(v.up, v.right, -a);
  }
  return Mat4d::identity();
}

}  // namespace hypertrace
