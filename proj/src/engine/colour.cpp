#include <algorithm>
#include <cmath>
#include <numbers>

#include "hypertrace/engine.hpp"

namespace hypertrace {

namespace {

double srgb_to_linear(double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); }

double linear_to_srgb(double c) {
  c = std::clamp(c, 0.0, 1.0);
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1 / 2.4) - 0.055;
}

struct Stop {
  double s;
  double r, g, b;  // sRGB
};

// Dark violet through blue and near-white to orange and dark red. An
// arbitrary choice; tests compare weights, not colours.
constexpr Stop kDefault[] = {{0.0, 0.06, 0.02, 0.16}, {0.25, 0.16, 0.32, 0.78}, {0.5, 0.96, 0.95, 0.90},
                             {0.75, 0.96, 0.58, 0.12}, {1.0, 0.38, 0.04, 0.05}};
constexpr Stop kGrey[] = {{0.0, 0, 0, 0}, {1.0, 1, 1, 1}};

template <std::size_t N>
std::array<double, 3> interpolate(const Stop (&stops)[N], double s) {
  s = std::clamp(s, 0.0, 1.0);
  std::size_t i = 0;
  while (i + 2 < N && s > stops[i + 1].s) ++i;
  const Stop &a = stops[i], &b = stops[i + 1];
  const double t = (s - a.s) / (b.s - a.s);
  return {srgb_to_linear(a.r + t * (b.r - a.r)), srgb_to_linear(a.g + t * (b.g - a.g)),
          srgb_to_linear(a.b + t * (b.b - a.b))};
}

}  // namespace

std::array<double, 3> gradient_linear(const std::string& id, double s) {
  if (id == "default") return interpolate(kDefault, s);
  if (id == "grey") return interpolate(kGrey, s);
  throw InputError("unknown gradient '" + id + "' (expected default or grey)");
}

RGBImage colour_map(const WeightField& field, const RenderConfig& cfg) {
  const ColourConfig& cc = cfg.colour;
  gradient_linear(cc.gradient, 0.5);  // validate the id up front
  RGBImage img;
  img.width = field.width;
  img.height = field.height;
  img.rgb.resize(static_cast<std::size_t>(field.width) * field.height * 3);
  const int kk = field.k * field.k;
  const double R = cfg.R > 0 ? cfg.R : 1;
#pragma omp parallel for schedule(static)
  for (int row = 0; row < field.height; ++row)
    for (int col = 0; col < field.width; ++col) {
      std::array<double, 3> acc{0, 0, 0};
      for (int s = 0; s < kk; ++s) {
        const Sample& smp = field.at(col, row, s);
        std::array<double, 3> c{0, 0, 0};
        if (smp.tag == Termination::Failed) {
          // black
        } else if (cc.by_distance &&
                   (smp.tag == Termination::EdgeHit || smp.tag == Termination::ElevationHit)) {
          c = gradient_linear("grey", 1 - smp.distance / R);
        } else if (cc.threshold) {
          const double v = smp.weight >= *cc.threshold ? 1 : 0;
          c = {v, v, v};
        } else {
          c = gradient_linear(cc.gradient, 0.5 + std::atan(smp.weight / cc.scale) / std::numbers::pi);
        }
        for (int i = 0; i < 3; ++i) acc[i] += c[i];
      }
      const std::size_t o = (static_cast<std::size_t>(row) * field.width + col) * 3;
      for (int i = 0; i < 3; ++i)
        img.rgb[o + i] = static_cast<std::uint8_t>(std::lround(255 * linear_to_srgb(acc[i] / kk)));
    }
  return img;
}

}  // namespace hypertrace
