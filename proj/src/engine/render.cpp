#include "hypertrace/engine.hpp"

namespace hypertrace {

namespace {

template <class T>
Sample trace_one(const Kernel<double>& kd, const Kernel<T>& kt, const View& view, const RayParams& p,
                 ScreenPoint sp) {
  try {
    auto st = view_ray(kd, view, sp);
    if (!st) return {view.base_weight, 0, Termination::Failed};
    RayState<T> s;
    s.tet = st->tet;
    s.point = st->point.template cast<T>();
    s.dir = st->dir.template cast<T>();
    s.weight = st->weight;
    const Termination tag = develop_ray(kt, s, p);
    return {s.weight, double(s.arclen), tag};
  } catch (const std::exception&) {
    return {view.base_weight, 0, Termination::Failed};
  }
}

// Calls body(kd, kt) with the kernels for the configured precision.
template <class F>
void with_kernels(const GeomTriangulation& geom, Precision prec, F&& body) {
  const Kernel<double> kd(geom);
  switch (prec) {
    case Precision::F32: body(kd, Kernel<float>(geom)); break;
    case Precision::F64: body(kd, kd); break;
    case Precision::F80: body(kd, Kernel<long double>(geom)); break;
  }
}

WeightField empty_field(const RenderConfig& cfg) {
  WeightField f;
  f.width = cfg.width;
  f.height = cfg.height;
  f.k = cfg.k;
  f.precision = cfg.precision;
  f.samples.resize(static_cast<std::size_t>(cfg.width) * cfg.height * cfg.k * cfg.k);
  return f;
}

}  // namespace

std::vector<Sample> trace_points(const GeomTriangulation& geom, const View& view, const RenderConfig& cfg,
                                 const std::vector<ScreenPoint>& pts, bool parallel) {
  check_config(cfg);
  check_view(geom, view);
  std::vector<Sample> out(pts.size());
  const RayParams p = cfg.ray_params();
  with_kernels(geom, cfg.precision, [&](const Kernel<double>& kd, const auto& kt) {
    const long long n = static_cast<long long>(pts.size());
#pragma omp parallel for schedule(dynamic, 256) if (parallel)
    for (long long i = 0; i < n; ++i) out[i] = trace_one(kd, kt, view, p, pts[i]);
  });
  return out;
}

WeightField render(const GeomTriangulation& geom, const View& view, const RenderConfig& cfg) {
  check_config(cfg);
  check_view(geom, view);
  WeightField f = empty_field(cfg);
  const RayParams p = cfg.ray_params();
  const int tile = cfg.tile, kk = cfg.k * cfg.k;
  const int tx = (cfg.width + tile - 1) / tile, ty = (cfg.height + tile - 1) / tile;
  with_kernels(geom, cfg.precision, [&](const Kernel<double>& kd, const auto& kt) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int t = 0; t < tx * ty; ++t) {
      const int c0 = (t % tx) * tile, r0 = (t / tx) * tile;
      const int c1 = std::min(c0 + tile, cfg.width), r1 = std::min(r0 + tile, cfg.height);
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c)
          for (int s = 0; s < kk; ++s)
            f.samples[f.index(c, r, s)] = trace_one(kd, kt, view, p, pixel_sample(cfg, c, r, s));
    }
  });
  return f;
}

WeightField render_serial(const GeomTriangulation& geom, const View& view, const RenderConfig& cfg) {
  check_config(cfg);
  check_view(geom, view);
  WeightField f = empty_field(cfg);
  const RayParams p = cfg.ray_params();
  const int kk = cfg.k * cfg.k;
  with_kernels(geom, cfg.precision, [&](const Kernel<double>& kd, const auto& kt) {
    for (int r = 0; r < cfg.height; ++r)
      for (int c = 0; c < cfg.width; ++c)
        for (int s = 0; s < kk; ++s)
          f.samples[f.index(c, r, s)] = trace_one(kd, kt, view, p, pixel_sample(cfg, c, r, s));
  });
  return f;
}

}  // namespace hypertrace
