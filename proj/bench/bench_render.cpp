// Times the OpenMP tile renderer against the serial reference on one view
// and checks that both produce the same field.

#include <CLI11.hpp>
#include <omp.h>

#include <chrono>
#include <cstdio>

#include "hypertrace/engine.hpp"

using namespace hypertrace;

int main(int argc, char** argv) {
  CLI::App app{"render benchmark: parallel tiles vs serial reference"};
  std::string manifold = "m004";
  int width = 512, height = 512, k = 1, reps = 3, threads = 0;
  double R = 7.38905609893065;
  app.add_option("--manifold", manifold);
  app.add_option("--width", width)->check(CLI::PositiveNumber);
  app.add_option("--height", height)->check(CLI::PositiveNumber);
  app.add_option("--k", k)->check(CLI::PositiveNumber);
  app.add_option("--R", R)->check(CLI::PositiveNumber);
  app.add_option("--reps", reps)->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "0: OpenMP default");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  const auto tri = load_manifold(manifold);
  const auto geom = tri.is_material() ? build_geometry_material(tri) : build_geometry_ideal(tri, solve_shapes(tri));
  const View view = default_view(geom, ViewKind::Material);
  RenderConfig cfg;
  cfg.width = width;
  cfg.height = height;
  cfg.k = k;
  cfg.R = R;

  auto time = [&](auto&& f) {
    double best = 1e300;
    WeightField out;
    for (int i = 0; i < reps; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      out = f();
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return std::make_pair(best, out);
  };
  const auto [ts, serial] = time([&] { return render_serial(geom, view, cfg); });
  const auto [tp, parallel] = time([&] { return render(geom, view, cfg); });
  const double rays = static_cast<double>(width) * height * k * k;
  std::printf("%s %dx%d k=%d R=%g, best of %d\n", manifold.c_str(), width, height, k, R, reps);
  std::printf("serial   %8.3f s  %10.0f rays/s\n", ts, rays / ts);
  std::printf("parallel %8.3f s  %10.0f rays/s  (%d threads, speedup %.2fx)\n", tp, rays / tp, omp_get_max_threads(),
              ts / tp);
  const bool same = encode_wfld(serial) == encode_wfld(parallel);
  std::printf("fields identical: %s\n", same ? "yes" : "NO");
  return same ? 0 : 1;
}
