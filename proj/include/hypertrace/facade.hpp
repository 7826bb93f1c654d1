#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypertrace/ct.hpp"
#include "hypertrace/engine.hpp"
#include "hypertrace/stats.hpp"
#include "hypertrace/surgery.hpp"

namespace hypertrace {

struct ViewSpec {
  ViewKind kind = ViewKind::Material;
  int tet = 0;
  double fov = 0;  // 0: the kind's default
  double base_weight = 0;
  // Explicit frame in the anchor tet's coordinates; default_view otherwise.
  std::optional<std::array<Vec4d, 4>> frame;  // origin, forward, right, up
};

struct RunConfig {
  std::string op;  // validate, solve, render, ct, stats sample|curve|sigma|hist|converge, surgery
  std::string manifold = "m004";
  std::string cocycle;               // empty: the file's first class
  std::optional<double> surgery_s;   // incomplete structure on the bending path
  SlopeFamily family;
  ViewSpec view;
  RenderConfig render;
  nlohmann::json experiment = nlohmann::json::object();  // op parameters
  std::string output = "hypertrace_out";
  std::uint64_t seed = 1234;
};

// Throws InputError naming the offending key.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config_file(const std::string& path);

struct Scene {
  CombTriangulation tri;
  GeomTriangulation geom;
};

// Loads, selects the cocycle and builds the geometry: material data as is,
// ideal data from the complete solve or, with surgery_s, from the path.
std::shared_ptr<const Scene> load_scene(const std::string& manifold, const std::string& cocycle = {},
                                        std::optional<double> surgery_s = std::nullopt,
                                        const SlopeFamily& family = {});
View make_view(const GeomTriangulation& geom, const ViewSpec& spec);

nlohmann::json view_to_json(const View& v);
ViewSpec view_spec_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json view_spec_to_json(const ViewSpec& v);

// Applies a partial RenderConfig object (the keys of render_to_json) and
// validates the result; where prefixes error messages.
void apply_render_json(RenderConfig& r, const nlohmann::json& j, const std::string& where);
nlohmann::json render_to_json(const RenderConfig& r);

// Runs the configured op, writes its outputs and config.json into
// cfg.output, and returns a summary.
nlohmann::json run_op(const RunConfig& cfg);

// The CLI; returns the exit status (1 input error, 2 numerical failure).
int cli(int argc, char** argv);

// FNV-1a 64, hex.
std::string content_hash(const std::string& bytes);

struct ServiceOptions {
  std::string static_dir;  // optional viewer bundle
  int max_pixels = 4096 * 4096;
};

class Service {
 public:
  explicit Service(ServiceOptions opts = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Blocks until stop().
  bool listen(const std::string& host, int port);
  // Binds to a free port and returns it; then listen_after_bind() blocks.
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hypertrace
