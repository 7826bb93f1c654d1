#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "hypertrace/facade.hpp"

namespace hypertrace {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw InputError("config: " + where + ": " + what);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(where, "expected an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) bad(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
}

std::string path_of(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

double get_num(const json& j, const std::string& where, const char* key, double def) {
  if (!j.contains(key)) return def;
  const auto& v = j[key];
  if (!v.is_number()) bad(path_of(where, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(path_of(where, key), "must be finite");
  return x;
}

int get_int(const json& j, const std::string& where, const char* key, int def) {
  if (!j.contains(key)) return def;
  const auto& v = j[key];
  if (!v.is_number_integer()) bad(path_of(where, key), "expected an integer");
  return v.get<int>();
}

bool get_bool(const json& j, const std::string& where, const char* key, bool def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_boolean()) bad(path_of(where, key), "expected true or false");
  return j[key].get<bool>();
}

std::string get_str(const json& j, const std::string& where, const char* key, const std::string& def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_string()) bad(path_of(where, key), "expected a string");
  return j[key].get<std::string>();
}

std::optional<double> get_opt(const json& j, const std::string& where, const char* key,
                              std::optional<double> def) {
  if (!j.contains(key)) return def;
  if (j[key].is_null()) return std::nullopt;
  return get_num(j, where, key, 0);
}

Vec4d get_vec(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) bad(where, "expected an array of 4 numbers");
  Vec4d v{};
  for (int i = 0; i < 4; ++i) {
    if (!j[i].is_number()) bad(where, "expected an array of 4 numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

json vec_json(const Vec4d& v) { return json::array({v[0], v[1], v[2], v[3]}); }

json opt_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

}  // namespace

void apply_render_json(RenderConfig& r, const json& j, const std::string& where) {
  only_keys(j, where,
            {"R", "S", "k", "width", "height", "edge_eps", "elevation_wmax", "precision", "jitter", "seed", "tile",
             "colour"});
  r.R = get_num(j, where, "R", r.R);
  r.S = get_int(j, where, "S", r.S);
  r.k = get_int(j, where, "k", r.k);
  r.width = get_int(j, where, "width", r.width);
  r.height = get_int(j, where, "height", r.height);
  r.edge_eps = get_opt(j, where, "edge_eps", r.edge_eps);
  r.elevation_wmax = get_opt(j, where, "elevation_wmax", r.elevation_wmax);
  if (j.contains("precision")) {
    try {
      r.precision = parse_precision(get_str(j, where, "precision", ""));
    } catch (const InputError& e) {
      bad(path_of(where, "precision"), e.what());
    }
  }
  r.jitter = get_bool(j, where, "jitter", r.jitter);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) bad(path_of(where, "seed"), "expected a non-negative integer");
    r.seed = j["seed"].get<std::uint64_t>();
  }
  r.tile = get_int(j, where, "tile", r.tile);
  if (j.contains("colour")) {
    const auto& c = j["colour"];
    const auto cw = path_of(where, "colour");
    only_keys(c, cw, {"scale", "gradient", "threshold", "by_distance"});
    r.colour.scale = get_num(c, cw, "scale", r.colour.scale);
    r.colour.gradient = get_str(c, cw, "gradient", r.colour.gradient);
    r.colour.threshold = get_opt(c, cw, "threshold", r.colour.threshold);
    r.colour.by_distance = get_bool(c, cw, "by_distance", r.colour.by_distance);
    try {
      gradient_linear(r.colour.gradient, 0.5);
    } catch (const InputError& e) {
      bad(path_of(cw, "gradient"), e.what());
    }
  }
  try {
    check_config(r);
  } catch (const InputError& e) {
    throw InputError("config: " + std::string(e.what()));
  }
}

json render_to_json(const RenderConfig& r) {
  return {{"R", r.R},
          {"S", r.S},
          {"k", r.k},
          {"width", r.width},
          {"height", r.height},
          {"edge_eps", opt_json(r.edge_eps)},
          {"elevation_wmax", opt_json(r.elevation_wmax)},
          {"precision", to_string(r.precision)},
          {"jitter", r.jitter},
          {"seed", r.seed},
          {"tile", r.tile},
          {"colour",
           {{"scale", r.colour.scale},
            {"gradient", r.colour.gradient},
            {"threshold", opt_json(r.colour.threshold)},
            {"by_distance", r.colour.by_distance}}}};
}

ViewSpec view_spec_from_json(const json& j, const std::string& where) {
  only_keys(j, where, {"kind", "tet", "fov", "base_weight", "origin", "forward", "right", "up"});
  ViewSpec v;
  try {
    v.kind = parse_view_kind(get_str(j, where, "kind", "material"));
  } catch (const InputError& e) {
    bad(path_of(where, "kind"), e.what());
  }
  v.tet = get_int(j, where, "tet", 0);
  v.fov = get_num(j, where, "fov", 0);
  if (v.fov < 0) bad(path_of(where, "fov"), "must be positive (or 0 for the default)");
  v.base_weight = get_num(j, where, "base_weight", 0);
  const int given = j.contains("origin") + j.contains("forward") + j.contains("right") + j.contains("up");
  if (given == 4) {
    v.frame = std::array<Vec4d, 4>{get_vec(j["origin"], path_of(where, "origin")),
                                   get_vec(j["forward"], path_of(where, "forward")),
                                   get_vec(j["right"], path_of(where, "right")),
                                   get_vec(j["up"], path_of(where, "up"))};
  } else if (given) {
    bad(where, "origin, forward, right and up must be given together");
  }
  return v;
}

json view_spec_to_json(const ViewSpec& v) {
  json j{{"kind", to_string(v.kind)}, {"tet", v.tet}, {"fov", v.fov}, {"base_weight", v.base_weight}};
  if (v.frame) {
    j["origin"] = vec_json((*v.frame)[0]);
    j["forward"] = vec_json((*v.frame)[1]);
    j["right"] = vec_json((*v.frame)[2]);
    j["up"] = vec_json((*v.frame)[3]);
  }
  return j;
}

json view_to_json(const View& v) {
  return {{"kind", to_string(v.kind)},     {"tet", v.anchor_tet},        {"fov", v.fov},
          {"base_weight", v.base_weight}, {"origin", vec_json(v.origin)}, {"forward", vec_json(v.forward)},
          {"right", vec_json(v.right)},    {"up", vec_json(v.up)}};
}

RunConfig config_from_json(const json& j) {
  only_keys(j, "", {"op", "manifold", "cocycle", "surgery", "view", "render", "experiment", "output", "seed"});
  RunConfig c;
  c.op = get_str(j, "", "op", "");
  c.manifold = get_str(j, "", "manifold", c.manifold);
  if (c.manifold.empty()) bad("manifold", "must not be empty");
  c.cocycle = get_str(j, "", "cocycle", "");
  if (j.contains("surgery") && !j["surgery"].is_null()) {
    const auto& s = j["surgery"];
    only_keys(s, "surgery", {"s", "p", "q"});
    c.surgery_s = get_opt(s, "surgery", "s", std::nullopt);
    if (c.surgery_s && !(*c.surgery_s > 0)) bad("surgery.s", "must be positive");
    c.family.p = get_num(s, "surgery", "p", c.family.p);
    c.family.q = get_num(s, "surgery", "q", c.family.q);
  }
  if (j.contains("view")) c.view = view_spec_from_json(j["view"], "view");
  if (j.contains("render")) apply_render_json(c.render, j["render"], "render");
  if (j.contains("experiment")) {
    if (!j["experiment"].is_object()) bad("experiment", "expected an object");
    c.experiment = j["experiment"];
  }
  c.output = get_str(j, "", "output", c.output);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) bad("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  return c;
}

json config_to_json(const RunConfig& c) {
  json j{{"op", c.op},
         {"manifold", c.manifold},
         {"cocycle", c.cocycle},
         {"view", view_spec_to_json(c.view)},
         {"render", render_to_json(c.render)},
         {"experiment", c.experiment},
         {"output", c.output},
         {"seed", c.seed}};
  j["surgery"] = c.surgery_s ? json{{"s", *c.surgery_s}, {"p", c.family.p}, {"q", c.family.q}} : json(nullptr);
  return j;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw InputError(path + ": malformed JSON (" + e.what() + ")");
  }
  try {
    return config_from_json(j);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

std::shared_ptr<const Scene> load_scene(const std::string& manifold, const std::string& cocycle,
                                        std::optional<double> surgery_s, const SlopeFamily& family) {
  // Scenes are immutable; cache them so sessions and repeated ops share one.
  static std::mutex mu;
  static std::map<std::string, std::weak_ptr<const Scene>> cache;
  std::ostringstream key;
  key.precision(17);
  key << manifold << '|' << cocycle << '|' << (surgery_s ? *surgery_s : -1) << '|' << family.p << '|' << family.q;
  {
    std::lock_guard lk(mu);
    if (auto it = cache.find(key.str()); it != cache.end())
      if (auto sp = it->second.lock()) return sp;
  }
  auto scene = std::make_shared<Scene>();
  scene->tri = load_manifold(manifold);
  if (!cocycle.empty()) select_cocycle(scene->tri, cocycle);
  if (scene->tri.is_material()) {
    if (surgery_s) throw InputError(manifold + ": surgery needs ideal data with cusp equations");
    scene->geom = build_geometry_material(scene->tri);
  } else if (surgery_s) {
    scene->geom = path_geometry(scene->tri, solve_along_path(scene->tri, family, *surgery_s));
  } else {
    scene->geom = build_geometry_ideal(scene->tri, solve_shapes(scene->tri));
  }
  std::shared_ptr<const Scene> out = scene;
  std::lock_guard lk(mu);
  cache[key.str()] = out;
  return out;
}

View make_view(const GeomTriangulation& geom, const ViewSpec& s) {
  View v = default_view(geom, s.kind, s.tet, s.fov);
  if (s.frame) {
    v.origin = (*s.frame)[0];
    v.forward = (*s.frame)[1];
    v.right = (*s.frame)[2];
    v.up = (*s.frame)[3];
  }
  v.base_weight = s.base_weight;
  check_view(geom, v);
  return v;
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char b[17];
  std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(h));
  return b;
}

}  // namespace hypertrace
