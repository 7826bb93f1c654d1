#include <httplib.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <random>
#include <shared_mutex>

#include "hypertrace/facade.hpp"

namespace hypertrace {

using nlohmann::json;

namespace {

struct Session {
  std::string id;
  std::mutex mu;  // serializes motion and config changes
  std::string manifold, cocycle;
  std::optional<double> surgery_s;
  std::shared_ptr<const Scene> scene;
  View view;
  RenderConfig cfg;
  json last_frame = nullptr;
};

struct HttpError {
  int status;
  std::string message;
};

void send_json(httplib::Response& res, int status, const json& j) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw HttpError{422, "body must be a JSON object"};
    return j;
  } catch (const json::parse_error& e) {
    throw HttpError{422, std::string("malformed JSON: ") + e.what()};
  }
}

// Patch keys map onto RenderConfig; surgery_s and fov are handled by the caller.
json render_patch(const json& patch) {
  json r = json::object();
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const auto& k = it.key();
    if (k == "R" || k == "S" || k == "k" || k == "edge_eps" || k == "precision" || k == "jitter" || k == "colour")
      r[k] = it.value();
    else if (k == "elevation")
      r["elevation_wmax"] = it.value();
    else if (k != "surgery_s" && k != "fov")
      throw HttpError{422, "config: unknown key '" + k + "'"};
  }
  return r;
}

json state_json(const Session& s) {
  auto cfg = render_to_json(s.cfg);
  cfg.erase("width");
  cfg.erase("height");
  cfg.erase("tile");
  cfg["elevation"] = cfg["elevation_wmax"];
  cfg.erase("elevation_wmax");
  cfg["surgery_s"] = s.surgery_s ? json(*s.surgery_s) : json(nullptr);
  return {{"id", s.id},         {"manifold", s.manifold},         {"cocycle", s.cocycle},
          {"camera", view_to_json(s.view)}, {"config", cfg}, {"last_frame", s.last_frame}};
}

int query_int(const httplib::Request& req, const char* key, int def) {
  if (!req.has_param(key)) return def;
  const auto v = req.get_param_value(key);
  try {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw HttpError{422, std::string(key) + ": not an integer"};
  }
}

}  // namespace

struct Service::Impl {
  ServiceOptions opts;
  httplib::Server server;
  std::shared_mutex sessions_mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::uint64_t id_seed;
  std::atomic<std::uint64_t> next_id{1};

  explicit Impl(ServiceOptions o) : opts(std::move(o)), id_seed(std::random_device{}()) { routes(); }

  std::shared_ptr<Session> find(const std::string& id) {
    std::shared_lock lk(sessions_mu);
    const auto it = sessions.find(id);
    if (it == sessions.end()) throw HttpError{404, "unknown session '" + id + "'"};
    return it->second;
  }

  template <class F>
  httplib::Server::Handler wrap(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        send_json(res, e.status, {{"error", e.message}});
      } catch (const StepTooLarge& e) {
        send_json(res, 409, {{"error", e.what()}});
      } catch (const InputError& e) {
        send_json(res, 422, {{"error", e.what()}});
      } catch (const NumericalError& e) {
        send_json(res, 422, {{"error", e.what()}});
      } catch (const json::exception& e) {
        send_json(res, 422, {{"error", e.what()}});
      }
    };
  }

  void apply_config(Session& s, const json& patch) {
    RenderConfig cfg = s.cfg;
    apply_render_json(cfg, render_patch(patch), "config");
    View view = s.view;
    if (patch.contains("fov")) {
      if (!patch["fov"].is_number()) throw HttpError{422, "config.fov: expected a number"};
      view.fov = patch["fov"].get<double>();
    }
    auto scene = s.scene;
    auto surgery_s = s.surgery_s;
    if (patch.contains("surgery_s")) {
      const auto& v = patch["surgery_s"];
      if (!v.is_null() && !v.is_number()) throw HttpError{422, "config.surgery_s: expected a number or null"};
      surgery_s = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      if (surgery_s && !(*surgery_s > 0)) throw HttpError{422, "config.surgery_s: must be positive"};
      if (surgery_s != s.surgery_s) {
        scene = load_scene(s.manifold, s.cocycle, surgery_s);
        view = place_view(scene->geom, tet_local(s.scene->geom, view));
      }
    }
    check_view(scene->geom, view);
    s.cfg = cfg;
    s.view = view;
    s.scene = scene;
    s.surgery_s = surgery_s;
  }

  void routes() {
    server.Get("/manifolds", wrap([](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      std::vector<std::filesystem::path> files;
      for (const auto& e : std::filesystem::directory_iterator(data_directory()))
        if (e.path().extension() == ".json") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& p : files) {
        const auto tri = load_manifold(p.stem().string());
        json cocycles = json::array();
        for (const auto& c : tri.cocycles) cocycles.push_back(c.name);
        list.push_back({{"name", p.stem().string()},
                        {"tets", tri.n_tets()},
                        {"cusps", tri.cusps},
                        {"kind", tri.is_material() ? "material" : "ideal"},
                        {"cocycles", cocycles},
                        {"surgery", !tri.is_material() && !tri.equations.cusp_rows_meridian.empty()}});
      }
      send_json(res, 200, list);
    }));

    server.Post("/session", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      for (auto it = body.begin(); it != body.end(); ++it)
        if (it.key() != "manifold" && it.key() != "cocycle" && it.key() != "view" && it.key() != "config")
          throw HttpError{422, "session: unknown key '" + it.key() + "'"};
      auto s = std::make_shared<Session>();
      s->manifold = body.value("manifold", "m004");
      s->cocycle = body.value("cocycle", "");
      s->scene = load_scene(s->manifold, s->cocycle);
      ViewSpec spec;
      if (body.contains("view")) spec = view_spec_from_json(body["view"], "view");
      s->view = make_view(s->scene->geom, spec);
      if (body.contains("config")) {
        if (!body["config"].is_object()) throw HttpError{422, "config: expected an object"};
        apply_config(*s, body["config"]);
      }
      const std::uint64_t n = next_id++;
      char b[17];
      std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(splitmix64(id_seed + n)));
      s->id = b;
      {
        std::unique_lock lk(sessions_mu);
        sessions[s->id] = s;
      }
      send_json(res, 201, {{"id", s->id}, {"state", state_json(*s)}});
    }));

    server.Post(R"(/session/([0-9a-f]+)/move)", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = find(req.matches[1]);
      const auto body = parse_body(req);
      if (!body.contains("action") || !body["action"].is_string()) throw HttpError{422, "move: action required"};
      const double dt = body.value("dt", 0.1);
      if (!std::isfinite(dt)) throw HttpError{422, "move: dt must be finite"};
      const auto motion = parse_motion(body["action"].get<std::string>());
      std::lock_guard lk(s->mu);
      s->view = step_camera(s->scene->geom, s->view, motion_matrix(s->view, motion, dt));
      send_json(res, 200, state_json(*s));
    }));

    server.Post(R"(/session/([0-9a-f]+)/config)", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = find(req.matches[1]);
      const auto patch = parse_body(req);
      std::lock_guard lk(s->mu);
      apply_config(*s, patch);
      send_json(res, 200, state_json(*s));
    }));

    auto frame_like = [this](bool png) {
      return wrap([this, png](const httplib::Request& req, httplib::Response& res) {
        const auto s = find(req.matches[1]);
        const int w = query_int(req, "w", 256), h = query_int(req, "h", 256);
        if (w < 1 || h < 1 || w > 16384 || h > 16384 || static_cast<long long>(w) * h > opts.max_pixels)
          throw HttpError{422, "frame size out of range"};
        std::shared_ptr<const Scene> scene;
        View view;
        RenderConfig cfg;
        {
          std::lock_guard lk(s->mu);
          scene = s->scene;
          view = s->view;
          cfg = s->cfg;
        }
        cfg.width = w;
        cfg.height = h;
        const auto t0 = std::chrono::steady_clock::now();
        const auto field = render(scene->geom, view, cfg);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        const std::string bytes = png ? encode_png(colour_map(field, cfg)) : encode_wfld(field);
        const auto etag = "\"" + content_hash(bytes) + "\"";

        std::vector<double> v;
        for (const auto& smp : field.samples)
          if (smp.tag != Termination::Failed) v.push_back(smp.weight);
        const auto st = summarize_values(std::move(v));
        json meta{{"w", w},
                  {"h", h},
                  {"etag", etag},
                  {"render_ms", ms},
                  {"step_cap_fraction", step_cap_fraction(field)},
                  {"mean", st.mean},
                  {"sample_variance", st.std * st.std}};
        {
          std::lock_guard lk(s->mu);
          s->last_frame = meta;
        }
        res.set_header("ETag", etag);
        res.set_header("X-Render-Ms", std::to_string(ms));
        res.set_header("X-Step-Cap-Fraction", std::to_string(step_cap_fraction(field)));
        res.set_header("X-Sample-Variance", std::to_string(st.std * st.std));
        if (req.get_header_value("If-None-Match") == etag) {
          res.status = 304;
          return;
        }
        res.status = 200;
        res.set_content(bytes, png ? "image/png" : "application/octet-stream");
      });
    };
    server.Get(R"(/session/([0-9a-f]+)/frame)", frame_like(true));
    server.Get(R"(/session/([0-9a-f]+)/field)", frame_like(false));

    server.Get(R"(/session/([0-9a-f]+)/state)", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto s = find(req.matches[1]);
      std::lock_guard lk(s->mu);
      send_json(res, 200, state_json(*s));
    }));

    server.Delete(R"(/session/([0-9a-f]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
      std::unique_lock lk(sessions_mu);
      if (!sessions.erase(req.matches[1])) throw HttpError{404, "unknown session '" + req.matches[1].str() + "'"};
      res.status = 204;
    }));

    if (!opts.static_dir.empty()) server.set_mount_point("/", opts.static_dir);
  }
};

Service::Service(ServiceOptions opts) : impl_(std::make_unique<Impl>(std::move(opts))) {}
Service::~Service() { stop(); }

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int Service::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool Service::listen_after_bind() { return impl_->server.listen_after_bind(); }
void Service::stop() {
  if (impl_) impl_->server.stop();
}
void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace hypertrace
