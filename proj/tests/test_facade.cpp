#include <doctest.h>
#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "hypertrace/facade.hpp"

using namespace hypertrace;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "hypertrace");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ht_facade_" + name);
  fs::remove_all(p);
  return p;
}

// A service on a free local port for the lifetime of the fixture.
struct Server {
  Service svc;
  std::thread th;
  int port = 0;
  Server() {
    port = svc.bind_any_port("127.0.0.1");
    REQUIRE(port > 0);
    th = std::thread([this] { svc.listen_after_bind(); });
    svc.wait_until_ready();
  }
  ~Server() {
    svc.stop();
    th.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(120, 0);
    return c;
  }
};

json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

std::string create(httplib::Client& c, const json& body) {
  auto r = c.Post("/session", body.dump(), "application/json");
  REQUIRE(r);
  REQUIRE(r->status == 201);
  return json::parse(r->body)["id"].get<std::string>();
}

Vec4d vec(const json& j) { return Vec4d{{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()}}; }

double camera_diff(const json& a, const json& b) {
  double m = 0;
  for (const char* k : {"origin", "forward", "right", "up"}) m = std::max(m, max_abs_diff(vec(a[k]), vec(b[k])));
  return m;
}

}  // namespace

TEST_CASE("run config JSON round trip and error locations") {
  RunConfig c;
  c.op = "stats sigma";
  c.manifold = "s789";
  c.cocycle = "cusp_vanishing";
  c.view.kind = ViewKind::Ideal;
  c.view.fov = 3;
  c.render.R = 11.5;
  c.render.edge_eps = 0.01;
  c.render.colour.threshold = 2;
  c.surgery_s = 1.2;
  c.experiment = {{"T", 16}, {"n", 100000}};
  c.seed = 77;
  const auto j = config_to_json(c);
  CHECK(config_to_json(config_from_json(j)) == j);
  CHECK(config_from_json(json::parse(j.dump())).render.R == 11.5);

  auto err = [](const json& bad) {
    try {
      config_from_json(bad);
    } catch (const InputError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(err({{"renderr", json::object()}}).find("renderr") != std::string::npos);
  CHECK(err({{"render", {{"R", "big"}}}}).find("render.R") != std::string::npos);
  CHECK(err({{"render", {{"colour", {{"gradient", "nope"}}}}}}).find("render.colour.gradient") != std::string::npos);
  CHECK(err({{"view", {{"kind", "sideways"}}}}).find("view.kind") != std::string::npos);
  CHECK(err({{"view", {{"origin", {1, 0, 0, 0}}}}}).find("together") != std::string::npos);
  CHECK(err({{"render", {{"k", 0}}}}).find("k must be") != std::string::npos);
  CHECK(err({{"seed", -1}}).find("seed") != std::string::npos);
}

TEST_CASE("CLI exit codes and provenance") {
  const auto dir = scratch("cli");
  CHECK(run({"render", "--manifold", "m004", "--res", "40x30", "--R", "3", "--out", (dir / "r").string()}) == 0);
  CHECK(fs::exists(dir / "r" / "render.png"));
  CHECK(fs::exists(dir / "r" / "render.wfld"));
  REQUIRE(fs::exists(dir / "r" / "config.json"));
  const auto cfg = json::parse(slurp(dir / "r" / "config.json"));
  CHECK(cfg["op"] == "render");
  CHECK(cfg["render"]["width"] == 40);
  CHECK(cfg["render"]["R"] == 3);

  // Re-running from the recorded config reproduces the dump.
  CHECK(run({"render", "--config", (dir / "r" / "config.json").string(), "--out", (dir / "r2").string()}) == 0);
  CHECK(slurp(dir / "r" / "render.wfld") == slurp(dir / "r2" / "render.wfld"));

  // Face glued to itself: input error.
  auto doc = json::parse(slurp(fs::path(data_directory()) / "m004.json"));
  doc["tets"][0]["gluings"][1] = {{"tet", 0}, {"perm", {0, 1, 2, 3}}};
  std::ofstream(dir / "bad.json") << doc.dump();
  CHECK(run({"validate", "--file", (dir / "bad.json").string(), "--out", (dir / "v").string()}) == 1);
  CHECK(run({"validate", "--manifold", "m122_4_-1", "--out", (dir / "v2").string()}) == 0);
  CHECK(json::parse(slurp(dir / "v2" / "validation.json"))["ok"] == true);

  CHECK(run({"render", "--manifold", "nope", "--out", (dir / "x").string()}) == 1);
  CHECK(run({"render", "--manifold", "m004", "--R", "-2", "--out", (dir / "x").string()}) == 1);
  CHECK(run({"render", "--manifold", "m004", "--res", "10by10", "--out", (dir / "x").string()}) == 1);
  CHECK(run({"render", "--no-such-flag"}) == 1);
  CHECK(run({}) == 1);

  // A path that breaks is a numerical failure, after writing the solved prefix.
  CHECK(run({"surgery", "--manifold", "m122", "--s-values", "10,0.01", "--out", (dir / "s").string()}) == 2);
  CHECK(json::parse(slurp(dir / "s" / "manifest.json")).size() == 1);

  CHECK(run({"solve", "--manifold", "m122", "--filling", "4,-1", "--out", (dir / "solve").string()}) == 0);
  const auto sol = json::parse(slurp(dir / "solve" / "shapes.json"));
  CHECK(sol["residual"].get<double>() < 1e-12);
  fs::remove_all(dir);
}

TEST_CASE("CLI stats and ct outputs") {
  const auto dir = scratch("stats");
  CHECK(run({"stats", "hist", "--manifold", "m122_4_-1", "--fov", "20", "--R", "2", "--grid", "120", "--out",
             (dir / "h").string()}) == 0);
  const auto csv = slurp(dir / "h" / "hist.csv");
  CHECK(csv.rfind("low,high,count\n", 0) == 0);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::uint64_t total = 0;
  while (std::getline(in, line)) total += std::stoull(line.substr(line.rfind(',') + 1));
  CHECK(total == 120 * 120);
  const auto st = json::parse(slurp(dir / "h" / "stats.json"));
  CHECK(st["stats"]["n"] == 14400);
  CHECK(st["stats"].contains("normality"));

  CHECK(run({"stats", "curve", "--manifold", "m004", "--R-list", "1,2,3", "--grid", "10", "--out",
             (dir / "c").string()}) == 0);
  CHECK(slurp(dir / "c" / "curve.csv").rfind("R,mean,std,n,failed,capped\n1,", 0) == 0);
  CHECK(run({"stats", "curve", "--manifold", "m004", "--R-list", "3,1", "--out", (dir / "c2").string()}) == 1);

  CHECK(run({"stats", "sigma", "--manifold", "m004", "--T", "4", "--n", "10000", "--resamples", "20", "--out",
             (dir / "sg").string()}) == 0);
  const auto sg = json::parse(slurp(dir / "sg" / "sigma.json"));
  CHECK(sg["ci95"][0].get<double>() < sg["sigma"].get<double>());
  CHECK(run({"stats", "sigma", "--manifold", "m004", "--T", "4", "--n", "100", "--out", (dir / "sg2").string()}) ==
        1);

  CHECK(run({"stats", "converge", "--manifold", "m004", "--R-pairs", "2,3", "--grid", "20", "--out",
             (dir / "cv").string()}) == 0);
  CHECK(slurp(dir / "cv" / "converge.csv").rfind("R1,R2,mean1,mean2,diff,std_error,pass\n2,3,", 0) == 0);

  CHECK(run({"ct", "--manifold", "m004", "--R", "4", "--res", "64x64", "--R-disk", "3", "--mask-radius", "3",
             "--out", (dir / "ct").string()}) == 0);
  CHECK(slurp(dir / "ct" / "ct.svg").find("<polygon") != std::string::npos);
  const auto m = json::parse(slurp(dir / "ct" / "match.json"));
  CHECK(m["match"]["coverage"].get<double>() > 0);
  CHECK(run({"ct", "--manifold", "m122_4_-1", "--out", (dir / "ct2").string()}) == 1);
  fs::remove_all(dir);
}

TEST_CASE("HYPERTRACE_DATA overrides the bundled data directory") {
  const auto dir = scratch("data");
  fs::create_directories(dir);
  fs::copy_file(fs::path(data_directory()) / "m004.json", dir / "m004.json");
  const std::string saved = data_directory();
  setenv("HYPERTRACE_DATA", dir.c_str(), 1);
  CHECK(data_directory() == dir.string());
  CHECK_NOTHROW(load_manifold("m004"));
  CHECK_THROWS_AS(load_manifold("s789"), InputError);
  unsetenv("HYPERTRACE_DATA");
  CHECK(data_directory() == saved);
  fs::remove_all(dir);
}

TEST_CASE("service: manifolds, sessions, frames") {
  Server srv;
  auto c = srv.client();
  const auto list = body_of(c.Get("/manifolds"));
  REQUIRE(list.size() == 4);
  CHECK(list[0]["name"] == "m004");
  CHECK(list[1]["name"] == "m122");
  CHECK(list[1]["surgery"] == true);

  const auto id = create(c, {{"manifold", "m004"}, {"config", {{"R", 4}}}});
  auto f1 = c.Get("/session/" + id + "/frame?w=64&h=48");
  auto f2 = c.Get("/session/" + id + "/frame?w=64&h=48");
  REQUIRE(f1);
  REQUIRE(f2);
  CHECK(f1->status == 200);
  CHECK(f1->get_header_value("Content-Type") == "image/png");
  CHECK(f1->body == f2->body);
  CHECK(f1->body.substr(1, 3) == "PNG");
  const auto etag = f1->get_header_value("ETag");
  CHECK(etag == "\"" + content_hash(f1->body) + "\"");
  CHECK(f2->get_header_value("ETag") == etag);
  auto f3 = c.Get("/session/" + id + "/frame?w=64&h=48", {{"If-None-Match", etag}});
  REQUIRE(f3);
  CHECK(f3->status == 304);

  const auto st = body_of(c.Get("/session/" + id + "/state"));
  CHECK(st["config"]["R"] == 4);
  CHECK(st["last_frame"]["w"] == 64);
  CHECK(st["last_frame"]["etag"] == etag);
  CHECK(st["last_frame"].contains("sample_variance"));

  auto del = c.Delete("/session/" + id);
  REQUIRE(del);
  CHECK(del->status == 204);
  CHECK(c.Get("/session/" + id + "/state")->status == 404);
  CHECK(c.Delete("/session/" + id)->status == 404);
}

TEST_CASE("service: error statuses") {
  Server srv;
  auto c = srv.client();
  CHECK(c.Get("/session/0123abcd/state")->status == 404);
  CHECK(c.Post("/session/0123abcd/move", R"({"action":"forward"})", "application/json")->status == 404);
  CHECK(c.Post("/session", R"({"manifold":"nope"})", "application/json")->status == 422);
  CHECK(c.Post("/session", R"({"manifold":"m004","colour":1})", "application/json")->status == 422);
  CHECK(c.Post("/session", "{not json", "application/json")->status == 422);

  const auto id = create(c, {{"manifold", "m004"}});
  const auto before = body_of(c.Get("/session/" + id + "/state"));
  for (const char* patch : {R"({"R":-1})", R"({"k":"x"})", R"({"zoom":2})", R"({"colour":{"gradient":"nope"}})",
                            R"({"S":0})", R"([1,2])"}) {
    auto r = c.Post("/session/" + id + "/config", patch, "application/json");
    REQUIRE(r);
    CHECK_MESSAGE(r->status == 422, patch);
  }
  // A rejected patch changes nothing, even when part of it was valid.
  CHECK(c.Post("/session/" + id + "/config", R"({"R":9,"S":0})", "application/json")->status == 422);
  CHECK(body_of(c.Get("/session/" + id + "/state")) == before);

  CHECK(c.Post("/session/" + id + "/move", R"({"action":"warp"})", "application/json")->status == 422);
  CHECK(c.Post("/session/" + id + "/move", R"({"action":"forward","dt":60})", "application/json")->status == 409);
  CHECK(body_of(c.Get("/session/" + id + "/state"))["camera"] == before["camera"]);
  CHECK(c.Get("/session/" + id + "/frame?w=0&h=10")->status == 422);
  CHECK(c.Get("/session/" + id + "/frame?w=abc")->status == 422);
}

TEST_CASE("service: forward then back restores the camera and base weight") {
  Server srv;
  auto c = srv.client();
  const auto id = create(c, {{"manifold", "m004"}});
  const auto s0 = body_of(c.Get("/session/" + id + "/state"));
  const auto frame0 = c.Get("/session/" + id + "/frame?w=48&h=48")->body;
  json s = s0;
  bool crossed = false;
  for (int i = 0; i < 6; ++i) {
    s = body_of(c.Post("/session/" + id + "/move", R"({"action":"forward","dt":0.4})", "application/json"));
    crossed = crossed || s["camera"]["tet"] != s0["camera"]["tet"];
  }
  CHECK(crossed);
  for (int i = 0; i < 6; ++i)
    s = body_of(c.Post("/session/" + id + "/move", R"({"action":"back","dt":0.4})", "application/json"));
  CHECK(s["camera"]["tet"] == s0["camera"]["tet"]);
  CHECK(s["camera"]["base_weight"] == s0["camera"]["base_weight"]);
  CHECK(camera_diff(s["camera"], s0["camera"]) < 1e-9);
  CHECK(c.Get("/session/" + id + "/frame?w=48&h=48")->body == frame0);
}

TEST_CASE("service: R patch with width scaled by e^dR keeps per-pixel weights") {
  Server srv;
  auto c = srv.client();
  const double R0 = 5, W = 2;
  for (double d : {0.5, 1.0}) {
    const json view{{"kind", "ideal"}, {"fov", W}};
    const auto a = create(c, {{"manifold", "m004"}, {"view", view}, {"config", {{"R", R0}}}});
    const auto b = create(c, {{"manifold", "m004"}, {"view", view}, {"config", {{"R", R0}}}});
    // a: the horosphere pushed forward by d, R0, width W e^d.
    // b: the original horosphere with R patched up to R0 + d, width W.
    c.Post("/session/" + a + "/move", json{{"action", "forward"}, {"dt", d}}.dump(), "application/json");
    CHECK(c.Post("/session/" + a + "/config", json{{"fov", W * std::exp(d)}}.dump(), "application/json")->status ==
          200);
    CHECK(c.Post("/session/" + b + "/config", json{{"R", R0 + d}}.dump(), "application/json")->status == 200);
    const auto fa = decode_wfld(c.Get("/session/" + a + "/field?w=128&h=128")->body);
    const auto fb = decode_wfld(c.Get("/session/" + b + "/field?w=128&h=128")->body);
    REQUIRE(fa.samples.size() == fb.samples.size());
    std::size_t same = 0;
    for (std::size_t i = 0; i < fa.samples.size(); ++i) same += fa.samples[i].weight == fb.samples[i].weight;
    CHECK(static_cast<double>(same) / fa.samples.size() >= 0.995);
  }
}

TEST_CASE("service: sessions are isolated under interleaved and concurrent requests") {
  Server srv;
  auto c = srv.client();
  const auto a = create(c, {{"manifold", "m004"}});
  const auto b = create(c, {{"manifold", "s789"}, {"cocycle", "cusp_vanishing"}});
  const auto b0 = body_of(c.Get("/session/" + b + "/state"));
  const auto fb0 = c.Get("/session/" + b + "/frame?w=32&h=32")->body;
  for (int i = 0; i < 5; ++i) {
    c.Post("/session/" + a + "/move", R"({"action":"yaw_left","dt":0.2})", "application/json");
    c.Post("/session/" + a + "/config", json{{"R", 3 + i}}.dump(), "application/json");
    CHECK(body_of(c.Get("/session/" + b + "/state"))["camera"] == b0["camera"]);
  }
  CHECK(body_of(c.Get("/session/" + b + "/state"))["config"] == b0["config"]);

  std::vector<std::thread> ts;
  std::vector<std::string> got(8);
  for (int t = 0; t < 8; ++t)
    ts.emplace_back([&, t] {
      auto cc = srv.client();
      if (t % 2) {
        auto r = cc.Get("/session/" + b + "/frame?w=32&h=32");
        if (r) got[t] = r->body;
      } else {
        cc.Post("/session/" + a + "/move", R"({"action":"pitch_up","dt":0.1})", "application/json");
        auto r = cc.Get("/session/" + a + "/frame?w=32&h=32");
        if (r) got[t] = r->status == 200 ? "ok" : "";
      }
    });
  for (auto& t : ts) t.join();
  for (int t = 0; t < 8; ++t) CHECK(got[t] == (t % 2 ? fb0 : std::string("ok")));
}

TEST_CASE("service: surgery parameter swaps the structure and keeps the camera in its tetrahedron") {
  Server srv;
  auto c = srv.client();
  const auto id = create(c, {{"manifold", "m122"}, {"config", {{"S", 55}}}});
  const auto f0 = c.Get("/session/" + id + "/frame?w=32&h=32")->body;
  auto r = c.Post("/session/" + id + "/config", R"({"surgery_s":1.2})", "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  const auto st = json::parse(r->body);
  CHECK(st["config"]["surgery_s"] == 1.2);
  CHECK(st["camera"]["tet"] == 0);
  CHECK(c.Get("/session/" + id + "/frame?w=32&h=32")->body != f0);
  r = c.Post("/session/" + id + "/config", R"({"surgery_s":null})", "application/json");
  CHECK(c.Get("/session/" + id + "/frame?w=32&h=32")->body == f0);
  CHECK(c.Post("/session/" + id + "/config", R"({"surgery_s":0.01})", "application/json")->status == 422);
}
