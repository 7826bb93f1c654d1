#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "hypertrace/facade.hpp"

namespace hypertrace {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError(p.string() + ": cannot write");
  out << s;
}

std::string num(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.17g", x);
  return b;
}

template <class T>
T param(const RunConfig& c, const char* key, T def) {
  if (!c.experiment.contains(key)) return def;
  try {
    return c.experiment[key].get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("config: experiment.") + key + ": wrong type");
  }
}

json termination_counts(const WeightField& f) {
  json j;
  for (auto t : {Termination::RayBudget, Termination::Radius, Termination::EdgeHit, Termination::ElevationHit,
                 Termination::Failed})
    j[to_string(t)] = f.count(t);
  return j;
}

json shapes_json(const ShapeAssignment& s) {
  json a = json::array();
  for (const auto& z : s.shapes) a.push_back({z.real(), z.imag()});
  return a;
}

RegionSpec region_from(const RunConfig& c, const View& v) {
  RegionSpec r;
  r.view = v;
  const auto centre = param<std::vector<double>>(c, "centre", {0, 0});
  if (centre.size() != 2) throw InputError("config: experiment.centre: expected [x, y]");
  r.centre = {centre[0], centre[1]};
  r.side = param<double>(c, "side", 0.1);
  r.m = param<int>(c, "grid", 100);
  return r;
}

std::string histogram_csv(const Histogram& h) {
  std::string out = "low,high,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    out += num(h.origin + i * h.width) + "," + num(h.origin + (i + 1) * h.width) + "," +
           std::to_string(h.counts[i]) + "\n";
  return out;
}

json stats_with_normality(const SampleStats& s) {
  std::optional<NormalityResult> nt;
  if (s.n >= 10000) nt = normality_test(s);
  return json::parse(stats_json(s, nt));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

json run_op(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path out(cfg.output);
  fs::create_directories(out);
  write_text(out / "config.json", config_to_json(cfg).dump(2) + "\n");
  json summary{{"op", cfg.op}, {"output", cfg.output}};
  const auto& op = cfg.op;

  if (op == "validate") {
    auto tri = load_manifold(cfg.manifold);
    if (!cfg.cocycle.empty()) select_cocycle(tri, cfg.cocycle);
    check_gluing(tri);
    check_cocycle(tri);
    const auto geom = tri.is_material() ? build_geometry_material(tri) : build_geometry_ideal(tri, solve_shapes(tri));
    const auto rep = validate(geom);
    json checks = json::array();
    for (const auto& c : rep.checks)
      checks.push_back({{"name", c.name}, {"worst", c.worst}, {"tolerance", c.tolerance}, {"pass", c.pass},
                        {"location", c.location}});
    summary["manifold"] = tri.name;
    summary["tets"] = tri.n_tets();
    summary["cusps"] = tri.cusps;
    summary["kind"] = tri.is_material() ? "material" : "ideal";
    summary["checks"] = checks;
    summary["ok"] = rep.ok();
    write_text(out / "validation.json", summary.dump(2) + "\n");
    if (!rep.ok()) throw NumericalError(tri.name + ": geometry fails validation");
  } else if (op == "solve") {
    auto tri = load_manifold(cfg.manifold);
    std::vector<std::optional<Filling>> filling;
    if (cfg.experiment.contains("filling")) {
      const auto pq = param<std::vector<double>>(cfg, "filling", {});
      if (pq.size() != 2) throw InputError("config: experiment.filling: expected [p, q]");
      filling.push_back(Filling{pq[0], pq[1]});
    } else if (cfg.surgery_s) {
      filling.push_back(cfg.family.at(*cfg.surgery_s));
    }
    const auto sol = filling.empty() ? solve_shapes(tri) : solve_shapes(tri, filling);
    summary["manifold"] = tri.name;
    summary["filling"] = filling.empty() ? json(nullptr) : json{filling[0]->p, filling[0]->q};
    summary["shapes"] = shapes_json(sol);
    summary["residual"] = sol.residual;
    summary["iterations"] = sol.iterations;
    summary["residual_history"] = sol.residual_history;
    summary["volume"] = volume(sol.shapes);
    write_text(out / "shapes.json", summary.dump(2) + "\n");
  } else if (op == "render") {
    const auto scene = load_scene(cfg.manifold, cfg.cocycle, cfg.surgery_s, cfg.family);
    const auto view = make_view(scene->geom, cfg.view);
    const auto field = render(scene->geom, view, cfg.render);
    write_png((out / "render.png").string(), colour_map(field, cfg.render));
    write_wfld((out / "render.wfld").string(), field);
    summary["terminations"] = termination_counts(field);
    summary["step_cap_fraction"] = step_cap_fraction(field);
    summary["view"] = view_to_json(view);
    summary["files"] = {"render.png", "render.wfld"};
  } else if (op == "ct") {
    const auto scene = load_scene(cfg.manifold, cfg.cocycle, cfg.surgery_s, cfg.family);
    const auto view = fiber_basepoint(scene->geom, make_view(scene->geom, cfg.view));
    const double R_disk = param<double>(cfg, "R_disk", 5.0);
    const auto disk = build_elevation_disk(scene->geom, view, R_disk);
    const auto line = boundary_polyline(disk);
    write_text(out / "ct.svg", polyline_svg(line, view));
    const auto field = render(scene->geom, view, cfg.render);
    write_png((out / "field.png").string(), colour_map(field, cfg.render));
    std::vector<MaskDisk> mask;
    if (cfg.experiment.contains("mask")) {
      const auto& m = cfg.experiment["mask"];
      if (!m.is_array()) throw InputError("config: experiment.mask: expected an array of {col, row, radius}");
      for (const auto& d : m) {
        if (!d.is_object() || !d.contains("col") || !d.contains("row") || !d.contains("radius"))
          throw InputError("config: experiment.mask: expected {col, row, radius}");
        mask.push_back({d["col"].get<double>(), d["row"].get<double>(), d["radius"].get<double>()});
      }
    }
    if (cfg.experiment.contains("auto_mask")) {
      const auto& a = cfg.experiment["auto_mask"];
      const auto extra = cusp_mask(disk, view, cfg.render.width, cfg.render.height, a.value("radius", 4.0),
                                   a.value("min_degree", 20));
      mask.insert(mask.end(), extra.begin(), extra.end());
    }
    const auto rep = match_level_set(line, field, view, mask);
    summary["triangles"] = disk.triangles.size();
    summary["polyline_points"] = line.points.size();
    summary["R_disk"] = R_disk;
    summary["match"] = json::parse(to_json(rep));
    json mj = json::array();
    for (const auto& d : mask) mj.push_back({{"col", d.col}, {"row", d.row}, {"radius", d.radius}});
    summary["mask"] = mj;
    write_text(out / "match.json", summary.dump(2) + "\n");
  } else if (op.rfind("stats ", 0) == 0) {
    const auto scene = load_scene(cfg.manifold, cfg.cocycle, cfg.surgery_s, cfg.family);
    const auto view = make_view(scene->geom, cfg.view);
    const auto sub = op.substr(6);
    const double bucket = param<double>(cfg, "bucket", 1.0);
    if (sub == "sample" || sub == "hist") {
      RegionSpec region = region_from(cfg, view);
      if (sub == "hist") {
        region.centre = {0, 0};
        region.side = view.fov;
        region.m = param<int>(cfg, "grid", 1000);
      }
      const auto [v, pts] = region_rays(region);
      const auto s = summarize(trace_points(scene->geom, v, cfg.render, pts), bucket);
      auto sj = stats_with_normality(s);
      sj.erase("histogram");
      summary["stats"] = sj;
      write_text(out / "stats.json", summary.dump(2) + "\n");
      write_text(out / "hist.csv", histogram_csv(s.histogram));
    } else if (sub == "curve") {
      const auto Rs = param<std::vector<double>>(cfg, "R_list", {});
      if (Rs.empty()) throw InputError("config: experiment.R_list: required");
      const auto rows = mean_std_curve(scene->geom, region_from(cfg, view), Rs, cfg.render);
      write_text(out / "curve.csv", curve_csv(rows));
      summary["rows"] = rows.size();
    } else if (sub == "sigma") {
      const double T = param<double>(cfg, "T", 8.0);
      const auto n = param<std::size_t>(cfg, "n", 100000);
      const int resamples = param<int>(cfg, "resamples", 200);
      const auto e = estimate_sigma(scene->geom, view, T, n, cfg.seed, cfg.render, resamples);
      auto sj = stats_with_normality(e.stats);
      sj.erase("histogram");
      summary["T"] = T;
      summary["sigma"] = e.sigma;
      summary["ci95"] = {e.lo, e.hi};
      summary["stats"] = sj;
      write_text(out / "sigma.json", summary.dump(2) + "\n");
      write_text(out / "hist.csv", histogram_csv(e.stats.histogram));
    } else if (sub == "converge") {
      const auto pairs = param<std::vector<std::vector<double>>>(cfg, "R_pairs", {{10, 12}});
      std::vector<std::pair<double, double>> rp;
      for (const auto& p : pairs) {
        if (p.size() != 2) throw InputError("config: experiment.R_pairs: expected [[R1, R2], ...]");
        rp.emplace_back(p[0], p[1]);
      }
      const auto rows = pixel_mean_convergence(scene->geom, region_from(cfg, view), rp, cfg.render);
      std::string csv = "R1,R2,mean1,mean2,diff,std_error,pass\n";
      json rj = json::array();
      for (const auto& r : rows) {
        csv += num(r.R1) + "," + num(r.R2) + "," + num(r.mean1) + "," + num(r.mean2) + "," + num(r.diff) + "," +
               num(r.std_error) + "," + (r.pass ? "1" : "0") + "\n";
        rj.push_back({{"R1", r.R1}, {"R2", r.R2}, {"diff", r.diff}, {"std_error", r.std_error}, {"pass", r.pass}});
      }
      write_text(out / "converge.csv", csv);
      summary["rows"] = rj;
    } else {
      throw InputError("unknown stats op '" + sub + "' (expected sample, curve, sigma, hist or converge)");
    }
  } else if (op == "surgery") {
    auto tri = load_manifold(cfg.manifold);
    if (!cfg.cocycle.empty()) select_cocycle(tri, cfg.cocycle);
    const auto svals = param<std::vector<double>>(cfg, "s_values", kDefaultPathSamples);
    const auto path = trace_path(tri, cfg.family, svals);
    std::vector<PathFrame> frames;
    if (param<bool>(cfg, "render", false) && !path.samples.empty()) {
      const auto g = path_geometry(tri, path.samples.front().shapes);
      frames = render_path(tri, path, make_view(g, cfg.view), cfg.render, (out / "frames").string());
      for (auto& f : frames) f.field.samples.clear();
    }
    write_text(out / "manifest.json", path_manifest(path, frames));
    summary["solved"] = path.samples.size();
    summary["requested"] = svals.size();
    summary["diagnostic"] = path.diagnostic;
    if (!path.complete_path()) throw NumericalError("surgery path: " + path.diagnostic);
  } else {
    throw InputError("unknown op '" + op + "'");
  }
  summary["seconds"] = seconds_since(t0);
  return summary;
}

namespace {

struct Flags {
  std::string config, manifold, file, cocycle, view, res, precision, out, centre, R_list, R_pairs, s_values,
      family, filling, host = "127.0.0.1", static_dir;
  double fov = 0, R = 0, edge_eps = 0, elevation = 0, surgery_s = 0, side = 0, T = 0, R_disk = 0, bucket = 0,
         mask_radius = 0;
  int tet = 0, S = 0, k = 0, grid = 0, resamples = 0, mask_degree = 0, port = 8080;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  bool jitter = false, render_frames = false;
};

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> v;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto next = s.find(',', pos);
    const auto item = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError(std::string("--") + what + ": '" + item + "' is not a number");
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return v;
}

void add_common(CLI::App* c, Flags& f) {
  c->add_option("--config", f.config, "run config JSON (flags override it)");
  c->add_option("--manifold", f.manifold, "bundled name or path to a triangulation file");
  c->add_option("--cocycle", f.cocycle, "cocycle class name");
  c->add_option("--out", f.out, "output directory");
}

void add_view(CLI::App* c, Flags& f) {
  c->add_option("--view", f.view, "material, ideal or hyperideal");
  c->add_option("--tet", f.tet, "anchor tetrahedron");
  c->add_option("--fov", f.fov, "field of view");
  c->add_option("--R", f.R, "visual radius");
  c->add_option("--S", f.S, "step cap");
  c->add_option("--k", f.k, "sub-samples per pixel side");
  c->add_option("--res", f.res, "WxH");
  c->add_option("--precision", f.precision, "f32, f64 or f80");
  c->add_option("--edge-eps", f.edge_eps, "edge highlighting distance");
  c->add_option("--elevation", f.elevation, "elevation w_max");
  c->add_flag("--jitter", f.jitter, "jittered sub-samples");
  c->add_option("--seed", f.seed, "seed");
  c->add_option("--surgery-s", f.surgery_s, "incomplete structure at s on the bending path");
}

void add_region(CLI::App* c, Flags& f) {
  c->add_option("--centre", f.centre, "region centre x,y in screen coordinates");
  c->add_option("--side", f.side, "region side in fov units");
  c->add_option("--grid", f.grid, "samples per region side");
  c->add_option("--bucket", f.bucket, "histogram bucket width");
}

bool given(const CLI::App* c, const char* name) {
  const auto* o = c->get_option_no_throw(name);
  return o && o->count() > 0;
}

RunConfig resolve(const CLI::App* c, const Flags& f, const std::string& op) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config_file(f.config);
  cfg.op = op;
  auto& e = cfg.experiment;
  if (given(c, "--manifold")) cfg.manifold = f.manifold;
  if (given(c, "--file")) cfg.manifold = f.file;
  if (given(c, "--cocycle")) cfg.cocycle = f.cocycle;
  if (given(c, "--out")) cfg.output = f.out;
  if (given(c, "--view")) cfg.view.kind = parse_view_kind(f.view);
  if (given(c, "--tet")) cfg.view.tet = f.tet;
  if (given(c, "--fov")) cfg.view.fov = f.fov;
  auto& r = cfg.render;
  if (given(c, "--R")) r.R = f.R;
  if (given(c, "--S")) r.S = f.S;
  if (given(c, "--k")) r.k = f.k;
  if (given(c, "--res")) {
    int w = 0, h = 0;
    char x = 0, extra = 0;
    if (std::sscanf(f.res.c_str(), "%d%c%d%c", &w, &x, &h, &extra) != 3 || x != 'x')
      throw InputError("--res: expected WxH, got '" + f.res + "'");
    r.width = w;
    r.height = h;
  }
  if (given(c, "--precision")) r.precision = parse_precision(f.precision);
  if (given(c, "--edge-eps")) r.edge_eps = f.edge_eps;
  if (given(c, "--elevation")) r.elevation_wmax = f.elevation;
  if (given(c, "--jitter")) r.jitter = f.jitter;
  if (given(c, "--seed")) r.seed = cfg.seed = f.seed;
  if (given(c, "--surgery-s")) cfg.surgery_s = f.surgery_s;
  if (given(c, "--family")) {
    const auto pq = parse_list(f.family, "family");
    if (pq.size() != 2) throw InputError("--family: expected p,q");
    cfg.family = {pq[0], pq[1]};
  }
  if (given(c, "--filling")) {
    const auto pq = parse_list(f.filling, "filling");
    if (pq.size() != 2) throw InputError("--filling: expected p,q");
    e["filling"] = pq;
  }
  if (given(c, "--centre")) {
    const auto xy = parse_list(f.centre, "centre");
    if (xy.size() != 2) throw InputError("--centre: expected x,y");
    e["centre"] = xy;
  }
  if (given(c, "--side")) e["side"] = f.side;
  if (given(c, "--grid")) e["grid"] = f.grid;
  if (given(c, "--bucket")) e["bucket"] = f.bucket;
  if (given(c, "--R-list")) e["R_list"] = parse_list(f.R_list, "R-list");
  if (given(c, "--R-pairs")) {
    const auto v = parse_list(f.R_pairs, "R-pairs");
    if (v.size() % 2) throw InputError("--R-pairs: expected R1,R2[,R1,R2...]");
    json pairs = json::array();
    for (std::size_t i = 0; i < v.size(); i += 2) pairs.push_back({v[i], v[i + 1]});
    e["R_pairs"] = pairs;
  }
  if (given(c, "--T")) e["T"] = f.T;
  if (given(c, "--n")) e["n"] = f.n;
  if (given(c, "--resamples")) e["resamples"] = f.resamples;
  if (given(c, "--R-disk")) e["R_disk"] = f.R_disk;
  if (given(c, "--mask-radius") || given(c, "--mask-degree"))
    e["auto_mask"] = {{"radius", given(c, "--mask-radius") ? f.mask_radius : 4.0},
                      {"min_degree", given(c, "--mask-degree") ? f.mask_degree : 20}};
  if (given(c, "--s-values")) e["s_values"] = parse_list(f.s_values, "s-values");
  if (given(c, "--render")) e["render"] = f.render_frames;
  // Round trip through JSON so flag values get the same validation as files.
  return config_from_json(config_to_json(cfg));
}

}  // namespace

int cli(int argc, char** argv) {
  CLI::App app{"hypertrace: cocycle weight fractals of hyperbolic 3-manifolds"};
  app.require_subcommand(1);
  Flags f;
  std::vector<std::pair<CLI::App*, std::string>> ops;

  auto* validate_cmd = app.add_subcommand("validate", "load and check a triangulation");
  add_common(validate_cmd, f);
  validate_cmd->add_option("--file", f.file, "triangulation file");
  ops.emplace_back(validate_cmd, "validate");

  auto* solve_cmd = app.add_subcommand("solve", "solve the gluing equations");
  add_common(solve_cmd, f);
  solve_cmd->add_option("--filling", f.filling, "Dehn filling p,q on the first cusp");
  solve_cmd->add_option("--surgery-s", f.surgery_s, "filling (4s, -s)");
  ops.emplace_back(solve_cmd, "solve");

  auto* render_cmd = app.add_subcommand("render", "render a view to PNG and a WFLD dump");
  add_common(render_cmd, f);
  add_view(render_cmd, f);
  ops.emplace_back(render_cmd, "render");

  auto* ct_cmd = app.add_subcommand("ct", "elevation disk boundary against the rendered sign region");
  add_common(ct_cmd, f);
  add_view(ct_cmd, f);
  ct_cmd->add_option("--R-disk", f.R_disk, "elevation disk radius");
  ct_cmd->add_option("--mask-radius", f.mask_radius, "cusp mask disk radius in pixels");
  ct_cmd->add_option("--mask-degree", f.mask_degree, "mask ideal vertices met by at least this many triangles");
  ops.emplace_back(ct_cmd, "ct");

  auto* stats_cmd = app.add_subcommand("stats", "statistics experiments");
  stats_cmd->require_subcommand(1);
  for (const char* sub : {"sample", "curve", "sigma", "hist", "converge"}) {
    auto* c = stats_cmd->add_subcommand(sub);
    add_common(c, f);
    add_view(c, f);
    add_region(c, f);
    if (std::string(sub) == "curve") c->add_option("--R-list", f.R_list, "ascending radii a,b,c");
    if (std::string(sub) == "converge") c->add_option("--R-pairs", f.R_pairs, "R1,R2[,R1,R2...]");
    if (std::string(sub) == "sigma") {
      c->add_option("--T", f.T, "flow time");
      c->add_option("--n", f.n, "directions");
      c->add_option("--resamples", f.resamples, "bootstrap resamples");
    }
    ops.emplace_back(c, std::string("stats ") + sub);
  }

  auto* surgery_cmd = app.add_subcommand("surgery", "shape continuation along (p s, q s)");
  add_common(surgery_cmd, f);
  add_view(surgery_cmd, f);
  surgery_cmd->add_option("--s-values", f.s_values, "decreasing s values");
  surgery_cmd->add_option("--family", f.family, "p,q per unit s");
  surgery_cmd->add_flag("--render", f.render_frames, "render a frame per sample");
  ops.emplace_back(surgery_cmd, "surgery");

  auto* serve_cmd = app.add_subcommand("serve", "HTTP render service");
  serve_cmd->add_option("--host", f.host, "bind address");
  serve_cmd->add_option("--port", f.port, "port");
  serve_cmd->add_option("--static", f.static_dir, "viewer bundle directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (serve_cmd->parsed()) {
      Service svc({f.static_dir});
      std::cerr << "hypertrace: serving on " << f.host << ":" << f.port << "\n";
      if (!svc.listen(f.host, f.port)) throw InputError("cannot bind " + f.host + ":" + std::to_string(f.port));
      return 0;
    }
    for (const auto& [cmd, op] : ops) {
      if (!cmd->parsed()) continue;
      const auto summary = run_op(resolve(cmd, f, op));
      std::cout << summary.dump(2) << "\n";
      return 0;
    }
  } catch (const InputError& e) {
    std::cerr << "hypertrace: input error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "hypertrace: numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "hypertrace: input error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace hypertrace
