#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hypertrace/tricomplex.hpp"

#ifndef HYPERTRACE_DEFAULT_DATA_DIR
#define HYPERTRACE_DEFAULT_DATA_DIR "data"
#endif

namespace hypertrace {

using nlohmann::json;

int edge_slot(int a, int b) {
  if (a > b) std::swap(a, b);
  for (int i = 0; i < 6; ++i)
    if (kEdgePairs[i][0] == a && kEdgePairs[i][1] == b) return i;
  throw std::invalid_argument("edge_slot: not an edge");
}

static int parity(const std::array<int, 4>& p) {
  int inv = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (p[i] > p[j]) ++inv;
  return inv % 2;
}

int exit_face_of_edge(int a, int b) {
  int rest[2], k = 0;
  for (int v = 0; v < 4; ++v)
    if (v != a && v != b) rest[k++] = v;
  return parity({a, b, rest[0], rest[1]}) == 0 ? rest[1] : rest[0];
}

namespace {

std::string at(int t, int f) {
  std::ostringstream s;
  s << "tet " << t << " face " << f;
  return s.str();
}

template <class T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw InputError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(where + ": field '" + key + "' has the wrong type");
  }
}

std::vector<EquationRow> parse_rows(const json& eq, const char* key, int n) {
  std::vector<EquationRow> rows;
  if (!eq.contains(key)) return rows;
  const std::string where = std::string("equations.") + key;
  for (const auto& r : eq.at(key)) {
    EquationRow row;
    row.abc = field<std::vector<std::array<int, 3>>>(r, "abc", where);
    row.target = field<int>(r, "target", where);
    if (static_cast<int>(row.abc.size()) != n)
      throw InputError(where + ": row has " + std::to_string(row.abc.size()) +
                       " triples for " + std::to_string(n) + " tetrahedra");
    rows.push_back(std::move(row));
  }
  return rows;
}

// Walk every edge cycle. Each class lists its embeddings in the order a ray
// circling the edge meets them.
std::vector<std::vector<EdgeEmbedding>> walk_edge_classes(
    const std::vector<std::array<Gluing, 4>>& gluing) {
  const int n = static_cast<int>(gluing.size());
  std::vector<std::array<bool, 6>> seen(n);
  for (auto& s : seen) s.fill(false);
  std::vector<std::vector<EdgeEmbedding>> classes;
  for (int t0 = 0; t0 < n; ++t0)
    for (int slot = 0; slot < 6; ++slot) {
      if (seen[t0][slot]) continue;
      std::vector<EdgeEmbedding> cls;
      int t = t0, a = kEdgePairs[slot][0], b = kEdgePairs[slot][1];
      for (int guard = 0;; ++guard) {
        if (guard > 6 * n) throw InputError("edge cycle does not close (bad gluing)");
        const int s = edge_slot(a, b);
        if (seen[t][s]) {
          if (t != t0 || s != slot) throw InputError("edge cycle does not close (bad gluing)");
          break;
        }
        seen[t][s] = true;
        cls.push_back({t, std::min(a, b), std::max(a, b), a < b ? 1 : -1});
        const int d = exit_face_of_edge(a, b);
        const Gluing& g = gluing[t][d];
        a = g.perm[a];
        b = g.perm[b];
        t = g.tet;
      }
      classes.push_back(std::move(cls));
    }
  return classes;
}

bool all_integral(const std::vector<std::array<double, 4>>& w) {
  for (const auto& r : w)
    for (double x : r)
      if (x != std::round(x)) return false;
  return true;
}

}  // namespace

void check_gluing(const CombTriangulation& tri) {
  const int n = tri.n_tets();
  for (int t = 0; t < n; ++t)
    for (int f = 0; f < 4; ++f) {
      const Gluing& g = tri.gluing[t][f];
      if (g.tet < 0 || g.tet >= n)
        throw InputError(at(t, f) + ": neighbour index " + std::to_string(g.tet) + " out of range");
      std::array<int, 4> sorted = g.perm;
      std::sort(sorted.begin(), sorted.end());
      if (sorted != std::array<int, 4>{0, 1, 2, 3})
        throw InputError(at(t, f) + ": perm is not a permutation of 0..3");
      if (g.tet == t && g.perm[f] == f) throw InputError(at(t, f) + ": face glued to itself");
      if (parity(g.perm) != 1)
        throw InputError(at(t, f) + ": gluing permutation is even (orientation-preserving pairing)");
      const Gluing& back = tri.gluing[g.tet][g.perm[f]];
      bool inverse = back.tet == t;
      for (int k = 0; k < 4 && inverse; ++k) inverse = back.perm[g.perm[k]] == k;
      if (!inverse)
        throw InputError(at(t, f) + ": gluing is not an involution (partner " +
                         at(g.tet, g.perm[f]) + " does not glue back)");
    }
}

void check_cocycle(const CombTriangulation& tri) {
  const bool exact = all_integral(tri.weights);
  const double tol = exact ? 0.0 : 1e-9;
  for (int t = 0; t < tri.n_tets(); ++t)
    for (int f = 0; f < 4; ++f) {
      const Gluing& g = tri.gluing[t][f];
      const double s = tri.weights[t][f] + tri.weights[g.tet][g.perm[f]];
      if (std::abs(s) > tol)
        throw InputError(at(t, f) + ": weight is not the negative of its partner's (" +
                         at(g.tet, g.perm[f]) + ")");
    }
  for (std::size_t e = 0; e < tri.edge_classes.size(); ++e) {
    double sum = 0;
    for (const auto& emb : tri.edge_classes[e]) {
      const int src = emb.sign > 0 ? emb.a : emb.b, dst = emb.sign > 0 ? emb.b : emb.a;
      sum += tri.weights[emb.tet][exit_face_of_edge(src, dst)];
    }
    if (std::abs(sum) > tol)
      throw InputError("edge class " + std::to_string(e) + ": cocycle condition fails (sum " +
                       std::to_string(sum) + ")");
  }
}

CombTriangulation load_triangulation(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed document: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("malformed document: top level is not an object");

  CombTriangulation tri;
  tri.name = doc.value("name", std::string("unnamed"));
  tri.cusps = doc.value("cusps", 0);
  if (!doc.contains("tets") || !doc["tets"].is_array() || doc["tets"].empty())
    throw InputError("malformed document: 'tets' must be a non-empty array");
  const int n = static_cast<int>(doc["tets"].size());
  for (int t = 0; t < n; ++t) {
    const json& jt = doc["tets"][t];
    const std::string where = "tets[" + std::to_string(t) + "]";
    const auto gl = field<std::vector<json>>(jt, "gluings", where);
    if (gl.size() != 4) throw InputError(where + ": expected 4 gluings");
    std::array<Gluing, 4> row;
    for (int f = 0; f < 4; ++f) {
      row[f].tet = field<int>(gl[f], "tet", at(t, f));
      row[f].perm = field<std::array<int, 4>>(gl[f], "perm", at(t, f));
    }
    tri.gluing.push_back(row);
    tri.weights.push_back(jt.contains("weights") ? field<std::array<double, 4>>(jt, "weights", where)
                                                 : std::array<double, 4>{});
  }
  check_gluing(tri);
  tri.edge_classes = walk_edge_classes(tri.gluing);
  tri.edge_index.assign(n, {});
  for (std::size_t e = 0; e < tri.edge_classes.size(); ++e)
    for (const auto& emb : tri.edge_classes[e])
      tri.edge_index[emb.tet][edge_slot(emb.a, emb.b)] = static_cast<int>(e);

  // A declared edge-class list must describe the same partition.
  if (doc.contains("edge_classes")) {
    std::set<std::set<std::pair<int, int>>> ours, theirs;
    for (const auto& cls : tri.edge_classes) {
      std::set<std::pair<int, int>> s;
      for (const auto& emb : cls) s.insert({emb.tet, edge_slot(emb.a, emb.b)});
      ours.insert(s);
    }
    try {
      for (const auto& cls : doc["edge_classes"]) {
        std::set<std::pair<int, int>> s;
        for (const auto& emb : cls) {
          const int t = emb.at(0).get<int>();
          const auto pair = emb.at(1).get<std::array<int, 2>>();
          if (t < 0 || t >= n || pair[0] == pair[1] || pair[0] < 0 || pair[1] > 3 || pair[0] > 3 ||
              pair[1] < 0)
            throw InputError("edge_classes: bad embedding");
          s.insert({t, edge_slot(pair[0], pair[1])});
        }
        theirs.insert(s);
      }
    } catch (const json::exception&) {
      throw InputError("edge_classes: malformed entry");
    }
    if (ours != theirs) throw InputError("edge_classes: do not match the gluing combinatorics");
  }

  if (doc.contains("equations")) {
    const json& eq = doc["equations"];
    tri.equations.edge_rows = parse_rows(eq, "edge_rows", n);
    tri.equations.completeness_rows = parse_rows(eq, "completeness_rows", n);
    tri.equations.cusp_rows_meridian = parse_rows(eq, "cusp_rows_meridian", n);
    tri.equations.cusp_rows_longitude = parse_rows(eq, "cusp_rows_longitude", n);
  }
  if (doc.contains("shapes")) {
    const auto s = field<std::vector<std::array<double, 2>>>(doc, "shapes", "document");
    if (static_cast<int>(s.size()) != n) throw InputError("shapes: wrong count");
    for (const auto& z : s) tri.shapes.emplace_back(z[0], z[1]);
  }
  if (doc.contains("material")) {
    tri.material_lengths =
        field<std::vector<std::array<double, 6>>>(doc["material"], "edge_lengths", "material");
    if (static_cast<int>(tri.material_lengths.size()) != n)
      throw InputError("material.edge_lengths: wrong count");
    for (int t = 0; t < n; ++t)
      for (double d : tri.material_lengths[t])
        if (!(d > 0) || !std::isfinite(d))
          throw InputError("material.edge_lengths: tet " + std::to_string(t) +
                           " has a non-positive length");
  }
  if (doc.contains("cocycles")) {
    for (const auto& c : doc["cocycles"]) {
      Cocycle co;
      co.name = field<std::string>(c, "name", "cocycles");
      co.weights = field<std::vector<std::array<double, 4>>>(c, "weights", "cocycles." + co.name);
      if (static_cast<int>(co.weights.size()) != n)
        throw InputError("cocycles." + co.name + ": wrong number of tetrahedra");
      tri.cocycles.push_back(std::move(co));
    }
  }
  if (tri.cocycles.empty()) tri.cocycles.push_back({"default", tri.weights});

  tri.integral_weights = all_integral(tri.weights);
  check_cocycle(tri);
  for (const auto& co : tri.cocycles) {
    CombTriangulation probe = tri;
    probe.weights = co.weights;
    try {
      check_cocycle(probe);
    } catch (const InputError& e) {
      throw InputError("cocycle '" + co.name + "': " + e.what());
    }
  }
  return tri;
}

CombTriangulation load_triangulation_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open triangulation file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return load_triangulation(ss.str());
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void select_cocycle(CombTriangulation& tri, const std::string& name) {
  if (name.empty()) return;
  std::string names;
  for (const auto& c : tri.cocycles) {
    if (c.name == name) {
      tri.weights = c.weights;
      tri.integral_weights = all_integral(tri.weights);
      return;
    }
    names += (names.empty() ? "" : ", ") + c.name;
  }
  throw InputError("unknown cocycle '" + name + "' for " + tri.name + " (available: " + names + ")");
}

std::string data_directory() {
  if (const char* env = std::getenv("HYPERTRACE_DATA"); env && *env) return env;
  return HYPERTRACE_DEFAULT_DATA_DIR;
}

CombTriangulation load_manifold(const std::string& name_or_path) {
  namespace fs = std::filesystem;
  if (name_or_path.find('/') != std::string::npos ||
      (name_or_path.size() > 5 && name_or_path.substr(name_or_path.size() - 5) == ".json"))
    return load_triangulation_file(name_or_path);
  // m122(4,-1) and m122_4_-1 name the same bundled file.
  std::string stem;
  for (char c : name_or_path) {
    if (c == '(' || c == ',') stem += '_';
    else if (c != ')' && c != ' ') stem += c;
  }
  const fs::path p = fs::path(data_directory()) / (stem + ".json");
  if (!fs::exists(p)) {
    std::string names;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(data_directory(), ec))
      if (e.path().extension() == ".json") names += (names.empty() ? "" : ", ") + e.path().stem().string();
    throw InputError("unknown manifold '" + name_or_path + "' (available: " + names + ")");
  }
  return load_triangulation_file(p.string());
}

}  // namespace hypertrace
