#pragma once

#include <array>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypertrace/hypgeom.hpp"

namespace hypertrace {

// Bad input (malformed file, broken invariant in the data). CLI exit 1.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numerical procedure failed (non-convergence, degeneration). CLI exit 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Gluing {
  int tet = -1;
  std::array<int, 4> perm{};  // vertex k of this tet -> vertex perm[k] of `tet`
};

// One occurrence of an edge class: the edge (a, b), a < b, of tetrahedron
// `tet`; sign is +1 when the class orientation runs a -> b.
struct EdgeEmbedding {
  int tet = 0;
  int a = 0, b = 0;
  int sign = 1;
};

// sum_t a_t log z_t + b_t log z'_t + c_t log z''_t = target * pi i
struct EquationRow {
  std::vector<std::array<int, 3>> abc;
  int target = 0;
};

struct GluingEquations {
  std::vector<EquationRow> edge_rows;
  std::vector<EquationRow> completeness_rows;
  std::vector<EquationRow> cusp_rows_meridian;
  std::vector<EquationRow> cusp_rows_longitude;
};

struct Cocycle {
  std::string name;
  std::vector<std::array<double, 4>> weights;
};

struct CombTriangulation {
  std::string name;
  int cusps = 0;
  std::vector<std::array<Gluing, 4>> gluing;
  std::vector<std::array<double, 4>> weights;
  std::vector<std::vector<EdgeEmbedding>> edge_classes;
  std::vector<std::array<int, 6>> edge_index;       // per tet, per vertex pair
  GluingEquations equations;
  std::vector<std::complex<double>> shapes;              // optional
  std::vector<std::array<double, 6>> material_lengths;  // optional
  std::vector<Cocycle> cocycles;
  bool integral_weights = true;

  int n_tets() const { return static_cast<int>(gluing.size()); }
  bool is_material() const { return !material_lengths.empty(); }
};

// Vertex pairs in the order used for per-tet edge data.
inline constexpr std::array<std::array<int, 2>, 6> kEdgePairs{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

int edge_slot(int a, int b);

// The face of the edge (a->b) that a ray circling the edge positively exits
// through: d such that (a, b, c, d) is an even permutation.
int exit_face_of_edge(int a, int b);

CombTriangulation load_triangulation(const std::string& document);
CombTriangulation load_triangulation_file(const std::string& path);

// Swap in the named cocycle (or throw InputError listing the available ones).
void select_cocycle(CombTriangulation& tri, const std::string& name);

// Cocycle and involution checks, throwing InputError with a location.
void check_gluing(const CombTriangulation& tri);
void check_cocycle(const CombTriangulation& tri);

struct ShapeAssignment {
  std::vector<std::complex<double>> shapes;
  double residual = 0;
  int iterations = 0;
  std::vector<double> residual_history;
};

struct Filling {
  double p = 0, q = 0;
};

// Damped Newton on the logarithmic gluing equations.
ShapeAssignment solve_shapes(const CombTriangulation& tri,
                             const std::vector<std::optional<Filling>>& filling = {},
                             const std::optional<ShapeAssignment>& initial = std::nullopt);

// Max |row(z) - target pi i| for the rows selected by `filling`.
double equation_residual(const CombTriangulation& tri,
                         const std::vector<std::optional<Filling>>& filling,
                         const std::vector<std::complex<double>>& z);

double evaluate_row(const EquationRow& row, const std::vector<std::complex<double>>& z,
                    std::complex<double>* value = nullptr);

// Bloch-Wigner dilogarithm D(z), the volume of the ideal tetrahedron of shape z.
double bloch_wigner(std::complex<double> z);
double lobachevsky(double theta);
double volume(const std::vector<std::complex<double>>& shapes);

enum class GeomKind { Ideal, Material };

struct GeomTet {
  std::array<Vec4d, 4> vertices{};  // light vectors (ideal) or points (material)
  std::array<Vec4d, 4> planes{};    // planes[f] is the face opposite vertex f
  std::array<Mat4d, 4> pairing{};   // maps this tet's face f onto the neighbour's
  std::array<int, 4> neighbor{};
  std::array<int, 4> neighbor_face{};
  std::array<std::array<int, 4>, 4> perm{};
  std::array<double, 4> weights{};
  // Ideal endpoints of the geodesic through each edge (kEdgePairs order).
  std::array<std::array<Vec4d, 2>, 6> edge_ends{};
  std::array<double, 6> dihedral{};  // interior angle at each edge
};

struct GeomTriangulation {
  GeomKind kind = GeomKind::Ideal;
  std::string name;
  std::vector<GeomTet> tets;
  std::vector<std::vector<EdgeEmbedding>> edge_classes;
  bool integral_weights = true;

  int n_tets() const { return static_cast<int>(tets.size()); }
};

// Vertices of the shape-z tetrahedron: infinity, 0, 1, z.
std::array<BoundaryPoint, 4> ideal_vertex_positions(std::complex<double> z);

GeomTriangulation build_geometry_ideal(const CombTriangulation& tri, const ShapeAssignment& shapes,
                                       const Mat4d& global = Mat4d::identity());

// Vertices of a tetrahedron with the given edge lengths (kEdgePairs order)
// in standard position: v0 at the origin (1,0,0,0), v1 in the x0-x1 plane,
// v2 in x3 = 0, v3 with x3 > 0.
std::array<Vec4d, 4> material_vertices(const std::array<double, 6>& lengths);

// Interior dihedral angles (kEdgePairs order) from edge lengths via the Gram matrix.
std::array<double, 6> material_dihedral_angles(const std::array<double, 6>& lengths);

GeomTriangulation build_geometry_material(const CombTriangulation& tri);

// Replace the weights of a built geometry (for cocycle selection after build).
void set_weights(GeomTriangulation& geom, const CombTriangulation& tri);

struct CheckResult {
  std::string name;
  double worst = 0;
  double tolerance = 0;
  bool pass = true;
  std::string location;  // where the worst residual occurs
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool ok() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

ValidationReport validate(const GeomTriangulation& geom);

// Composition of the pairings around edge class e starting from its first
// embedding; the identity for a consistent geometry.
Mat4d edge_holonomy(const GeomTriangulation& geom, int e);

// Load a bundled manifold by name ("m004", "m122_4_-1", ...) or by path.
CombTriangulation load_manifold(const std::string& name_or_path);
std::string data_directory();

}  // namespace hypertrace
