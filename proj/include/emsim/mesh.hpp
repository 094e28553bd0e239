#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace emsim {

using Point2 = std::array<double, 2>;

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  int label = 0;
};

/// Conforming P1 triangulation of a 2-D polygonal domain.
///
/// Immutable after construction; safe to share across threads.
struct Mesh {
  std::vector<Point2> nodes;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<BoundaryEdge> boundary_edges;
  double h = 0.0;    // max element diameter
  double rho = 0.0;  // max over T of (max vertex-barycenter distance)/h

  std::size_t node_count() const { return nodes.size(); }
  std::size_t triangle_count() const { return triangles.size(); }

  double triangle_area(std::size_t t) const;
  double total_area() const;
};

/// Slave -> master identification of opposite-edge nodes on a square torus.
struct PeriodicMap {
  std::vector<int> pairs_slave;   // slave node indices
  std::vector<int> pairs_master;  // matching master node indices
  int reduced_dof_count = 0;

  /// master(i) for any node index; identity on non-slaves.
  int master(int node) const;

 private:
  friend PeriodicMap periodic_node_map(const Mesh&, double);
  std::vector<int> master_of_;  // full lookup, size = node count
};

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Uniform grid on [0,l]^2 with N subdivisions per side; every cell split
/// along the lower-left -> upper-right diagonal. (N+1)^2 nodes, 2N^2
/// triangles, h = (l/N)*sqrt(2). Boundary labels: 1 bottom, 2 right,
/// 3 top, 4 left.
Mesh generate_square_grid(double l, int N);

/// Reads the ASCII mesh format (strict subset of the FreeFem .msh format):
/// line 1 "nv nt nbe"; nv lines "x y label"; nt lines "i j k region"
/// (1-based); nbe lines "i j label". Throws MeshError with a line number on
/// parse failure, or naming the offending triangle on invariant violation.
Mesh import_mesh(std::istream& in);

/// Inverse of import_mesh; coordinates at 17 significant digits so a
/// re-parse is bit-exact.
void export_mesh(const Mesh& mesh, std::ostream& out);

/// Centers of gravity g_T, one per triangle.
std::vector<Point2> barycenters(const Mesh& mesh);

/// True iff every triangle fits in B(barycenter, rho_bound * h).
bool check_regularity(const Mesh& mesh, double rho_bound,
                      std::size_t* worst_triangle = nullptr);

/// Identifies right->left, top->bottom and the three non-origin corners of a
/// structured square grid of period l. Throws MeshError if a boundary node
/// has no geometric partner within 1e-9*l.
PeriodicMap periodic_node_map(const Mesh& mesh, double l);

}  // namespace emsim
