#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emsim/fem.hpp"
#include "emsim/mesh.hpp"

namespace emsim {

/// Shortest round-trip decimal for a double (%.17g trimmed); used everywhere
/// so CSV output is byte-stable.
std::string format_double(double x);

/// One CSV file: header row plus rows of preformatted cells.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// VTK legacy ASCII snapshot: POINTS + POLYGONS (triangles) + POINT_DATA
/// scalars u and v. Standard viewers render these directly.
void write_vtk_snapshot(const std::string& path, const Mesh& mesh, const Vec& u_full,
                        const Vec& v_full);

/// Nodal CSV fallback: x,y,u,v per node.
void write_nodal_csv(const std::string& path, const Mesh& mesh, const Vec& u_full,
                     const Vec& v_full);

/// FNV-1a 64-bit hash of a file's bytes.
std::uint64_t fnv1a_file(const std::string& path);

/// Run manifest: records every produced file with its content hash and
/// writes "<hash-hex>  <name>" lines to manifest.txt in `dir` on finish().
class Manifest {
 public:
  explicit Manifest(std::string dir) : dir_(std::move(dir)) {}

  void add(const std::string& path);
  void finish() const;

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::uint64_t>> files_;
};

}  // namespace emsim
