#include "emsim/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace emsim {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  // prefer the shortest representation that round-trips
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[32];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, x);
    double back = 0.0;
    std::sscanf(shorter, "%lf", &back);
    if (back == x) return shorter;
  }
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

void write_vtk_snapshot(const std::string& path, const Mesh& mesh, const Vec& u_full,
                        const Vec& v_full) {
  auto out = open_out(path);
  out << "# vtk DataFile Version 3.0\n"
      << "excitable media snapshot\n"
      << "ASCII\n"
      << "DATASET POLYDATA\n"
      << "POINTS " << mesh.node_count() << " double\n";
  for (const auto& p : mesh.nodes)
    out << format_double(p[0]) << " " << format_double(p[1]) << " 0\n";
  out << "POLYGONS " << mesh.triangle_count() << " " << 4 * mesh.triangle_count() << "\n";
  for (const auto& t : mesh.triangles)
    out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "POINT_DATA " << mesh.node_count() << "\n"
      << "SCALARS u double 1\nLOOKUP_TABLE default\n";
  for (Eigen::Index i = 0; i < u_full.size(); ++i) out << format_double(u_full[i]) << "\n";
  out << "SCALARS v double 1\nLOOKUP_TABLE default\n";
  for (Eigen::Index i = 0; i < v_full.size(); ++i) out << format_double(v_full[i]) << "\n";
}

void write_nodal_csv(const std::string& path, const Mesh& mesh, const Vec& u_full,
                     const Vec& v_full) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(mesh.node_count());
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    rows.push_back({format_double(mesh.nodes[i][0]), format_double(mesh.nodes[i][1]),
                    format_double(u_full[static_cast<Eigen::Index>(i)]),
                    format_double(v_full[static_cast<Eigen::Index>(i)])});
  }
  write_csv(path, {"x", "y", "u", "v"}, rows);
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash file: " + path);
  std::uint64_t h = 14695981039346656037ull;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

void Manifest::add(const std::string& path) {
  std::string name = path;
  if (name.rfind(dir_ + "/", 0) == 0) name = name.substr(dir_.size() + 1);
  files_.emplace_back(name, fnv1a_file(path));
}

void Manifest::finish() const {
  std::ofstream out(dir_ + "/manifest.txt");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir_);
  char hex[17];
  for (const auto& [name, hash] : files_) {
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
    out << hex << "  " << name << "\n";
  }
}

}  // namespace emsim
