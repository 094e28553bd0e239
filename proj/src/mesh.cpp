#include "emsim/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace emsim {

namespace {

double signed_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

double dist(const Point2& a, const Point2& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

// h = max element diameter, rho = max vertex-barycenter distance / h.
void compute_size_and_regularity(Mesh& m) {
  double h = 0.0;
  for (const auto& t : m.triangles) {
    const Point2 &a = m.nodes[t[0]], &b = m.nodes[t[1]], &c = m.nodes[t[2]];
    h = std::max({h, dist(a, b), dist(b, c), dist(c, a)});
  }
  m.h = h;
  double rho = 0.0;
  for (const auto& t : m.triangles) {
    const Point2 &a = m.nodes[t[0]], &b = m.nodes[t[1]], &c = m.nodes[t[2]];
    Point2 g{(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0};
    double r = std::max({dist(g, a), dist(g, b), dist(g, c)});
    rho = std::max(rho, r / h);
  }
  m.rho = rho;
}

void validate(Mesh& m) {
  const int nv = static_cast<int>(m.nodes.size());
  for (std::size_t k = 0; k < m.triangles.size(); ++k) {
    for (int v : m.triangles[k]) {
      if (v < 0 || v >= nv)
        throw MeshError("triangle " + std::to_string(k) +
                        ": node index out of range");
    }
    const auto& t = m.triangles[k];
    double a = signed_area(m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]]);
    if (a <= 0.0)
      throw MeshError("triangle " + std::to_string(k) +
                      (a == 0.0 ? ": zero area" : ": negative area (not CCW)"));
  }
  for (std::size_t k = 0; k < m.boundary_edges.size(); ++k) {
    const auto& e = m.boundary_edges[k];
    if (e.a < 0 || e.a >= nv || e.b < 0 || e.b >= nv)
      throw MeshError("boundary edge " + std::to_string(k) +
                      ": node index out of range");
  }
  // Conformity: each undirected edge in at most two triangles, and with
  // opposite orientation when shared. Excludes overlapping elements.
  std::map<std::pair<int, int>, int> oriented;  // directed edge -> count
  for (std::size_t k = 0; k < m.triangles.size(); ++k) {
    const auto& t = m.triangles[k];
    for (int e = 0; e < 3; ++e) {
      auto key = std::make_pair(t[e], t[(e + 1) % 3]);
      if (++oriented[key] > 1)
        throw MeshError("triangle " + std::to_string(k) +
                        ": duplicated oriented edge (overlapping elements)");
    }
  }
  compute_size_and_regularity(m);
}

}  // namespace

double Mesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
}

double Mesh::total_area() const {
  double s = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) s += triangle_area(t);
  return s;
}

int PeriodicMap::master(int node) const { return master_of_[node]; }

Mesh generate_square_grid(double l, int N) {
  if (!(l > 0.0) || N < 1) throw MeshError("generate_square_grid: l > 0 and N >= 1 required");
  Mesh m;
  const int n = N + 1;
  m.nodes.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      m.nodes.push_back({l * i / N, l * j / N});
  auto id = [n](int i, int j) { return j * n + i; };
  m.triangles.reserve(2u * N * N);
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < N; ++i) {
      int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      m.triangles.push_back({a, b, c});
      m.triangles.push_back({a, c, d});
    }
  }
  for (int i = 0; i < N; ++i) m.boundary_edges.push_back({id(i, 0), id(i + 1, 0), 1});
  for (int j = 0; j < N; ++j) m.boundary_edges.push_back({id(N, j), id(N, j + 1), 2});
  for (int i = N; i > 0; --i) m.boundary_edges.push_back({id(i, N), id(i - 1, N), 3});
  for (int j = N; j > 0; --j) m.boundary_edges.push_back({id(0, j), id(0, j - 1), 4});
  validate(m);
  return m;
}

Mesh import_mesh(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next_line = [&](std::istringstream& iss) {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        iss.clear();
        iss.str(line);
        return;
      }
    }
    throw MeshError("line " + std::to_string(line_no + 1) + ": unexpected end of stream");
  };
  auto fail = [&](const std::string& what) -> MeshError {
    return MeshError("line " + std::to_string(line_no) + ": " + what);
  };

  std::istringstream iss;
  next_line(iss);
  long nv = 0, nt = 0, nbe = 0;
  if (!(iss >> nv >> nt >> nbe) || nv < 1 || nt < 1 || nbe < 0)
    throw fail("expected header 'nv nt nbe'");

  Mesh m;
  m.nodes.resize(nv);
  for (long i = 0; i < nv; ++i) {
    next_line(iss);
    int label;
    if (!(iss >> m.nodes[i][0] >> m.nodes[i][1] >> label))
      throw fail("expected node 'x y label'");
  }
  m.triangles.resize(nt);
  for (long t = 0; t < nt; ++t) {
    next_line(iss);
    int i, j, k, region;
    if (!(iss >> i >> j >> k >> region)) throw fail("expected triangle 'i j k region'");
    m.triangles[t] = {i - 1, j - 1, k - 1};
  }
  m.boundary_edges.resize(nbe);
  for (long e = 0; e < nbe; ++e) {
    next_line(iss);
    int i, j, label;
    if (!(iss >> i >> j >> label)) throw fail("expected boundary edge 'i j label'");
    m.boundary_edges[e] = {i - 1, j - 1, label};
  }
  validate(m);
  return m;
}

void export_mesh(const Mesh& mesh, std::ostream& out) {
  char buf[64];
  out << mesh.nodes.size() << ' ' << mesh.triangles.size() << ' '
      << mesh.boundary_edges.size() << '\n';
  for (const auto& p : mesh.nodes) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", p[0], p[1]);
    out << buf;
  }
  for (const auto& t : mesh.triangles)
    out << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << " 0\n";
  for (const auto& e : mesh.boundary_edges)
    out << e.a + 1 << ' ' << e.b + 1 << ' ' << e.label << '\n';
}

std::vector<Point2> barycenters(const Mesh& mesh) {
  std::vector<Point2> g(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Point2 &a = mesh.nodes[tri[0]], &b = mesh.nodes[tri[1]], &c = mesh.nodes[tri[2]];
    g[t] = {(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0};
  }
  return g;
}

bool check_regularity(const Mesh& mesh, double rho_bound, std::size_t* worst_triangle) {
  if (!(rho_bound > 0.0)) throw MeshError("check_regularity: rho > 0 required");
  double worst = -1.0;
  std::size_t worst_t = 0;
  auto g = barycenters(mesh);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    double r = 0.0;
    for (int v : tri) r = std::max(r, dist(g[t], mesh.nodes[v]));
    if (r > worst) {
      worst = r;
      worst_t = t;
    }
  }
  if (worst_triangle) *worst_triangle = worst_t;
  return worst <= rho_bound * mesh.h;
}

PeriodicMap periodic_node_map(const Mesh& mesh, double l) {
  const double tol = 1e-9 * l;
  const int nv = static_cast<int>(mesh.nodes.size());
  auto on = [&](double v, double target) { return std::abs(v - target) <= tol; };

  // Master image of a coordinate: l folds back to 0.
  auto fold = [&](double v) { return on(v, l) ? 0.0 : v; };

  PeriodicMap pm;
  pm.master_of_.resize(nv);
  std::vector<int> masters;  // nodes not on the right/top edge
  for (int i = 0; i < nv; ++i) {
    const auto& p = mesh.nodes[i];
    pm.master_of_[i] = i;
    if (!on(p[0], l) && !on(p[1], l)) masters.push_back(i);
  }
  for (int i = 0; i < nv; ++i) {
    const auto& p = mesh.nodes[i];
    if (!on(p[0], l) && !on(p[1], l)) continue;  // already a master
    Point2 target{fold(p[0]), fold(p[1])};
    int found = -1;
    for (int mnode : masters) {
      if (dist(mesh.nodes[mnode], target) <= tol) {
        found = mnode;
        break;
      }
    }
    if (found < 0)
      throw MeshError("periodic_node_map: boundary node " + std::to_string(i) +
                      " has no partner within tolerance");
    pm.master_of_[i] = found;
    pm.pairs_slave.push_back(i);
    pm.pairs_master.push_back(found);
  }
  pm.reduced_dof_count = nv - static_cast<int>(pm.pairs_slave.size());
  return pm;
}

}  // namespace emsim
