#include "emsim/fem.hpp"

#include <set>

namespace emsim {

DofLayout DofLayout::free(const Mesh& mesh) {
  DofLayout d;
  d.kind = BcKind::Free;
  d.reduced_dim = static_cast<int>(mesh.node_count());
  d.full_to_reduced.resize(mesh.node_count());
  for (int i = 0; i < d.reduced_dim; ++i) d.full_to_reduced[i] = i;
  return d;
}

DofLayout DofLayout::dirichlet(const Mesh& mesh) {
  DofLayout d;
  d.kind = BcKind::Dirichlet;
  std::set<int> boundary;
  for (const auto& e : mesh.boundary_edges) {
    boundary.insert(e.a);
    boundary.insert(e.b);
  }
  d.full_to_reduced.assign(mesh.node_count(), -1);
  int next = 0;
  for (std::size_t i = 0; i < mesh.node_count(); ++i)
    if (!boundary.count(static_cast<int>(i)))
      d.full_to_reduced[i] = next++;
  d.reduced_dim = next;
  return d;
}

DofLayout DofLayout::periodic(const Mesh& mesh, const PeriodicMap& map) {
  DofLayout d;
  d.kind = BcKind::Periodic;
  d.full_to_reduced.assign(mesh.node_count(), -1);
  int next = 0;
  for (std::size_t i = 0; i < mesh.node_count(); ++i)
    if (map.master(static_cast<int>(i)) == static_cast<int>(i))
      d.full_to_reduced[i] = next++;
  for (std::size_t i = 0; i < mesh.node_count(); ++i)
    if (d.full_to_reduced[i] < 0)
      d.full_to_reduced[i] = d.full_to_reduced[map.master(static_cast<int>(i))];
  d.reduced_dim = next;
  return d;
}

Vec DofLayout::expand(const Vec& reduced) const {
  Vec full = Vec::Zero(static_cast<Eigen::Index>(full_to_reduced.size()));
  for (std::size_t i = 0; i < full_to_reduced.size(); ++i)
    if (full_to_reduced[i] >= 0) full[static_cast<Eigen::Index>(i)] = reduced[full_to_reduced[i]];
  return full;
}

Vec DofLayout::restrict_nodal(const Vec& full) const {
  Vec red = Vec::Zero(reduced_dim);
  for (std::size_t i = 0; i < full_to_reduced.size(); ++i)
    if (full_to_reduced[i] >= 0) red[full_to_reduced[i]] = full[static_cast<Eigen::Index>(i)];
  return red;
}

namespace {

template <typename ElementBlock>
SpMat assemble(const Mesh& mesh, const DofLayout& layout, ElementBlock block) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * mesh.triangle_count());
  Eigen::Matrix3d ke;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    block(t, ke);
    const auto& tri = mesh.triangles[t];
    for (int a = 0; a < 3; ++a) {
      int ra = layout.full_to_reduced[tri[a]];
      if (ra < 0) continue;
      for (int b = 0; b < 3; ++b) {
        int rb = layout.full_to_reduced[tri[b]];
        if (rb < 0) continue;
        trips.emplace_back(ra, rb, ke(a, b));
      }
    }
  }
  SpMat m(layout.reduced_dim, layout.reduced_dim);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

}  // namespace

SpMat assemble_mass(const Mesh& mesh, const DofLayout& layout) {
  return assemble(mesh, layout, [&](std::size_t t, Eigen::Matrix3d& ke) {
    const double s = mesh.triangle_area(t) / 12.0;
    ke << 2 * s, s, s, s, 2 * s, s, s, s, 2 * s;
  });
}

SpMat assemble_stiffness(const Mesh& mesh, const DofLayout& layout) {
  return assemble(mesh, layout, [&](std::size_t t, Eigen::Matrix3d& ke) {
    const auto& tri = mesh.triangles[t];
    const Point2 &p0 = mesh.nodes[tri[0]], &p1 = mesh.nodes[tri[1]], &p2 = mesh.nodes[tri[2]];
    const double b[3] = {p1[1] - p2[1], p2[1] - p0[1], p0[1] - p1[1]};
    const double c[3] = {p2[0] - p1[0], p0[0] - p2[0], p1[0] - p0[0]};
    const double inv4a = 1.0 / (4.0 * mesh.triangle_area(t));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        ke(i, j) = (b[i] * b[j] + c[i] * c[j]) * inv4a;
  });
}

SpMat assemble_p0_load(const Mesh& mesh, const DofLayout& layout) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(3 * mesh.triangle_count());
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const double w = mesh.triangle_area(t) / 3.0;
    for (int v : mesh.triangles[t]) {
      int r = layout.full_to_reduced[v];
      if (r >= 0) trips.emplace_back(r, static_cast<int>(t), w);
    }
  }
  SpMat b(layout.reduced_dim, static_cast<Eigen::Index>(mesh.triangle_count()));
  b.setFromTriplets(trips.begin(), trips.end());
  b.makeCompressed();
  return b;
}

Vec p0_mass_diag(const Mesh& mesh) {
  Vec d(static_cast<Eigen::Index>(mesh.triangle_count()));
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t)
    d[static_cast<Eigen::Index>(t)] = mesh.triangle_area(t);
  return d;
}

double l2_norm(const Vec& v, const SpMat& M) { return std::sqrt(v.dot(M * v)); }

Vec nonlinear_load(const Vec& values, const SpMat& M) { return M * values; }

}  // namespace emsim
