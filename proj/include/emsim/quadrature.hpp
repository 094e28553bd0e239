#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "emsim/mesh.hpp"

namespace emsim {

struct TriQuadPoint {
  double l0, l1, l2;  // barycentric coordinates
  double weight;      // relative to |T|
};

/// 3-point midedge rule, exact for quadratics.
inline const std::array<TriQuadPoint, 3>& tri_rule_3() {
  static const std::array<TriQuadPoint, 3> r = {{
      {0.5, 0.5, 0.0, 1.0 / 3.0},
      {0.0, 0.5, 0.5, 1.0 / 3.0},
      {0.5, 0.0, 0.5, 1.0 / 3.0},
  }};
  return r;
}

/// 7-point rule, exact for degree-5 polynomials.
inline const std::array<TriQuadPoint, 7>& tri_rule_7() {
  const double a = 0.059715871789770, b = 0.470142064105115;
  const double c = 0.797426985353087, d = 0.101286507323456;
  const double wa = 0.132394152788506, wc = 0.125939180544827;
  static const std::array<TriQuadPoint, 7> r = {{
      {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225},
      {a, b, b, wa},
      {b, a, b, wa},
      {b, b, a, wa},
      {c, d, d, wc},
      {d, c, d, wc},
      {d, d, c, wc},
  }};
  return r;
}

/// Integral of f over triangle t of the mesh, with the given rule and
/// optional uniform refinement (each level splits every triangle in 4).
template <typename F, typename Rule>
double integrate_triangle(const Mesh& mesh, std::size_t t, F f, const Rule& rule,
                          int refine = 0) {
  const auto& tri = mesh.triangles[t];
  std::vector<std::array<Point2, 3>> tris = {
      {mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]}};
  for (int r = 0; r < refine; ++r) {
    std::vector<std::array<Point2, 3>> next;
    next.reserve(4 * tris.size());
    for (const auto& T : tris) {
      auto mid = [](const Point2& a, const Point2& b) {
        return Point2{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
      };
      Point2 m01 = mid(T[0], T[1]), m12 = mid(T[1], T[2]), m20 = mid(T[2], T[0]);
      next.push_back({T[0], m01, m20});
      next.push_back({m01, T[1], m12});
      next.push_back({m20, m12, T[2]});
      next.push_back({m01, m12, m20});
    }
    tris = std::move(next);
  }
  double total = 0.0;
  for (const auto& T : tris) {
    const double area =
        0.5 * std::abs((T[1][0] - T[0][0]) * (T[2][1] - T[0][1]) -
                       (T[2][0] - T[0][0]) * (T[1][1] - T[0][1]));
    double s = 0.0;
    for (const auto& q : rule) {
      Point2 x{q.l0 * T[0][0] + q.l1 * T[1][0] + q.l2 * T[2][0],
               q.l0 * T[0][1] + q.l1 * T[1][1] + q.l2 * T[2][1]};
      s += q.weight * f(x);
    }
    total += area * s;
  }
  return total;
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1,1]
/// (Newton iteration on the Legendre recurrence).
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Composite Gauss-Legendre integral of f over [a,b] with `panels` panels of
/// `points` points each.
template <typename F>
double integrate_1d(F f, double a, double b, int panels, int points) {
  std::vector<double> x, w;
  gauss_legendre(points, x, w);
  const double hp = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * hp;
    for (int q = 0; q < points; ++q)
      total += 0.5 * hp * w[q] * f(lo + 0.5 * hp * (x[q] + 1.0));
  }
  return total;
}

}  // namespace emsim
