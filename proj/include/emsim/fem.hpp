#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "emsim/mesh.hpp"

namespace emsim {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

enum class BcKind { Free, Dirichlet, Periodic };

/// Maps full node indices to reduced degrees of freedom.
///   Free:      identity (pure Neumann).
///   Dirichlet: boundary nodes eliminated (pinned to zero), -1 in the map.
///   Periodic:  slave nodes share their master's reduced index.
struct DofLayout {
  BcKind kind = BcKind::Free;
  std::vector<int> full_to_reduced;  // size = node count, -1 = eliminated
  int reduced_dim = 0;

  static DofLayout free(const Mesh& mesh);
  static DofLayout dirichlet(const Mesh& mesh);
  static DofLayout periodic(const Mesh& mesh, const PeriodicMap& map);

  /// Reduced vector -> full nodal vector (Dirichlet nodes get 0).
  Vec expand(const Vec& reduced) const;
  /// Full nodal vector -> reduced (Periodic: master entry wins).
  Vec restrict_nodal(const Vec& full) const;
};

/// Consistent P1 mass matrix; element block (|T|/12)[[2,1,1],[1,2,1],[1,1,2]].
SpMat assemble_mass(const Mesh& mesh, const DofLayout& layout);

/// P1 stiffness matrix from the constant element gradients; PSD, and PD for
/// the Dirichlet layout.
SpMat assemble_stiffness(const Mesh& mesh, const DofLayout& layout);

/// Load operator for piecewise-constant (per-element) fields:
/// B(i,T) = integral of psi_i over T = |T|/3 for the three vertices of T,
/// rows mapped through the layout. (B*w)_i = (w, psi_i) for P0 data w.
SpMat assemble_p0_load(const Mesh& mesh, const DofLayout& layout);

/// Diagonal of the P0 mass matrix: element areas.
Vec p0_mass_diag(const Mesh& mesh);

/// Discrete L2 norm sqrt(v^T M v).
double l2_norm(const Vec& v, const SpMat& M);

/// Load vector of the P1 interpolant of a pointwise nonlinearity:
/// M * values, where values_i = k(u_i).
Vec nonlinear_load(const Vec& values, const SpMat& M);

}  // namespace emsim
