#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "emsim/fem.hpp"
#include "emsim/mesh.hpp"
#include "emsim/rng.hpp"

namespace emsim {

struct NotPsdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Spatial covariance kernel q(x,y) of the Q-Wiener process.
struct Kernel {
  enum class Variant { Gaussian, Separable, ScaledGaussian };

  Variant variant = Variant::Gaussian;
  double xi = 1.0;          // correlation length (gaussian variants)
  double amp = 1.0;         // a in (a/xi^2) exp(-(b/xi^2)|x|^2)
  double rate = 1.0;        // b
  int k0 = 1, p0 = 1;       // separable mode numbers
  double l = 1.0;           // separable domain side

  /// q(x,y) = (1/(4 xi^2)) exp(-(pi/(4 xi^2)) |x-y|^2)
  static Kernel gaussian(double xi);
  /// q(x,y) = f(x) f(y), f(x) = 2 sin(k0 pi x1 / l) sin(p0 pi x2 / l)
  static Kernel separable(int k0, int p0, double l);
  /// q(x,y) = (a/xi^2) exp(-(b/xi^2) |x-y|^2)
  static Kernel scaled_gaussian(double a, double b, double xi);

  double operator()(const Point2& x, const Point2& y) const;

  /// The separable kernel's factor f.
  double separable_f(const Point2& x) const;
};

Eigen::MatrixXd covariance_matrix(const Kernel& kernel, const std::vector<Point2>& points);

/// Cholesky factor L with L L^T = K + delta I, delta escalating through
/// {0, 1e-12, 1e-10, 1e-8} * max(diag K). Throws NotPsdError if every level
/// fails.
Eigen::MatrixXd cholesky_psd(const Eigen::MatrixXd& K);

enum class Discretization { P0, P0a, P1 };

/// Samples spatially-correlated Wiener increments at a fixed set of sites
/// (P1: mesh nodes, P0/P0a: barycenters). Each Monte Carlo replica owns its
/// own sampler (private RNG stream); the factor is shared via copy.
class NoiseSampler {
 public:
  NoiseSampler(Discretization disc, std::shared_ptr<const Eigen::MatrixXd> factor,
               std::uint64_t seed, std::uint64_t replica)
      : disc_(disc), factor_(std::move(factor)), rng_(seed, replica) {}

  /// sqrt(dt) * L * g with g i.i.d. standard normal; successive calls
  /// independent.
  Vec sample_increment(double dt);

  Discretization discretization() const { return disc_; }
  const Eigen::MatrixXd& factor() const { return *factor_; }
  RngStream& rng() { return rng_; }

 private:
  Discretization disc_;
  std::shared_ptr<const Eigen::MatrixXd> factor_;  // shared across replicas
  RngStream rng_;
};

/// Covariance factor for the requested discretization: P1 uses q at the
/// given nodes, P0 uses q at barycenters, P0a uses the per-pair double
/// integrals (Q 1_T, 1_S)/(|T||S|) by 3-point Gauss quadrature.
Eigen::MatrixXd noise_factor(const Kernel& kernel, const Mesh& mesh,
                             Discretization disc,
                             const std::vector<Point2>& p1_sites);

/// Validates that sampled site values match the discretization and returns
/// the finite-element coefficients (P1: nodal, P0/P0a: per element).
Vec project_noise(const Vec& values, Discretization disc, const Mesh& mesh);

/// Exact rank-one path W_t = beta_t * f_{k0 p0}, evaluable anywhere.
struct SeparablePath {
  Kernel kernel;               // separable
  std::vector<double> times;   // increasing from 0
  std::vector<double> beta;    // Brownian values at times

  double eval(const Point2& x, std::size_t time_index) const {
    return beta[time_index] * kernel.separable_f(x);
  }
};

SeparablePath exact_separable_path(int k0, int p0, double l,
                                   const std::vector<double>& times,
                                   std::uint64_t seed);

struct MuNRow {
  int n = 0;
  double mu_hat = 0.0;
  double stderr_ = 0.0;
};

struct MuNResult {
  std::vector<MuNRow> rows;
  double slope = 0.0;  // least-squares slope of log mu vs log N
};

/// Monte Carlo estimate of mu_N = E||W^Q_1 - W^{Q,N,0}_1||^2 for the
/// separable kernel on the 2N^2-triangle grid, plus the fitted log-log slope.
MuNResult mu_n_experiment(int k0, int p0, double l, const std::vector<int>& n_list,
                          int samples, std::uint64_t seed);

/// Deterministic oracle for mu_N: sum over triangles of the quadrature of
/// (f(x) - f(g_T))^2 (E beta_1^2 = 1).
double mu_n_quadrature(int k0, int p0, double l, int n, int refine = 0);

}  // namespace emsim
