#pragma once

#include <Eigen/Sparse>
#include <cstdint>
#include <stdexcept>

#include "emsim/fem.hpp"
#include "emsim/mesh.hpp"
#include "emsim/noise.hpp"

namespace emsim {

struct StepSizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite nodal value detected mid-run (explicit reaction terms are only
/// conditionally stable).
struct BlowUpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FhnParams {
  double kappa = 1.0;    // diffusion
  double epsilon = 0.1;  // time scale
  double a = 0.1;        // threshold in (0,1)
  double sigma = 0.0;
};

struct BarkleyParams {
  double nu = 1.0;
  double epsilon = 0.05;
  double a = 0.75;
  double b = 0.01;
  double sigma = 0.0;
};

struct MsParams {
  double nu = 0.03;
  double tau_in = 0.07;
  double tau_out = 0.7;
  double tau_open = 8.0;
  double tau_close = 4.0;
  double u_gate = 0.13;
  double sigma = 0.0;
};

struct ModelState {
  Vec u;      // membrane potential, reduced nodal
  Vec v;      // recovery variable
  double t = 0.0;
};

/// Shared discrete operators for one (mesh, boundary condition, noise
/// discretization) triple. Built once, reused by every stepper and replica.
struct FemOperators {
  const Mesh* mesh = nullptr;
  DofLayout layout;
  SpMat mass;       // reduced
  SpMat stiffness;  // reduced
  SpMat p0_load;    // only for P0/P0a noise
  Discretization disc = Discretization::P1;

  static FemOperators build(const Mesh& mesh, BcKind bc, Discretization disc,
                            double period = 0.0);

  /// Noise sites matching `disc`: reduced nodes for P1, barycenters otherwise.
  std::vector<Point2> noise_sites() const;

  /// (w, psi_i) on the reduced DOFs for site values w.
  Vec noise_load(const Vec& site_values) const;
};

void check_finite(const Vec& u, double t, const char* model);

/// Semi-implicit FitzHugh-Nagumo step with the recovery variable eliminated:
///   ((1/dt + a/eps + c dt/(1+dt)) M + kappa A) u_{n+1}
///     = (1/dt) M u_n + M k(u_n) - (c/(1+dt)) M v_n + (sigma/sqrt(dt)) load(W~)
///   v_{n+1} = (v_n + dt u_{n+1}) / (1 + dt)
/// with k(x) = (1/eps)(-x^3 + (1+a) x^2). c = 1 by default; v_over_eps puts
/// the v coupling inside the 1/eps bracket (c = 1/eps).
class FhnStepper {
 public:
  FhnStepper(const FemOperators& ops, const FhnParams& params, double dt,
             bool v_over_eps = false);

  ModelState step(const ModelState& state, const Vec& unit_sample) const;

  const FemOperators& ops() const { return *ops_; }
  double dt() const { return dt_; }

 private:
  const FemOperators* ops_;
  FhnParams p_;
  double dt_, cv_;
  Eigen::SimplicialLDLT<SpMat> solver_;
};

/// Barkley step: explicit reaction, implicit diffusion,
///   (M/dt + nu A) u_{n+1} = M (u_n/dt + (1/eps) u_n (1-u_n)(u_n-(v_n+b)/a))
///                           + (sigma/sqrt(dt)) load(W~)
///   v_{n+1} = (v_n + dt u_{n+1}) / (1 + dt)
class BarkleyStepper {
 public:
  BarkleyStepper(const FemOperators& ops, const BarkleyParams& params, double dt);

  ModelState step(const ModelState& state, const Vec& unit_sample) const;

  const FemOperators& ops() const { return *ops_; }
  double dt() const { return dt_; }

 private:
  const FemOperators* ops_;
  BarkleyParams p_;
  double dt_;
  Eigen::SimplicialLDLT<SpMat> solver_;
};

/// Mitchell-Schaeffer step: explicit reaction, implicit diffusion, nodewise
/// explicit gate for v. Requires dt <= min(tau_open, tau_close) so that
/// v stays in [0,1].
class MsStepper {
 public:
  MsStepper(const FemOperators& ops, const MsParams& params, double dt);

  ModelState step(const ModelState& state, const Vec& unit_sample) const;

  const FemOperators& ops() const { return *ops_; }
  double dt() const { return dt_; }

 private:
  const FemOperators* ops_;
  MsParams p_;
  double dt_;
  Eigen::SimplicialLDLT<SpMat> solver_;
};

/// Checks (f(x)-f(y))(x-y) <= ((1+a^2-a)/3)(x-y)^2 for f(x)=x(1-x)(x-a)
/// on `samples` random pairs in [-2,3]^2.
bool fhn_dissipativity_check(double a, int samples, std::uint64_t seed = 0);

}  // namespace emsim
