#include "emsim/models.hpp"

#include <cmath>

#include "emsim/rng.hpp"

namespace emsim {

FemOperators FemOperators::build(const Mesh& mesh, BcKind bc, Discretization disc,
                                 double period) {
  FemOperators ops;
  ops.mesh = &mesh;
  ops.disc = disc;
  switch (bc) {
    case BcKind::Free:
      ops.layout = DofLayout::free(mesh);
      break;
    case BcKind::Dirichlet:
      ops.layout = DofLayout::dirichlet(mesh);
      break;
    case BcKind::Periodic:
      ops.layout = DofLayout::periodic(mesh, periodic_node_map(mesh, period));
      break;
  }
  ops.mass = assemble_mass(mesh, ops.layout);
  ops.stiffness = assemble_stiffness(mesh, ops.layout);
  if (disc != Discretization::P1) ops.p0_load = assemble_p0_load(mesh, ops.layout);
  return ops;
}

std::vector<Point2> FemOperators::noise_sites() const {
  if (disc != Discretization::P1) return barycenters(*mesh);
  // one representative node per reduced DOF (the master under periodic BCs)
  std::vector<Point2> sites(static_cast<std::size_t>(layout.reduced_dim));
  std::vector<bool> seen(static_cast<std::size_t>(layout.reduced_dim), false);
  for (std::size_t i = 0; i < mesh->node_count(); ++i) {
    const int r = layout.full_to_reduced[i];
    if (r >= 0 && !seen[static_cast<std::size_t>(r)]) {
      sites[static_cast<std::size_t>(r)] = mesh->nodes[i];
      seen[static_cast<std::size_t>(r)] = true;
    }
  }
  return sites;
}

Vec FemOperators::noise_load(const Vec& site_values) const {
  if (disc == Discretization::P1) return mass * site_values;
  return p0_load * site_values;
}

void check_finite(const Vec& u, double t, const char* model) {
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i]))
      throw BlowUpError(std::string(model) + ": non-finite value " +
                        std::to_string(u[i]) + " at node " + std::to_string(i) +
                        ", t=" + std::to_string(t) + " (reduce dt)");
  }
}

FhnStepper::FhnStepper(const FemOperators& ops, const FhnParams& params, double dt,
                       bool v_over_eps)
    : ops_(&ops), p_(params), dt_(dt), cv_(v_over_eps ? 1.0 / params.epsilon : 1.0) {
  const double coef = 1.0 / dt + p_.a / p_.epsilon + cv_ * dt / (1.0 + dt);
  SpMat system = coef * ops.mass;
  system += p_.kappa * ops.stiffness;
  solver_.compute(system);
  if (solver_.info() != Eigen::Success)
    throw std::runtime_error("FhnStepper: factorization failed");
}

ModelState FhnStepper::step(const ModelState& state, const Vec& unit_sample) const {
  const auto& ops = *ops_;
  Vec k(state.u.size());
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    const double x = state.u[i];
    k[i] = (-x * x * x + (1.0 + p_.a) * x * x) / p_.epsilon;
  }
  Vec rhs = ops.mass * (state.u / dt_ + k - (cv_ / (1.0 + dt_)) * state.v);
  if (p_.sigma > 0.0)
    rhs += (p_.sigma / std::sqrt(dt_)) * ops.noise_load(unit_sample);
  ModelState next;
  next.u = solver_.solve(rhs);
  if (solver_.info() != Eigen::Success)
    throw std::runtime_error("FhnStepper: solve failed");
  next.v = (state.v + dt_ * next.u) / (1.0 + dt_);
  next.t = state.t + dt_;
  check_finite(next.u, next.t, "fhn");
  return next;
}

BarkleyStepper::BarkleyStepper(const FemOperators& ops, const BarkleyParams& params,
                               double dt)
    : ops_(&ops), p_(params), dt_(dt) {
  SpMat system = ops.mass / dt;
  system += p_.nu * ops.stiffness;
  solver_.compute(system);
  if (solver_.info() != Eigen::Success)
    throw std::runtime_error("BarkleyStepper: factorization failed");
}

ModelState BarkleyStepper::step(const ModelState& state, const Vec& unit_sample) const {
  const auto& ops = *ops_;
  Vec r(state.u.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double u = state.u[i];
    r[i] = u / dt_ + (u * (1.0 - u) * (u - (state.v[i] + p_.b) / p_.a)) / p_.epsilon;
  }
  Vec rhs = ops.mass * r;
  if (p_.sigma > 0.0)
    rhs += (p_.sigma / std::sqrt(dt_)) * ops.noise_load(unit_sample);
  ModelState next;
  next.u = solver_.solve(rhs);
  if (solver_.info() != Eigen::Success)
    throw std::runtime_error("BarkleyStepper: solve failed");
  next.v = (state.v + dt_ * next.u) / (1.0 + dt_);
  next.t = state.t + dt_;
  check_finite(next.u, next.t, "barkley");
  return next;
}

MsStepper::MsStepper(const FemOperators& ops, const MsParams& params, double dt)
    : ops_(&ops), p_(params), dt_(dt) {
  if (dt > std::min(p_.tau_open, p_.tau_close))
    throw StepSizeError("ms: dt must be <= min(tau_open, tau_close) to keep v in [0,1]");
  SpMat system = ops.mass / dt;
  system += p_.nu * ops.stiffness;
  solver_.compute(system);
  if (solver_.info() != Eigen::Success)
    throw std::runtime_error("MsStepper: factorization failed");
}

ModelState MsStepper::step(const ModelState& state, const Vec& unit_sample) const {
  const auto& ops = *ops_;
  Vec r(state.u.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double u = state.u[i];
    r[i] = u / dt_ + (state.v[i] / p_.tau_in) * u * u * (1.0 - u) - u / p_.tau_out;
  }
  Vec rhs = ops.mass * r;
  if (p_.sigma > 0.0)
    rhs += (p_.sigma / std::sqrt(dt_)) * ops.noise_load(unit_sample);
  ModelState next;
  next.u = solver_.solve(rhs);
  if (solver_.info() != Eigen::Success)
    throw std::runtime_error("MsStepper: solve failed");
  next.v = state.v;
  for (Eigen::Index i = 0; i < next.v.size(); ++i) {
    if (state.u[i] < p_.u_gate)
      next.v[i] += dt_ * (1.0 - state.v[i]) / p_.tau_open;
    else
      next.v[i] -= dt_ * state.v[i] / p_.tau_close;
  }
  next.t = state.t + dt_;
  check_finite(next.u, next.t, "ms");
  return next;
}

bool fhn_dissipativity_check(double a, int samples, std::uint64_t seed) {
  RngStream rng(seed, 0);
  const double bound = (1.0 + a * a - a) / 3.0;
  auto f = [a](double x) { return x * (1.0 - x) * (x - a); };
  for (int i = 0; i < samples; ++i) {
    const double x = -2.0 + 5.0 * rng.uniform();
    const double y = -2.0 + 5.0 * rng.uniform();
    const double d = x - y;
    if ((f(x) - f(y)) * d > bound * d * d + 1e-12) return false;
  }
  return true;
}

}  // namespace emsim
