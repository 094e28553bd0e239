#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>
#include <map>

#include "emsim/models.hpp"
#include "emsim/rng.hpp"

using namespace emsim;

namespace {

using Rhs = std::function<std::array<double, 2>(double, double)>;

// RK4 reference solve of the 2-variable kinetics reduction.
std::array<double, 2> rk4(Rhs f, double u0, double v0, double t_end, double dt) {
  double u = u0, v = v0;
  const int n = static_cast<int>(std::llround(t_end / dt));
  for (int s = 0; s < n; ++s) {
    const auto k1 = f(u, v);
    const auto k2 = f(u + 0.5 * dt * k1[0], v + 0.5 * dt * k1[1]);
    const auto k3 = f(u + 0.5 * dt * k2[0], v + 0.5 * dt * k2[1]);
    const auto k4 = f(u + dt * k3[0], v + dt * k3[1]);
    u += dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    v += dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
  }
  return {u, v};
}

ModelState constant_state(const FemOperators& ops, double u0, double v0) {
  ModelState st;
  st.u = Vec::Constant(ops.layout.reduced_dim, u0);
  st.v = Vec::Constant(ops.layout.reduced_dim, v0);
  return st;
}

Vec zero_sites(const FemOperators& ops) {
  return Vec::Zero(static_cast<Eigen::Index>(ops.noise_sites().size()));
}

}  // namespace

TEST_CASE("rest states are fixed points") {
  const Mesh m = generate_square_grid(1.0, 4);
  const FemOperators ops = FemOperators::build(m, BcKind::Free, Discretization::P1);
  const Vec w = zero_sites(ops);
  SUBCASE("fhn (0,0)") {
    const FhnStepper step(ops, FhnParams{}, 0.01);
    ModelState st = constant_state(ops, 0.0, 0.0);
    for (int s = 0; s < 20; ++s) st = step.step(st, w);
    CHECK(st.u.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(st.v.lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("barkley (0,0)") {
    const BarkleyStepper step(ops, BarkleyParams{}, 0.01);
    ModelState st = constant_state(ops, 0.0, 0.0);
    for (int s = 0; s < 20; ++s) st = step.step(st, w);
    CHECK(st.u.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(st.v.lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("ms rest (0,1) and the closed gate") {
    const MsStepper step(ops, MsParams{}, 0.01);
    ModelState st = constant_state(ops, 0.0, 1.0);
    for (int s = 0; s < 20; ++s) st = step.step(st, w);
    CHECK(st.u.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((st.v - Vec::Ones(st.v.size())).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("fhn matches its ODE reduction on constants") {
  const Mesh m = generate_square_grid(1.0, 3);
  const FemOperators ops = FemOperators::build(m, BcKind::Free, Discretization::P1);
  const FhnParams p{};
  const double dt = 1e-3;
  const FhnStepper step(ops, p, dt);
  ModelState st = constant_state(ops, 0.8, 0.0);
  const Vec w = zero_sites(ops);
  Rhs f = [&](double u, double v) -> std::array<double, 2> {
    return {u * (1.0 - u) * (u - p.a) / p.epsilon - v, u - v};
  };
  for (double t_end : {1.0, 5.0}) {
    while (st.t < t_end - 0.5 * dt) st = step.step(st, w);
    const auto ref = rk4(f, 0.8, 0.0, t_end, 1e-5);
    CHECK(std::abs(st.u[0] - ref[0]) < 1e-2);
    CHECK(std::abs(st.v[0] - ref[1]) < 1e-2);
    // spatially constant: all nodes identical
    CHECK((st.u.array() - st.u[0]).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("fhn with the v/eps coupling matches its ODE reduction") {
  const Mesh m = generate_square_grid(1.0, 2);
  const FemOperators ops = FemOperators::build(m, BcKind::Free, Discretization::P1);
  const FhnParams p{};
  const double dt = 1e-3;
  const FhnStepper step(ops, p, dt, true);
  ModelState st = constant_state(ops, 0.8, 0.0);
  const Vec w = zero_sites(ops);
  Rhs f = [&](double u, double v) -> std::array<double, 2> {
    return {(u * (1.0 - u) * (u - p.a) - v) / p.epsilon, u - v};
  };
  while (st.t < 1.0 - 0.5 * dt) st = step.step(st, w);
  const auto ref = rk4(f, 0.8, 0.0, 1.0, 1e-5);
  CHECK(std::abs(st.u[0] - ref[0]) < 10.0 * dt);
  CHECK(std::abs(st.v[0] - ref[1]) < 10.0 * dt);
}

TEST_CASE("barkley matches its ODE reduction on constants") {
  const Mesh m = generate_square_grid(1.0, 3);
  const FemOperators ops = FemOperators::build(m, BcKind::Free, Discretization::P1);
  const BarkleyParams p{};
  const double dt = 1e-3;
  const BarkleyStepper step(ops, p, dt);
  const Vec w = zero_sites(ops);
  Rhs f = [&](double u, double v) -> std::array<double, 2> {
    return {u * (1.0 - u) * (u - (v + p.b) / p.a) / p.epsilon, u - v};
  };
  for (auto [u0, v0] : {std::pair{1.0, 0.0}, std::pair{0.3, 0.05}}) {
    ModelState st = constant_state(ops, u0, v0);
    while (st.t < 1.0 - 0.5 * dt) st = step.step(st, w);
    const auto ref = rk4(f, u0, v0, 1.0, 1e-5);
    CHECK(std::abs(st.u[0] - ref[0]) < 10.0 * dt);
    CHECK(std::abs(st.v[0] - ref[1]) < 10.0 * dt);
  }
}

TEST_CASE("mitchell-schaeffer matches its ODE reduction on constants") {
  const Mesh m = generate_square_grid(1.0, 3);
  const FemOperators ops = FemOperators::build(m, BcKind::Free, Discretization::P1);
  const MsParams p{};
  const double dt = 1e-3;
  const MsStepper step(ops, p, dt);
  const Vec w = zero_sites(ops);
  Rhs f = [&](double u, double v) -> std::array<double, 2> {
    const double dv = u < p.u_gate ? (1.0 - v) / p.tau_open : -v / p.tau_close;
    return {(v / p.tau_in) * u * u * (1.0 - u) - u / p.tau_out, dv};
  };
  ModelState st = constant_state(ops, 0.3, 1.0);
  while (st.t < 1.0 - 0.5 * dt) st = step.step(st, w);
  const auto ref = rk4(f, 0.3, 1.0, 1.0, 1e-5);
  CHECK(std::abs(st.u[0] - ref[0]) < 10.0 * dt);
  CHECK(std::abs(st.v[0] - ref[1]) < 10.0 * dt);
}

TEST_CASE("fhn dissipativity bound") {
  for (double a : {0.1, 0.5, 0.9}) CHECK(fhn_dissipativity_check(a, 1000000, 1));
  // f'(x) attains the bound constant (1 - a + a^2)/3 at x = (1+a)/3
  const double a = 0.1, x = (1.0 + a) / 3.0;
  const double fp = -3.0 * x * x + 2.0 * (1.0 + a) * x - a;
  CHECK(fp == doctest::Approx((1.0 - a + a * a) / 3.0).epsilon(1e-12));
  CHECK((1.0 - a + a * a) / 3.0 == doctest::Approx(0.91 / 3.0).epsilon(1e-12));
}

TEST_CASE("ms keeps the gate variable in [0,1], including under noise") {
  const Mesh m = generate_square_grid(1.0, 6);
  const FemOperators ops = FemOperators::build(m, BcKind::Free, Discretization::P1);
  MsParams p;
  p.sigma = 0.2;
  const double dt = 0.05;
  const MsStepper step(ops, p, dt);
  auto factor = std::make_shared<const Eigen::MatrixXd>(noise_factor(
      Kernel::gaussian(0.5), m, Discretization::P1, ops.noise_sites()));
  NoiseSampler sampler(Discretization::P1, factor, 9, 0);
  ModelState st = constant_state(ops, 0.0, 1.0);
  for (int s = 0; s < 200; ++s) {
    st = step.step(st, sampler.sample_increment(1.0));
    CHECK(st.v.minCoeff() >= 0.0);
    CHECK(st.v.maxCoeff() <= 1.0);
  }
}

TEST_CASE("ms rejects step sizes that break the gate box") {
  const Mesh m = generate_square_grid(1.0, 2);
  const FemOperators ops = FemOperators::build(m, BcKind::Free, Discretization::P1);
  MsParams p;
  p.tau_close = 0.5;
  CHECK_THROWS_AS(MsStepper(ops, p, 0.6), StepSizeError);
  CHECK_NOTHROW(MsStepper(ops, p, 0.5));
}

TEST_CASE("non-finite values abort with a blow-up error") {
  Vec bad(2);
  bad << 1.0, std::nan("");
  CHECK_THROWS_AS(check_finite(bad, 3.0, "test"), BlowUpError);
  // a wildly unstable explicit Barkley step blows up and is caught
  const Mesh m = generate_square_grid(1.0, 4);
  const FemOperators ops = FemOperators::build(m, BcKind::Free, Discretization::P1);
  BarkleyParams p;
  p.epsilon = 1e-8;
  const BarkleyStepper step(ops, p, 1.0);
  ModelState st = constant_state(ops, 0.5, 0.0);
  const Vec w = zero_sites(ops);
  CHECK_THROWS_AS(
      [&] {
        for (int s = 0; s < 50; ++s) st = step.step(st, w);
      }(),
      BlowUpError);
}

TEST_CASE("noise-off runs are bit-deterministic") {
  const Mesh m = generate_square_grid(1.0, 5);
  const FemOperators ops = FemOperators::build(m, BcKind::Free, Discretization::P1);
  const BarkleyStepper step(ops, BarkleyParams{}, 0.05);
  RngStream rng(1, 0);
  ModelState init = constant_state(ops, 0.0, 0.0);
  for (Eigen::Index i = 0; i < init.u.size(); ++i) init.u[i] = 0.5 + 0.1 * rng.normal();
  const Vec w = zero_sites(ops);
  ModelState a = init, b = init;
  for (int s = 0; s < 40; ++s) {
    a = step.step(a, w);
    b = step.step(b, w);
  }
  CHECK((a.u - b.u).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.v - b.v).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("periodic barkley is equivariant under lattice translation") {
  const double l = 1.0;
  const int N = 4;
  const Mesh m = generate_square_grid(l, N);
  const FemOperators ops = FemOperators::build(m, BcKind::Periodic, Discretization::P1, l);
  const auto sites = ops.noise_sites();
  // reduced-DOF permutation for the shift x -> x + l/N (mod l)
  auto key = [&](double x, double y) {
    auto wrap = [&](double v) {
      const long k = std::lround(v / (l / N)) % N;
      return (k + N) % N;
    };
    return std::pair<long, long>(wrap(x), wrap(y));
  };
  std::map<std::pair<long, long>, int> index;
  for (std::size_t r = 0; r < sites.size(); ++r)
    index[key(sites[r][0], sites[r][1])] = static_cast<int>(r);
  std::vector<int> shifted(sites.size());
  for (std::size_t r = 0; r < sites.size(); ++r)
    shifted[r] = index.at(key(sites[r][0] + l / N, sites[r][1]));
  auto permute = [&](const Vec& x) {
    Vec y(x.size());
    for (std::size_t r = 0; r < sites.size(); ++r) y[shifted[r]] = x[r];
    return y;
  };

  BarkleyParams bp;
  bp.sigma = 0.1;
  const BarkleyStepper step(ops, bp, 0.05);
  RngStream rng(2, 0);
  ModelState st = constant_state(ops, 0.0, 0.0);
  for (Eigen::Index i = 0; i < st.u.size(); ++i) st.u[i] = 0.4 + 0.2 * rng.normal();
  ModelState stp = st;
  stp.u = permute(st.u);
  stp.v = permute(st.v);
  for (int s = 0; s < 20; ++s) {
    Vec w(st.u.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.normal();
    st = step.step(st, w);
    stp = step.step(stp, permute(w));
  }
  CHECK((permute(st.u) - stp.u).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((permute(st.v) - stp.v).lpNorm<Eigen::Infinity>() < 1e-12);
}
