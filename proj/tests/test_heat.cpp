#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "emsim/heat.hpp"
#include "emsim/quadrature.hpp"

using namespace emsim;

namespace {

Vec interpolate_reduced(const Mesh& m, const DofLayout& layout, double (*f)(double, double)) {
  Vec full(m.node_count());
  for (std::size_t i = 0; i < m.node_count(); ++i) full[i] = f(m.nodes[i][0], m.nodes[i][1]);
  return layout.restrict_nodal(full);
}

Vec zero_sites(const HeatScheme& s) {
  const std::size_t n = s.config().discretization == Discretization::P1
                            ? s.mesh().node_count()
                            : s.mesh().triangle_count();
  return Vec::Zero(static_cast<Eigen::Index>(n));
}

}  // namespace

TEST_CASE("zero data stays zero") {
  const Mesh m = generate_square_grid(1.0, 6);
  LinearSchemeConfig cfg;
  cfg.sigma = 0.0;
  const HeatScheme scheme(m, cfg);
  Vec u = Vec::Zero(scheme.layout().reduced_dim);
  const Vec w = zero_sites(scheme);
  for (int s = 0; s < 10; ++s) u = scheme.step(u, w);
  CHECK(u.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("deterministic decay of the first eigenmode") {
  const Mesh m = generate_square_grid(1.0, 20);
  LinearSchemeConfig cfg;
  cfg.sigma = 0.0;
  cfg.dt = 1e-3;
  const HeatScheme scheme(m, cfg);
  Vec u = interpolate_reduced(m, scheme.layout(), [](double x, double y) {
    return 2.0 * std::sin(M_PI * x) * std::sin(M_PI * y);
  });
  const double n0 = l2_norm(u, scheme.mass());
  const Vec w = zero_sites(scheme);
  const int steps = 100;
  for (int s = 0; s < steps; ++s) u = scheme.step(u, w);
  const double expect = std::exp(-2.0 * M_PI * M_PI * steps * cfg.dt);
  CHECK(l2_norm(u, scheme.mass()) / n0 == doctest::Approx(expect).epsilon(0.05));
}

TEST_CASE("one step satisfies the scheme equation exactly") {
  const Mesh m = generate_square_grid(1.0, 8);
  for (Discretization disc : {Discretization::P1, Discretization::P0}) {
    LinearSchemeConfig cfg;
    cfg.discretization = disc;
    const HeatScheme scheme(m, cfg);
    NoiseSampler sampler = scheme.make_sampler(0);
    Vec u = interpolate_reduced(m, scheme.layout(),
                                [](double x, double y) { return x * (1.0 - x) * y; });
    const Vec w = sampler.sample_increment(cfg.dt);
    const Vec u1 = scheme.step(u, w);
    const Vec lhs = (scheme.mass() / cfg.dt + scheme.stiffness()) * u1;
    const Vec rhs = (scheme.mass() * u) / cfg.dt + (cfg.sigma / cfg.dt) * scheme.noise_load(w);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("the step map is affine") {
  const Mesh m = generate_square_grid(1.0, 6);
  LinearSchemeConfig cfg;
  const HeatScheme scheme(m, cfg);
  NoiseSampler sampler = scheme.make_sampler(1);
  const Vec u1 = interpolate_reduced(m, scheme.layout(),
                                     [](double x, double y) { return x * y; });
  const Vec u2 = interpolate_reduced(m, scheme.layout(),
                                     [](double x, double y) { return std::sin(x + y); });
  const Vec w1 = sampler.sample_increment(cfg.dt);
  const Vec w2 = sampler.sample_increment(cfg.dt);
  const Vec sum = scheme.step(u1 + u2, w1 + w2);
  const Vec parts = scheme.step(u1, w1) + scheme.step(u2, w2);
  CHECK((sum - parts).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("modal weights of the separable kernel") {
  const Kernel k = Kernel::separable(2, 3, 1.0);
  CHECK(modal_weight(k, 2, 3, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(modal_weight(k, 1, 1, 1.0) == 0.0);
  CHECK(modal_weight(k, 3, 2, 1.0) == 0.0);
  const Kernel k5 = Kernel::separable(1, 1, 5.0);
  CHECK(modal_weight(k5, 1, 1, 5.0) == doctest::Approx(25.0).epsilon(1e-14));
}

TEST_CASE("modal weights of a narrow gaussian kernel against brute quadrature") {
  // Narrow kernel: q(x,y) = c(x1-y1) c(x2-y2), c(r) = (1/(2 xi)) e^{-pi r^2/(4 xi^2)}.
  const double xi = 0.05;
  const Kernel kern = Kernel::gaussian(xi);
  auto axis_oracle = [&](int k) {
    auto c = [&](double r) {
      const double s = 1.0 / (2.0 * xi);
      return s * std::exp(-M_PI * s * s * r * r);
    };
    auto outer = [&](double s) {
      return integrate_1d(
          [&](double t) {
            return c(s - t) * std::sqrt(2.0) * std::sin(k * M_PI * t);
          },
          0.0, 1.0, 400, 8);
    };
    return integrate_1d(
        [&](double s) { return std::sqrt(2.0) * std::sin(k * M_PI * s) * outer(s); }, 0.0,
        1.0, 400, 8);
  };
  const double o1 = axis_oracle(1), o2 = axis_oracle(2);
  CHECK(modal_weight(kern, 1, 1, 1.0) == doctest::Approx(o1 * o1).epsilon(0.10));
  CHECK(modal_weight(kern, 1, 2, 1.0) == doctest::Approx(o1 * o2).epsilon(0.10));
}

TEST_CASE("Gamma series: basic properties") {
  const GammaSeries gamma(Kernel::gaussian(2.0), 20.0, 0.15);
  CHECK(gamma(0.0) == 0.0);
  double prev = 0.0;
  for (double t : {0.5, 1.0, 2.0, 5.0, 10.0}) {
    const double g = gamma(t);
    CHECK(g > prev);
    prev = g;
  }
}

TEST_CASE("Gamma series: separable closed form") {
  const double sigma = 0.3, l = 2.0;
  const GammaSeries gamma(Kernel::separable(1, 2, l), l, sigma);
  const double lam = M_PI * M_PI / (l * l) * 5.0;
  for (double t : {0.1, 1.0, 4.0}) {
    const double expect = sigma * sigma * l * l * (1.0 - std::exp(-2.0 * lam * t)) / (2.0 * lam);
    CHECK(gamma(t) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("Gamma series: truncation converged at the default k_max") {
  // Modal weights decay like k^-2 (boundary truncation of the stationary
  // kernel), so the tail of the series shrinks like k_max^-3; the default
  // cutoff is chosen so doubling it moves Gamma_t by < 1e-6 relative.
  const Kernel kern = Kernel::gaussian(2.0);
  const GammaSeries g(kern, 20.0, 0.15);
  const GammaSeries g2(kern, 20.0, 0.15, 2 * g.k_max());
  for (double t : {1.0, 10.0}) CHECK(g(t) == doctest::Approx(g2(t)).epsilon(1e-6));
}

TEST_CASE("scheme solution is mean zero") {
  const Mesh m = generate_square_grid(1.0, 8);
  LinearSchemeConfig cfg;
  cfg.kernel = Kernel::gaussian(0.5);
  cfg.dt = 0.05;
  cfg.sigma = 0.5;
  const HeatScheme scheme(m, cfg);
  const int replicas = 400, steps = 20;
  const int dim = scheme.layout().reduced_dim;
  Vec mean = Vec::Zero(dim), m2 = Vec::Zero(dim);
  for (int r = 0; r < replicas; ++r) {
    NoiseSampler sampler = scheme.make_sampler(static_cast<std::uint64_t>(r));
    Vec u = Vec::Zero(dim);
    for (int s = 0; s < steps; ++s) u = scheme.step(u, sampler.sample_increment(cfg.dt));
    mean += u;
    m2 += u.cwiseProduct(u);
  }
  mean /= replicas;
  for (int i = 0; i < dim; ++i) {
    const double var = m2[i] / replicas - mean[i] * mean[i];
    const double se = std::sqrt(var / replicas);
    CHECK(std::abs(mean[i]) < 4.0 * se + 1e-12);
  }
}

TEST_CASE("Monte Carlo Gamma matches the separable series") {
  // Separable mode (1,1): the scheme bias at dt=0.005, N=16 is ~3%, well
  // under the 4-standard-error band of 500 replicas.
  const Mesh m = generate_square_grid(1.0, 16);
  LinearSchemeConfig cfg;
  cfg.kernel = Kernel::separable(1, 1, 1.0);
  cfg.sigma = 1.0;
  cfg.dt = 0.005;
  cfg.n_steps = 100;
  cfg.discretization = Discretization::P1;
  cfg.seed = 2;
  const GammaCurve curve = monte_carlo_gamma(m, cfg, 1.0, 500, 2);
  const std::size_t last = curve.times.size() - 1;
  CHECK(curve.times[last] == doctest::Approx(0.5));
  CHECK(std::abs(curve.mc[last] - curve.analytic[last]) < 4.0 * curve.stderr_[last]);
  // the whole curve stays in band too
  int inside = 0;
  for (std::size_t s = 1; s <= last; ++s)
    if (std::abs(curve.mc[s] - curve.analytic[s]) < 4.0 * curve.stderr_[s]) ++inside;
  CHECK(inside >= static_cast<int>(0.95 * last));
}

TEST_CASE("strong error study: rows and positive errors on a tiny config") {
  StrongErrorConfig cfg;
  cfg.spatial_n = {2, 4};
  cfg.spatial_dt = 0.01;
  cfg.temporal_dt = {0.2, 0.1};
  cfg.temporal_n = 4;
  cfg.replicas = 8;
  const StrongErrorResult res = strong_error_study(cfg, 2);
  REQUIRE(res.rows.size() == 4);
  for (const auto& row : res.rows) {
    CHECK(row.err > 0.0);
    CHECK(row.stderr_ >= 0.0);
  }
  CHECK(res.rows[0].spatial);
  CHECK_FALSE(res.rows[3].spatial);
  // spatial error decreases with refinement
  CHECK(res.rows[1].err < res.rows[0].err);
}

TEST_CASE("strong error study: temporal dts must nest") {
  StrongErrorConfig cfg;
  cfg.spatial_n = {};
  cfg.temporal_dt = {0.1, 0.07};
  cfg.temporal_n = 2;
  cfg.replicas = 2;
  CHECK_THROWS_AS(strong_error_study(cfg, 1), std::invalid_argument);
}
