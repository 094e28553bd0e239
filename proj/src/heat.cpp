#include "emsim/heat.hpp"

#include <cmath>

#include "emsim/parallel.hpp"
#include "emsim/quadrature.hpp"

namespace emsim {

namespace {

std::vector<Point2> all_nodes(const Mesh& mesh) { return mesh.nodes; }

// One-axis factor of the stationary kernel: gaussian kernels factorize as
// C(x-y) = c(x1-y1) c(x2-y2).
double axis_kernel(const Kernel& kernel, double r) {
  if (kernel.variant == Kernel::Variant::Gaussian) {
    const double s = 1.0 / (2.0 * kernel.xi);
    return s * std::exp(-M_PI * s * s * r * r);
  }
  const double s = std::sqrt(kernel.amp) / kernel.xi;
  return s * std::exp(-(kernel.rate / (kernel.xi * kernel.xi)) * r * r);
}

// I_k = int int c(s-t) e_k(s) e_k(t) ds dt on [0,l]^2 with
// e_k(s) = sqrt(2/l) sin(k pi s / l). The inner integral has the closed form
//   G_k(r) = int e_k(s) e_k(s-|r|) ds = (2/l) [ ((l-|r|)/l) cos(k pi r / l)
//            + (1/(k pi)) sin(k pi |r| / l) ] * (l/2),
// so I_k = 2 int_0^l c(r) G_k(r) dr: one composite Gauss-Legendre pass,
// refined until the relative change drops below 1e-8.
double axis_modal_integral(const Kernel& kernel, int k, double l) {
  auto overlap = [&](double r) {
    const double a = k * M_PI * r / l;
    return ((l - r) / l) * std::cos(a) + std::sin(a) / (k * M_PI);
  };
  auto value = [&](int panels) {
    return 2.0 *
           integrate_1d([&](double r) { return axis_kernel(kernel, r) * overlap(r); },
                        0.0, l, panels, 8);
  };
  // resolve both the oscillation (wavelength 2l/k) and the kernel width xi
  int panels = std::max({16, k, static_cast<int>(4.0 * l / kernel.xi)});
  double prev = value(panels);
  for (int it = 0; it < 6; ++it) {
    panels *= 2;
    const double next = value(panels);
    if (std::abs(next - prev) <= 1e-8 * std::max(std::abs(next), 1e-12)) return next;
    prev = next;
  }
  return prev;
}

}  // namespace

double modal_weight(const Kernel& kernel, int k, int p, double l) {
  if (kernel.variant == Kernel::Variant::Separable) {
    // Q phi = (phi, f) f with f = l * e_{k0 p0}; (Q e_kp, e_kp) = (f, e_kp)^2.
    return (k == kernel.k0 && p == kernel.p0) ? l * l : 0.0;
  }
  return axis_modal_integral(kernel, k, l) * axis_modal_integral(kernel, p, l);
}

GammaSeries::GammaSeries(const Kernel& kernel, double l, double sigma, int k_max)
    : l_(l), sigma_(sigma), k_max_(k_max), kernel_(kernel) {
  if (kernel.variant != Kernel::Variant::Separable) {
    axis_.resize(k_max_);
    for (int k = 1; k <= k_max_; ++k) axis_[k - 1] = axis_modal_integral(kernel, k, l);
  }
}

double GammaSeries::weight(int k, int p) const {
  if (kernel_.variant == Kernel::Variant::Separable)
    return modal_weight(kernel_, k, p, l_);
  return axis_[k - 1] * axis_[p - 1];
}

double GammaSeries::lambda(int k, int p) const {
  return M_PI * M_PI / (l_ * l_) * (static_cast<double>(k) * k + static_cast<double>(p) * p);
}

double GammaSeries::operator()(double t) const {
  if (t <= 0.0) return 0.0;
  if (kernel_.variant == Kernel::Variant::Separable) {
    const double lam = lambda(kernel_.k0, kernel_.p0);
    return sigma_ * sigma_ * weight(kernel_.k0, kernel_.p0) *
           (1.0 - std::exp(-2.0 * lam * t)) / (2.0 * lam);
  }
  double total = 0.0;
  for (int k = 1; k <= k_max_; ++k) {
    for (int p = 1; p <= k_max_; ++p) {
      const double lam = lambda(k, p);
      total += weight(k, p) * (1.0 - std::exp(-2.0 * lam * t)) / (2.0 * lam);
    }
  }
  return sigma_ * sigma_ * total;
}

HeatScheme::HeatScheme(const Mesh& mesh, const LinearSchemeConfig& cfg)
    : mesh_(&mesh), cfg_(cfg), layout_(DofLayout::dirichlet(mesh)) {
  mass_red_ = assemble_mass(mesh, layout_);
  stiff_red_ = assemble_stiffness(mesh, layout_);
  if (cfg.discretization == Discretization::P1)
    mass_full_ = assemble_mass(mesh, DofLayout::free(mesh));
  else
    p0_load_ = assemble_p0_load(mesh, layout_);
  SpMat system = mass_red_ / cfg.dt;
  system += stiff_red_;
  solver_.compute(system);
  if (solver_.info() != Eigen::Success)
    throw std::runtime_error("HeatScheme: SPD factorization failed");
  factor_ = std::make_shared<const Eigen::MatrixXd>(
      noise_factor(cfg.kernel, mesh, cfg.discretization, all_nodes(mesh)));
}

Vec HeatScheme::noise_load(const Vec& site_values) const {
  if (cfg_.discretization == Discretization::P1)
    return layout_.restrict_nodal(mass_full_ * site_values);
  return p0_load_ * site_values;
}

Vec HeatScheme::step(const Vec& u, const Vec& site_increment) const {
  Vec rhs = (mass_red_ * u) / cfg_.dt + (cfg_.sigma / cfg_.dt) * noise_load(site_increment);
  Vec out = solver_.solve(rhs);
  if (solver_.info() != Eigen::Success)
    throw std::runtime_error("HeatScheme::step: solve failed");
  return out;
}

NoiseSampler HeatScheme::make_sampler(std::uint64_t replica) const {
  return NoiseSampler(cfg_.discretization, factor_, cfg_.seed, replica);
}

GammaCurve monte_carlo_gamma(const Mesh& mesh, const LinearSchemeConfig& cfg,
                             double square_side, int replicas, int threads) {
  HeatScheme scheme(mesh, cfg);
  const int n = cfg.n_steps;
  std::vector<std::vector<double>> sq(replicas, std::vector<double>(n + 1, 0.0));
  parallel_for(replicas, threads, [&](std::size_t r) {
    NoiseSampler sampler = scheme.make_sampler(r);
    Vec u = Vec::Zero(scheme.layout().reduced_dim);
    for (int s = 1; s <= n; ++s) {
      u = scheme.step(u, sampler.sample_increment(cfg.dt));
      sq[r][s] = u.dot(scheme.mass() * u);
    }
  });

  GammaSeries gamma(cfg.kernel, square_side, cfg.sigma);
  GammaCurve curve;
  curve.times.resize(n + 1);
  curve.analytic.resize(n + 1);
  curve.mc.resize(n + 1);
  curve.stderr_.resize(n + 1);
  for (int s = 0; s <= n; ++s) {
    curve.times[s] = s * cfg.dt;
    curve.analytic[s] = gamma(curve.times[s]);
    double mean = 0.0, m2 = 0.0;
    for (int r = 0; r < replicas; ++r) mean += sq[r][s];
    mean /= replicas;
    for (int r = 0; r < replicas; ++r) m2 += (sq[r][s] - mean) * (sq[r][s] - mean);
    curve.mc[s] = mean;
    curve.stderr_[s] = replicas > 1 ? std::sqrt(m2 / replicas / (replicas - 1)) : 0.0;
  }
  return curve;
}

namespace {

struct LevelResult {
  double err = 0.0;
  double stderr_ = 0.0;
};

LevelResult strong_error_level(const StrongErrorConfig& cfg, int n, double dt,
                               int threads) {
  const Mesh mesh = generate_square_grid(cfg.l, n);
  const DofLayout layout = DofLayout::dirichlet(mesh);
  const SpMat mass = assemble_mass(mesh, layout);
  const SpMat stiff = assemble_stiffness(mesh, layout);
  SpMat system = mass / dt;
  system += stiff;
  Eigen::SimplicialLDLT<SpMat> solver(system);
  const Kernel kern = Kernel::separable(cfg.k0, cfg.p0, cfg.l);

  // The scheme is driven by the P0-discretized noise (barycenter values of
  // f); its O(h) projection error is what sets the spatial rate.
  const auto bary = barycenters(mesh);
  Vec f_bary(static_cast<Eigen::Index>(bary.size()));
  for (std::size_t t = 0; t < bary.size(); ++t)
    f_bary[static_cast<Eigen::Index>(t)] = kern.separable_f(bary[t]);
  const SpMat p0_load = assemble_p0_load(mesh, layout);
  const Vec load_f = p0_load * f_bary;

  Vec f_full(static_cast<Eigen::Index>(mesh.node_count()));
  for (std::size_t i = 0; i < mesh.node_count(); ++i)
    f_full[static_cast<Eigen::Index>(i)] = kern.separable_f(mesh.nodes[i]);
  const Vec f_red = layout.restrict_nodal(f_full);

  const double lam = M_PI * M_PI / (cfg.l * cfg.l) *
                     (static_cast<double>(cfg.k0) * cfg.k0 + static_cast<double>(cfg.p0) * cfg.p0);
  const double decay = std::exp(-lam * dt);
  const double exact_coef = cfg.sigma * std::sqrt((1.0 - decay * decay) / (2.0 * lam));
  const int n_steps = static_cast<int>(std::llround(cfg.t_end / dt));

  std::vector<double> err2(cfg.replicas, 0.0);
  parallel_for(cfg.replicas, threads, [&](std::size_t r) {
    RngStream rng(cfg.seed, r);
    Vec u = Vec::Zero(layout.reduced_dim);
    double x = 0.0;
    for (int s = 0; s < n_steps; ++s) {
      const double g = rng.normal();
      // scheme noise: (sigma/dt) (dbeta f, psi_i) with dbeta = sqrt(dt) g
      Vec rhs = (mass * u) / dt + (cfg.sigma / std::sqrt(dt)) * g * load_f;
      u = solver.solve(rhs);
      // exact Ornstein-Uhlenbeck transition from the same increment
      x = decay * x + exact_coef * g;
    }
    const Vec e = u - x * f_red;
    err2[r] = e.dot(mass * e);
  });

  double mean = 0.0, m2 = 0.0;
  for (double v : err2) mean += v;
  mean /= cfg.replicas;
  for (double v : err2) m2 += (v - mean) * (v - mean);
  const double se2 = cfg.replicas > 1 ? std::sqrt(m2 / cfg.replicas / (cfg.replicas - 1)) : 0.0;
  LevelResult res;
  res.err = std::sqrt(mean);
  res.stderr_ = res.err > 0.0 ? se2 / (2.0 * res.err) : 0.0;
  return res;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

StrongErrorResult strong_error_study(const StrongErrorConfig& cfg, int threads) {
  StrongErrorResult result;
  std::vector<double> lx, ly;
  for (int n : cfg.spatial_n) {
    LevelResult lev = strong_error_level(cfg, n, cfg.spatial_dt, threads);
    StrongErrorRow row;
    row.spatial = true;
    row.n = n;
    row.dt = cfg.spatial_dt;
    row.h = std::sqrt(2.0) * cfg.l / n;
    row.err = lev.err;
    row.stderr_ = lev.stderr_;
    result.rows.push_back(row);
    lx.push_back(std::log(row.h));
    ly.push_back(std::log(row.err));
  }
  result.spatial_slope = fit_slope(lx, ly);

  if (cfg.temporal_dt.empty()) return result;

  // Temporal levels share one Brownian path per replica (fine increments
  // aggregated to the coarser grids), which removes most of the Monte Carlo
  // noise from the fitted slope.
  const Mesh mesh = generate_square_grid(cfg.l, cfg.temporal_n);
  const DofLayout layout = DofLayout::dirichlet(mesh);
  const SpMat mass = assemble_mass(mesh, layout);
  const SpMat stiff = assemble_stiffness(mesh, layout);
  const Kernel kern = Kernel::separable(cfg.k0, cfg.p0, cfg.l);

  const auto bary = barycenters(mesh);
  Vec f_bary(static_cast<Eigen::Index>(bary.size()));
  for (std::size_t t = 0; t < bary.size(); ++t)
    f_bary[static_cast<Eigen::Index>(t)] = kern.separable_f(bary[t]);
  const Vec load_f = assemble_p0_load(mesh, layout) * f_bary;
  Vec f_full(static_cast<Eigen::Index>(mesh.node_count()));
  for (std::size_t i = 0; i < mesh.node_count(); ++i)
    f_full[static_cast<Eigen::Index>(i)] = kern.separable_f(mesh.nodes[i]);
  const Vec f_red = layout.restrict_nodal(f_full);
  const double lam = M_PI * M_PI / (cfg.l * cfg.l) *
                     (static_cast<double>(cfg.k0) * cfg.k0 + static_cast<double>(cfg.p0) * cfg.p0);

  double dt_min = cfg.temporal_dt.empty() ? 0.0 : cfg.temporal_dt[0];
  for (double dt : cfg.temporal_dt) dt_min = std::min(dt_min, dt);
  const std::size_t levels = cfg.temporal_dt.size();
  std::vector<int> strides(levels);
  std::vector<Eigen::SimplicialLDLT<SpMat>> solvers(levels);
  for (std::size_t k = 0; k < levels; ++k) {
    const double ratio = cfg.temporal_dt[k] / dt_min;
    strides[k] = static_cast<int>(std::llround(ratio));
    if (std::abs(ratio - strides[k]) > 1e-9)
      throw std::invalid_argument("strong_error_study: temporal dts must be multiples of the finest");
    SpMat system = mass / cfg.temporal_dt[k];
    system += stiff;
    solvers[k].compute(system);
  }
  const int n_fine = static_cast<int>(std::llround(cfg.t_end / dt_min));

  std::vector<std::vector<double>> err2(levels, std::vector<double>(cfg.replicas, 0.0));
  parallel_for(cfg.replicas, threads, [&](std::size_t r) {
    RngStream rng(cfg.seed, r);
    std::vector<double> dbeta_fine(n_fine);
    for (int j = 0; j < n_fine; ++j) dbeta_fine[j] = std::sqrt(dt_min) * rng.normal();
    for (std::size_t k = 0; k < levels; ++k) {
      const double dt = cfg.temporal_dt[k];
      const double decay = std::exp(-lam * dt);
      const double exact_coef = cfg.sigma * std::sqrt((1.0 - decay * decay) / (2.0 * lam));
      const int n_steps = n_fine / strides[k];
      Vec u = Vec::Zero(layout.reduced_dim);
      double x = 0.0;
      for (int s = 0; s < n_steps; ++s) {
        double dbeta = 0.0;
        for (int j = 0; j < strides[k]; ++j) dbeta += dbeta_fine[s * strides[k] + j];
        const double g = dbeta / std::sqrt(dt);
        Vec rhs = (mass * u) / dt + (cfg.sigma / std::sqrt(dt)) * g * load_f;
        u = solvers[k].solve(rhs);
        x = decay * x + exact_coef * g;
      }
      const Vec e = u - x * f_red;
      err2[k][r] = e.dot(mass * e);
    }
  });

  lx.clear();
  ly.clear();
  for (std::size_t k = 0; k < levels; ++k) {
    double mean = 0.0, m2 = 0.0;
    for (double v : err2[k]) mean += v;
    mean /= cfg.replicas;
    for (double v : err2[k]) m2 += (v - mean) * (v - mean);
    const double se2 =
        cfg.replicas > 1 ? std::sqrt(m2 / cfg.replicas / (cfg.replicas - 1)) : 0.0;
    StrongErrorRow row;
    row.spatial = false;
    row.n = cfg.temporal_n;
    row.dt = cfg.temporal_dt[k];
    row.h = std::sqrt(2.0) * cfg.l / cfg.temporal_n;
    row.err = std::sqrt(mean);
    row.stderr_ = row.err > 0.0 ? se2 / (2.0 * row.err) : 0.0;
    result.rows.push_back(row);
    lx.push_back(std::log(row.dt));
    ly.push_back(std::log(row.err));
  }
  result.temporal_slope = fit_slope(lx, ly);
  return result;
}

}  // namespace emsim
