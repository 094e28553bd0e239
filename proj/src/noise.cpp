#include "emsim/noise.hpp"

#include <cmath>

#include "emsim/quadrature.hpp"

namespace emsim {

Kernel Kernel::gaussian(double xi) {
  Kernel k;
  k.variant = Variant::Gaussian;
  k.xi = xi;
  return k;
}

Kernel Kernel::separable(int k0, int p0, double l) {
  Kernel k;
  k.variant = Variant::Separable;
  k.k0 = k0;
  k.p0 = p0;
  k.l = l;
  return k;
}

Kernel Kernel::scaled_gaussian(double a, double b, double xi) {
  Kernel k;
  k.variant = Variant::ScaledGaussian;
  k.amp = a;
  k.rate = b;
  k.xi = xi;
  return k;
}

double Kernel::separable_f(const Point2& x) const {
  return 2.0 * std::sin(k0 * M_PI * x[0] / l) * std::sin(p0 * M_PI * x[1] / l);
}

double Kernel::operator()(const Point2& x, const Point2& y) const {
  switch (variant) {
    case Variant::Gaussian: {
      const double r2 = (x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]);
      const double s = 1.0 / (4.0 * xi * xi);
      return s * std::exp(-M_PI * s * r2);
    }
    case Variant::Separable:
      return separable_f(x) * separable_f(y);
    case Variant::ScaledGaussian: {
      const double r2 = (x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]);
      return (amp / (xi * xi)) * std::exp(-(rate / (xi * xi)) * r2);
    }
  }
  return 0.0;
}

Eigen::MatrixXd covariance_matrix(const Kernel& kernel, const std::vector<Point2>& points) {
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel(points[i], points[j]);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

Eigen::MatrixXd cholesky_psd(const Eigen::MatrixXd& K) {
  const double scale = K.diagonal().maxCoeff();
  for (double jitter : {0.0, 1e-12, 1e-10, 1e-8}) {
    Eigen::MatrixXd Kj = K;
    if (jitter > 0.0) Kj.diagonal().array() += jitter * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(Kj);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw NotPsdError("cholesky_psd: matrix not positive semidefinite at any jitter level");
}

Vec NoiseSampler::sample_increment(double dt) {
  Vec g(factor_->rows());
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = rng_.normal();
  return std::sqrt(dt) * (*factor_ * g);
}

Eigen::MatrixXd noise_factor(const Kernel& kernel, const Mesh& mesh,
                             Discretization disc, const std::vector<Point2>& p1_sites) {
  if (disc == Discretization::P1) return cholesky_psd(covariance_matrix(kernel, p1_sites));
  if (disc == Discretization::P0)
    return cholesky_psd(covariance_matrix(kernel, barycenters(mesh)));

  // P0a: K_TS = (Q 1_T, 1_S)/(|T||S|), 3-point Gauss per triangle.
  const auto& rule = tri_rule_3();
  const std::size_t nt = mesh.triangle_count();
  std::vector<std::array<Point2, 3>> qp(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    for (int q = 0; q < 3; ++q) {
      const auto& r = rule[q];
      qp[t][q] = {r.l0 * mesh.nodes[tri[0]][0] + r.l1 * mesh.nodes[tri[1]][0] +
                      r.l2 * mesh.nodes[tri[2]][0],
                  r.l0 * mesh.nodes[tri[0]][1] + r.l1 * mesh.nodes[tri[1]][1] +
                      r.l2 * mesh.nodes[tri[2]][1]};
    }
  }
  Eigen::MatrixXd K(nt, nt);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t s = 0; s <= t; ++s) {
      double v = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          v += kernel(qp[t][a], qp[s][b]) / 9.0;  // mean of q over point pairs
      K(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) = v;
      K(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = v;
    }
  }
  return cholesky_psd(K);
}

Vec project_noise(const Vec& values, Discretization disc, const Mesh& mesh) {
  const std::size_t expected =
      disc == Discretization::P1 ? mesh.node_count() : mesh.triangle_count();
  if (static_cast<std::size_t>(values.size()) != expected)
    throw std::invalid_argument("project_noise: site values do not match discretization");
  return values;
}

SeparablePath exact_separable_path(int k0, int p0, double l,
                                   const std::vector<double>& times,
                                   std::uint64_t seed) {
  SeparablePath path;
  path.kernel = Kernel::separable(k0, p0, l);
  path.times = times;
  path.beta.resize(times.size());
  RngStream rng(seed, 0);
  double b = 0.0, t_prev = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double dt = times[i] - t_prev;
    if (dt > 0.0) b += std::sqrt(dt) * rng.normal();
    path.beta[i] = b;
    t_prev = times[i];
  }
  return path;
}

double mu_n_quadrature(int k0, int p0, double l, int n, int refine) {
  Mesh mesh = generate_square_grid(l, n);
  Kernel kern = Kernel::separable(k0, p0, l);
  auto g = barycenters(mesh);
  double mu = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const double fg = kern.separable_f(g[t]);
    mu += integrate_triangle(
        mesh, t,
        [&](const Point2& x) {
          const double d = kern.separable_f(x) - fg;
          return d * d;
        },
        tri_rule_7(), refine);
  }
  return mu;
}

MuNResult mu_n_experiment(int k0, int p0, double l, const std::vector<int>& n_list,
                          int samples, std::uint64_t seed) {
  MuNResult res;
  for (int n : n_list) {
    // ||W^Q_1 - W^{Q,N,0}_1||^2 = beta_1^2 * sum_T int_T (f - f(g_T))^2.
    const double q_n = mu_n_quadrature(k0, p0, l, n);
    RngStream rng(seed, static_cast<std::uint64_t>(n));
    double sum = 0.0, sum2 = 0.0;
    for (int p = 0; p < samples; ++p) {
      const double b = rng.normal();
      const double e = b * b * q_n;
      sum += e;
      sum2 += e * e;
    }
    const double mean = sum / samples;
    const double var = std::max(0.0, sum2 / samples - mean * mean);
    res.rows.push_back({n, mean, std::sqrt(var / samples)});
  }
  // Least-squares slope of log mu vs log N.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(res.rows.size());
  for (const auto& r : res.rows) {
    const double x = std::log(static_cast<double>(r.n)), y = std::log(r.mu_hat);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  res.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return res;
}

}  // namespace emsim
