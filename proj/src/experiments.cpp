#include "emsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include "emsim/parallel.hpp"

namespace emsim {

const char* wave_label_name(WaveLabel label) {
  switch (label) {
    case WaveLabel::NW: return "NW";
    case WaveLabel::W: return "W";
    case WaveLabel::RW: return "RW";
    case WaveLabel::DW: return "DW";
  }
  return "?";
}

WaveClass classify_run(const RunRecord& record, const ClassifyPolicy& policy) {
  if (record.times.size() < 2)
    throw std::invalid_argument("classify_run: record too short");
  const double t_obs = record.times.back();
  const double t_sustain = policy.t_sustain_frac * t_obs;

  double max_fraction = 0.0;
  double last_active = 0.0;
  for (std::size_t i = 0; i < record.times.size(); ++i) {
    max_fraction = std::max(max_fraction, record.activated_fraction[i]);
    if (record.activated_fraction[i] > policy.f_quiet) last_active = record.times[i];
  }

  WaveClass out;
  if (max_fraction <= policy.f_wave) {
    out.label = WaveLabel::NW;
    out.evidence = "max fraction " + std::to_string(max_fraction) + " <= f_wave";
    return out;
  }
  if (last_active < t_sustain) {
    out.label = WaveLabel::W;
    out.evidence = "activity died at t=" + std::to_string(last_active) +
                   " before T_sustain=" + std::to_string(t_sustain);
    return out;
  }
  int late = 0, crowded = 0;
  for (std::size_t i = 0; i < record.times.size(); ++i) {
    if (record.times[i] < t_sustain) continue;
    ++late;
    if (record.component_count[i] > policy.c_max) ++crowded;
  }
  if (late > 0 && 2 * crowded >= late) {
    out.label = WaveLabel::DW;
    out.evidence = std::to_string(crowded) + "/" + std::to_string(late) +
                   " late frames exceed c_max";
  } else {
    out.label = WaveLabel::RW;
    out.evidence = "sustained past T_sustain with <= c_max components";
  }
  return out;
}

int excited_components(const Vec& u_full, const Mesh& mesh, double threshold) {
  const std::size_t nt = mesh.triangle_count();
  std::vector<char> hot(nt, 0);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    hot[t] = u_full[tri[0]] > threshold && u_full[tri[1]] > threshold &&
             u_full[tri[2]] > threshold;
  }

  std::vector<int> parent(nt);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  std::map<std::pair<int, int>, int> edge_owner;
  for (std::size_t t = 0; t < nt; ++t) {
    if (!hot[t]) continue;
    const auto& tri = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      const int a = std::min(tri[e], tri[(e + 1) % 3]);
      const int b = std::max(tri[e], tri[(e + 1) % 3]);
      auto [it, fresh] = edge_owner.try_emplace({a, b}, static_cast<int>(t));
      if (!fresh) parent[find(static_cast<int>(t))] = find(it->second);
    }
  }

  int count = 0;
  for (std::size_t t = 0; t < nt; ++t)
    if (hot[t] && find(static_cast<int>(t)) == static_cast<int>(t)) ++count;
  return count;
}

int nucleation_count(const RunRecord& record) {
  int total = 0, prev = 0;
  for (int c : record.component_count) {
    total += std::max(0, c - prev);
    prev = c;
  }
  return total;
}

double ModelParams::sigma() const {
  switch (kind) {
    case ModelKind::Fhn: return fhn.sigma;
    case ModelKind::Barkley: return barkley.sigma;
    case ModelKind::Ms: return ms.sigma;
  }
  return 0.0;
}

void ModelParams::set_sigma(double s) {
  fhn.sigma = barkley.sigma = ms.sigma = s;
}

void ModelParams::set_epsilon(double e) {
  fhn.epsilon = barkley.epsilon = e;
}

RunRecord run_model(const Mesh& mesh, const ModelParams& params, const RunConfig& cfg,
                    std::uint64_t replica, const FemOperators* prebuilt,
                    const std::shared_ptr<const Eigen::MatrixXd>* factor,
                    const FrameCallback& on_frame) {
  FemOperators local;
  const FemOperators* ops = prebuilt;
  if (!ops) {
    local = FemOperators::build(mesh, cfg.bc, cfg.discretization, cfg.period);
    ops = &local;
  }

  const double sig = params.sigma();
  std::shared_ptr<const Eigen::MatrixXd> fac;
  std::optional<NoiseSampler> sampler;
  if (sig > 0.0) {
    fac = factor ? *factor
                 : std::make_shared<const Eigen::MatrixXd>(noise_factor(
                       cfg.kernel, mesh, cfg.discretization, ops->noise_sites()));
    sampler.emplace(cfg.discretization, fac, cfg.seed, replica);
  }

  std::optional<FhnStepper> fhn;
  std::optional<BarkleyStepper> barkley;
  std::optional<MsStepper> ms;
  switch (params.kind) {
    case ModelKind::Fhn:
      fhn.emplace(*ops, params.fhn, cfg.dt, params.fhn_v_over_eps);
      break;
    case ModelKind::Barkley:
      barkley.emplace(*ops, params.barkley, cfg.dt);
      break;
    case ModelKind::Ms:
      ms.emplace(*ops, params.ms, cfg.dt);
      break;
  }

  ModelState state;
  state.u = Vec::Zero(ops->layout.reduced_dim);
  state.v = params.kind == ModelKind::Ms
                ? Vec::Ones(ops->layout.reduced_dim)
                : Vec::Zero(ops->layout.reduced_dim);
  state.t = 0.0;

  RunRecord record;
  record.seed = cfg.seed;
  record.replica = replica;
  const int n_steps = static_cast<int>(std::llround(cfg.t_end / cfg.dt));
  const int every = std::max(1, cfg.record_every);

  auto record_frame = [&](int step) {
    const Vec u_full = ops->layout.expand(state.u);
    std::size_t act = 0;
    for (Eigen::Index i = 0; i < u_full.size(); ++i)
      if (u_full[i] >= cfg.policy.u_act) ++act;
    record.times.push_back(step * cfg.dt);
    record.activated_fraction.push_back(static_cast<double>(act) / u_full.size());
    record.component_count.push_back(excited_components(u_full, mesh, cfg.policy.u_act));
    if (on_frame) on_frame(step, u_full, ops->layout.expand(state.v));
  };

  record_frame(0);
  Vec w;
  for (int s = 1; s <= n_steps; ++s) {
    if (sampler) w = sampler->sample_increment(1.0);
    switch (params.kind) {
      case ModelKind::Fhn: state = fhn->step(state, w); break;
      case ModelKind::Barkley: state = barkley->step(state, w); break;
      case ModelKind::Ms: state = ms->step(state, w); break;
    }
    if (s % every == 0 || s == n_steps) record_frame(s);
  }
  return record;
}

namespace {

void apply_axis(ModelParams& params, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::Sigma:
      params.set_sigma(value);
      break;
    case SweepAxis::Epsilon:
      if (params.kind == ModelKind::Ms)
        throw std::invalid_argument("sweep: epsilon axis not valid for ms");
      params.set_epsilon(value);
      break;
    case SweepAxis::TauClose:
      if (params.kind != ModelKind::Ms)
        throw std::invalid_argument("sweep: tau_close axis only valid for ms");
      params.ms.tau_close = value;
      break;
  }
}

const char* axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Sigma: return "sigma";
    case SweepAxis::Epsilon: return "epsilon";
    case SweepAxis::TauClose: return "tau_close";
  }
  return "?";
}

}  // namespace

SweepResult sweep(const Mesh& mesh, const ModelParams& base, const RunConfig& run_cfg,
                  const SweepConfig& sweep_cfg, int threads) {
  const std::size_t n1 = sweep_cfg.axis1_values.size();
  const std::size_t n2 = sweep_cfg.axis2_values.size();
  const std::size_t per_cell = static_cast<std::size_t>(sweep_cfg.seeds_per_cell);
  const std::size_t total = n1 * n2 * per_cell;

  const FemOperators ops =
      FemOperators::build(mesh, run_cfg.bc, run_cfg.discretization, run_cfg.period);
  const auto factor = std::make_shared<const Eigen::MatrixXd>(noise_factor(
      run_cfg.kernel, mesh, run_cfg.discretization, ops.noise_sites()));

  SweepResult result;
  result.axis1_name = axis_name(sweep_cfg.axis1);
  result.axis2_name = axis_name(sweep_cfg.axis2);
  result.runs.resize(total);

  parallel_for(total, threads, [&](std::size_t task) {
    const std::size_t k = task % per_cell;
    const std::size_t j = (task / per_cell) % n2;
    const std::size_t i = task / (per_cell * n2);

    SweepCellRun& row = result.runs[task];
    row.i = i;
    row.j = j;
    row.axis1 = sweep_cfg.axis1_values[i];
    row.axis2 = sweep_cfg.axis2_values[j];
    row.seed_replica = task;  // replica index is the task id: order-independent

    ModelParams params = base;
    try {
      apply_axis(params, sweep_cfg.axis1, row.axis1);
      apply_axis(params, sweep_cfg.axis2, row.axis2);
      const RunRecord rec = run_model(mesh, params, run_cfg, task, &ops, &factor);
      const WaveClass wc = classify_run(rec, run_cfg.policy);
      row.label = wc.label;
      row.nucleations = nucleation_count(rec);
      const double t_sustain = run_cfg.policy.t_sustain_frac * rec.times.back();
      for (std::size_t f = 0; f < rec.times.size(); ++f) {
        row.max_fraction = std::max(row.max_fraction, rec.activated_fraction[f]);
        if (rec.activated_fraction[f] > run_cfg.policy.f_quiet)
          row.sustain_time = rec.times[f];
        if (rec.times[f] >= t_sustain)
          row.components_late = std::max(row.components_late, rec.component_count[f]);
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });

  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      SweepCellSummary cell;
      cell.i = i;
      cell.j = j;
      cell.axis1 = sweep_cfg.axis1_values[i];
      cell.axis2 = sweep_cfg.axis2_values[j];
      for (std::size_t k = 0; k < per_cell; ++k) {
        const auto& row = result.runs[(i * n2 + j) * per_cell + k];
        if (row.error.empty()) ++cell.histogram[static_cast<int>(row.label)];
      }
      int best = 0;
      for (int s = 1; s < 4; ++s)
        if (cell.histogram[s] > cell.histogram[best]) best = s;
      cell.modal = static_cast<WaveLabel>(best);
      cell.transition_flag = cell.histogram[2] > 0 && cell.histogram[3] > 0;
      result.cells.push_back(cell);
    }
  }
  return result;
}

SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 3)
    throw std::invalid_argument("spearman: need matched samples, n >= 3");

  auto ranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (i + j) + 1.0;  // average rank for ties
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };

  const auto rx = ranks(x), ry = ranks(y);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  SpearmanResult res;
  if (sxx == 0.0 || syy == 0.0) return res;  // constant input: no evidence
  res.rho = sxy / std::sqrt(sxx * syy);
  const double z = res.rho * std::sqrt(static_cast<double>(n - 1));
  res.p_one_sided = 0.5 * std::erfc(z / std::sqrt(2.0));
  return res;
}

}  // namespace emsim
