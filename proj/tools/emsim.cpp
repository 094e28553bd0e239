#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "emsim/config.hpp"
#include "emsim/experiments.hpp"
#include "emsim/heat.hpp"
#include "emsim/io.hpp"
#include "emsim/models.hpp"
#include "emsim/parallel.hpp"

namespace fs = std::filesystem;
using namespace emsim;

namespace {

const std::set<std::string> kMeshKeys = {"mesh.source", "mesh.square_l", "mesh.square_n"};
const std::set<std::string> kKernelKeys = {"kernel.type", "kernel.xi", "kernel.k0",
                                           "kernel.p0", "kernel.a", "kernel.b"};
const std::set<std::string> kNoiseKeys = {"noise.sigma", "noise.discretization"};
const std::set<std::string> kTimeKeys = {"time.dt", "time.t_end"};
const std::set<std::string> kOutputKeys = {"output.dir", "output.snapshot_every",
                                           "output.record_every", "output.format"};
const std::set<std::string> kClassifyKeys = {"classify.u_act", "classify.f_wave",
                                             "classify.f_quiet", "classify.t_sustain_frac",
                                             "classify.c_max"};
const std::set<std::string> kModelKeys = {
    "model.bc",      "model.kappa",    "model.epsilon",   "model.a",
    "model.b",       "model.nu",       "model.tau_in",    "model.tau_out",
    "model.tau_open","model.tau_close","model.u_gate",    "model.fhn_v_over_eps"};
const std::set<std::string> kTopKeys = {"seed", "threads"};

std::set<std::string> merge(std::initializer_list<const std::set<std::string>*> sets) {
  std::set<std::string> out;
  for (const auto* s : sets) out.insert(s->begin(), s->end());
  return out;
}

Mesh mesh_from_config(const Config& cfg) {
  if (cfg.has("mesh.source")) {
    const std::string path = cfg.get_string("mesh.source");
    std::ifstream in(path);
    if (!in) throw ConfigError("mesh.source: cannot open " + path);
    return import_mesh(in);
  }
  if (!cfg.has("mesh.square_l") || !cfg.has("mesh.square_n"))
    throw ConfigError("need mesh.source or mesh.square_l + mesh.square_n");
  return generate_square_grid(cfg.get_double("mesh.square_l"), cfg.get_int("mesh.square_n"));
}

double mesh_side(const Config& cfg) { return cfg.get_double("mesh.square_l", 0.0); }

Kernel kernel_from_config(const Config& cfg, double default_l) {
  const std::string type = cfg.get_string("kernel.type", "gaussian");
  if (type == "gaussian") return Kernel::gaussian(cfg.get_double("kernel.xi", 2.0));
  if (type == "separable")
    return Kernel::separable(cfg.get_int("kernel.k0", 1), cfg.get_int("kernel.p0", 1),
                             default_l > 0 ? default_l : 1.0);
  if (type == "scaled_gaussian")
    return Kernel::scaled_gaussian(cfg.get_double("kernel.a", 1.0),
                                   cfg.get_double("kernel.b", 1.0),
                                   cfg.get_double("kernel.xi", 2.0));
  throw ConfigError("kernel.type: unknown kernel '" + type + "'");
}

Discretization discretization_from_config(const Config& cfg) {
  const std::string d = cfg.get_string("noise.discretization", "p1");
  if (d == "p0") return Discretization::P0;
  if (d == "p0a") return Discretization::P0a;
  if (d == "p1") return Discretization::P1;
  throw ConfigError("noise.discretization: expected p0, p0a or p1, got '" + d + "'");
}

ClassifyPolicy policy_from_config(const Config& cfg) {
  ClassifyPolicy p;
  p.u_act = cfg.get_double("classify.u_act", p.u_act);
  p.f_wave = cfg.get_double("classify.f_wave", p.f_wave);
  p.f_quiet = cfg.get_double("classify.f_quiet", p.f_quiet);
  p.t_sustain_frac = cfg.get_double("classify.t_sustain_frac", p.t_sustain_frac);
  p.c_max = cfg.get_int("classify.c_max", p.c_max);
  return p;
}

ModelParams model_from_config(const Config& cfg, const std::string& model) {
  ModelParams mp;
  const double sigma = cfg.get_double("noise.sigma", 0.0);
  if (model == "fhn") {
    mp.kind = ModelKind::Fhn;
    mp.fhn.kappa = cfg.get_double("model.kappa", mp.fhn.kappa);
    mp.fhn.epsilon = cfg.get_double("model.epsilon", mp.fhn.epsilon);
    mp.fhn.a = cfg.get_double("model.a", mp.fhn.a);
    mp.fhn_v_over_eps = cfg.get_bool("model.fhn_v_over_eps", false);
  } else if (model == "barkley") {
    mp.kind = ModelKind::Barkley;
    mp.barkley.nu = cfg.get_double("model.nu", mp.barkley.nu);
    mp.barkley.epsilon = cfg.get_double("model.epsilon", mp.barkley.epsilon);
    mp.barkley.a = cfg.get_double("model.a", mp.barkley.a);
    mp.barkley.b = cfg.get_double("model.b", mp.barkley.b);
  } else if (model == "ms") {
    mp.kind = ModelKind::Ms;
    mp.ms.nu = cfg.get_double("model.nu", mp.ms.nu);
    mp.ms.tau_in = cfg.get_double("model.tau_in", mp.ms.tau_in);
    mp.ms.tau_out = cfg.get_double("model.tau_out", mp.ms.tau_out);
    mp.ms.tau_open = cfg.get_double("model.tau_open", mp.ms.tau_open);
    mp.ms.tau_close = cfg.get_double("model.tau_close", mp.ms.tau_close);
    mp.ms.u_gate = cfg.get_double("model.u_gate", mp.ms.u_gate);
  } else {
    throw ConfigError("unknown model '" + model + "' (expected fhn, barkley or ms)");
  }
  mp.set_sigma(sigma);
  return mp;
}

BcKind bc_from_config(const Config& cfg, const std::string& model) {
  const std::string def = model == "fhn" ? "neumann" : "periodic";
  const std::string bc = cfg.get_string("model.bc", def);
  if (bc == "neumann") return BcKind::Free;
  if (bc == "periodic") return BcKind::Periodic;
  throw ConfigError("model.bc: expected neumann or periodic, got '" + bc + "'");
}

RunConfig run_config(const Config& cfg, const std::string& model, double side) {
  RunConfig rc;
  rc.dt = cfg.get_double("time.dt", rc.dt);
  rc.t_end = cfg.get_double("time.t_end", rc.t_end);
  rc.bc = bc_from_config(cfg, model);
  rc.period = side;
  rc.kernel = kernel_from_config(cfg, side);
  rc.discretization = discretization_from_config(cfg);
  rc.seed = cfg.get_u64("seed", 0);
  rc.record_every = cfg.get_int("output.record_every", 1);
  rc.policy = policy_from_config(cfg);
  return rc;
}

int resolve_threads(int flag_threads, const Config& cfg) {
  if (flag_threads > 0) return flag_threads;
  return cfg.get_int("threads", default_threads());
}

std::string out_dir(const Config& cfg) {
  const std::string dir = cfg.get_string("output.dir", "out");
  fs::create_directories(dir);
  return dir;
}

int cmd_mesh_info(const std::string& file, const std::vector<double>& square) {
  Mesh mesh;
  if (!square.empty()) {
    if (square.size() != 2) throw ConfigError("--square needs l and N");
    mesh = generate_square_grid(square[0], static_cast<int>(square[1]));
  } else if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open mesh file: " + file);
    mesh = import_mesh(in);
  } else {
    throw ConfigError("mesh-info needs a mesh file or --square l N");
  }
  std::printf("%zu nodes, %zu triangles\n", mesh.node_count(), mesh.triangle_count());
  std::printf("h = %s\n", format_double(mesh.h).c_str());
  std::printf("rho = %s\n", format_double(mesh.rho).c_str());
  return 0;
}

int cmd_noise_error(const std::vector<int>& n_list, int samples, std::uint64_t seed,
                    int k0, int p0, double l, const std::string& out) {
  const MuNResult res = mu_n_experiment(k0, p0, l, n_list, samples, seed);
  std::printf("%8s %16s %16s\n", "N", "mu_hat", "stderr");
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : res.rows) {
    std::printf("%8d %16.8e %16.8e\n", r.n, r.mu_hat, r.stderr_);
    rows.push_back({std::to_string(r.n), format_double(r.mu_hat), format_double(r.stderr_)});
  }
  std::printf("log-log slope = %.4f\n", res.slope);
  if (!out.empty()) {
    write_csv(out, {"N", "mu_hat", "stderr"}, rows);
    std::printf("wrote %s\n", out.c_str());
  }
  return 0;
}

int cmd_heat_validate(const std::string& config_path, int flag_threads) {
  const Config cfg = Config::parse_file(config_path);
  auto allowed = merge({&kMeshKeys, &kKernelKeys, &kNoiseKeys, &kTimeKeys, &kOutputKeys, &kTopKeys});
  allowed.insert("mc.replicas");
  cfg.require_known(allowed);

  const Mesh mesh = mesh_from_config(cfg);
  const double side = mesh_side(cfg);
  LinearSchemeConfig sc;
  sc.sigma = cfg.get_double("noise.sigma", sc.sigma);
  sc.dt = cfg.get_double("time.dt", sc.dt);
  sc.n_steps = static_cast<int>(std::llround(cfg.get_double("time.t_end", 10.0) / sc.dt));
  sc.kernel = kernel_from_config(cfg, side);
  sc.discretization = discretization_from_config(cfg);
  sc.seed = cfg.get_u64("seed", 0);
  const int replicas = cfg.get_int("mc.replicas", 40);
  const int threads = resolve_threads(flag_threads, cfg);

  const GammaCurve curve = monte_carlo_gamma(mesh, sc, side, replicas, threads);

  const std::string dir = out_dir(cfg);
  std::vector<std::vector<std::string>> rows;
  const double band = std::sqrt(sc.dt) + mesh.h;
  int covered = 0;
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    rows.push_back({format_double(curve.times[i]), format_double(curve.analytic[i]),
                    format_double(curve.mc[i]), format_double(curve.stderr_[i])});
    if (std::abs(curve.mc[i] - curve.analytic[i]) <= band) ++covered;
  }
  const std::string csv = dir + "/gamma.csv";
  write_csv(csv, {"time", "analytic", "mc", "stderr"}, rows);
  Manifest manifest(dir);
  manifest.add(csv);
  manifest.finish();
  std::printf("band sqrt(dt)+h = %.6f, coverage %d/%zu\n", band, covered, curve.times.size());
  std::printf("wrote %s\n", csv.c_str());
  return 0;
}

int cmd_strong_order(const std::string& config_path, int flag_threads) {
  const Config cfg = Config::parse_file(config_path);
  std::set<std::string> allowed = {"strong.k0",        "strong.p0",
                                   "strong.l",         "strong.sigma",
                                   "strong.t_end",     "strong.spatial_n",
                                   "strong.spatial_dt","strong.temporal_dt",
                                   "strong.temporal_n","strong.replicas",
                                   "output.dir",       "seed",
                                   "threads"};
  cfg.require_known(allowed);

  StrongErrorConfig sc;
  sc.k0 = cfg.get_int("strong.k0", sc.k0);
  sc.p0 = cfg.get_int("strong.p0", sc.p0);
  sc.l = cfg.get_double("strong.l", sc.l);
  sc.sigma = cfg.get_double("strong.sigma", sc.sigma);
  sc.t_end = cfg.get_double("strong.t_end", sc.t_end);
  if (cfg.has("strong.spatial_n")) sc.spatial_n = cfg.get_int_list("strong.spatial_n");
  sc.spatial_dt = cfg.get_double("strong.spatial_dt", sc.spatial_dt);
  if (cfg.has("strong.temporal_dt")) sc.temporal_dt = cfg.get_list("strong.temporal_dt");
  sc.temporal_n = cfg.get_int("strong.temporal_n", sc.temporal_n);
  sc.replicas = cfg.get_int("strong.replicas", sc.replicas);
  sc.seed = cfg.get_u64("seed", 0);
  const int threads = resolve_threads(flag_threads, cfg);

  const StrongErrorResult res = strong_error_study(sc, threads);

  std::vector<std::vector<std::string>> rows;
  std::printf("%8s %6s %12s %12s %14s %14s\n", "kind", "N", "dt", "h", "err", "stderr");
  for (const auto& r : res.rows) {
    std::printf("%8s %6d %12.5g %12.5g %14.6e %14.6e\n", r.spatial ? "spatial" : "temporal",
                r.n, r.dt, r.h, r.err, r.stderr_);
    rows.push_back({r.spatial ? "spatial" : "temporal", std::to_string(r.n),
                    format_double(r.dt), format_double(r.h), format_double(r.err),
                    format_double(r.stderr_)});
  }
  std::printf("spatial slope (log err vs log h) = %.4f\n", res.spatial_slope);
  std::printf("temporal slope (log err vs log dt) = %.4f\n", res.temporal_slope);

  const std::string dir = out_dir(cfg);
  const std::string csv = dir + "/strong_order.csv";
  write_csv(csv, {"kind", "N", "dt", "h", "err", "stderr"}, rows);
  Manifest manifest(dir);
  manifest.add(csv);
  manifest.finish();
  std::printf("wrote %s\n", csv.c_str());
  return 0;
}

int cmd_simulate(const std::string& model, const std::string& config_path, int flag_threads) {
  (void)flag_threads;  // one trajectory is sequential
  const Config cfg = Config::parse_file(config_path);
  cfg.require_known(merge({&kMeshKeys, &kKernelKeys, &kNoiseKeys, &kTimeKeys, &kOutputKeys,
                           &kClassifyKeys, &kModelKeys, &kTopKeys}));

  const Mesh mesh = mesh_from_config(cfg);
  const double side = mesh_side(cfg);
  const ModelParams params = model_from_config(cfg, model);
  const RunConfig rc = run_config(cfg, model, side);
  const int snapshot_every = cfg.get_int("output.snapshot_every", 0);
  const std::string format = cfg.get_string("output.format", "vtk");
  if (format != "vtk" && format != "csv" && format != "both")
    throw ConfigError("output.format: expected vtk, csv or both");

  const std::string dir = out_dir(cfg);
  Manifest manifest(dir);
  FrameCallback on_frame;
  if (snapshot_every > 0) {
    on_frame = [&](int step, const Vec& u_full, const Vec& v_full) {
      if (step % snapshot_every != 0) return;
      char name[64];
      std::snprintf(name, sizeof name, "snap_%06d", step);
      if (format != "csv") {
        const std::string p = dir + "/" + name + ".vtk";
        write_vtk_snapshot(p, mesh, u_full, v_full);
        manifest.add(p);
      }
      if (format != "vtk") {
        const std::string p = dir + "/" + name + ".csv";
        write_nodal_csv(p, mesh, u_full, v_full);
        manifest.add(p);
      }
    };
  }

  const RunRecord rec = run_model(mesh, params, rc, 0, nullptr, nullptr, on_frame);
  const WaveClass wc = classify_run(rec, rc.policy);

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < rec.times.size(); ++i)
    rows.push_back({format_double(rec.times[i]), format_double(rec.activated_fraction[i]),
                    std::to_string(rec.component_count[i])});
  const std::string trace = dir + "/trace.csv";
  write_csv(trace, {"time", "activated_fraction", "component_count"}, rows);
  manifest.add(trace);
  manifest.finish();

  std::printf("classification: %s (%s)\n", wave_label_name(wc.label), wc.evidence.c_str());
  std::printf("wrote %s\n", trace.c_str());
  return 0;
}

int cmd_sweep(const std::string& model, const std::string& config_path, int flag_threads) {
  const Config cfg = Config::parse_file(config_path);
  auto allowed = merge({&kMeshKeys, &kKernelKeys, &kNoiseKeys, &kTimeKeys, &kOutputKeys,
                        &kClassifyKeys, &kModelKeys, &kTopKeys});
  allowed.insert({"sweep.axis1", "sweep.axis1_values", "sweep.axis2", "sweep.axis2_values",
                  "sweep.seeds_per_cell"});
  cfg.require_known(allowed);

  const Mesh mesh = mesh_from_config(cfg);
  const double side = mesh_side(cfg);
  const ModelParams params = model_from_config(cfg, model);
  const RunConfig rc = run_config(cfg, model, side);
  const int threads = resolve_threads(flag_threads, cfg);

  auto parse_axis = [](const std::string& name) {
    if (name == "sigma") return SweepAxis::Sigma;
    if (name == "epsilon") return SweepAxis::Epsilon;
    if (name == "tau_close") return SweepAxis::TauClose;
    throw ConfigError("sweep axis: expected sigma, epsilon or tau_close, got '" + name + "'");
  };
  SweepConfig sw;
  sw.axis1 = parse_axis(cfg.get_string("sweep.axis1", "epsilon"));
  sw.axis1_values = cfg.get_list("sweep.axis1_values");
  sw.axis2 = parse_axis(cfg.get_string("sweep.axis2", "sigma"));
  sw.axis2_values = cfg.get_list("sweep.axis2_values");
  sw.seeds_per_cell = cfg.get_int("sweep.seeds_per_cell", 10);

  const SweepResult res = sweep(mesh, params, rc, sw, threads);

  const std::string dir = out_dir(cfg);
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : res.runs)
    rows.push_back({format_double(r.axis1), format_double(r.axis2),
                    std::to_string(r.seed_replica), r.error.empty() ? wave_label_name(r.label)
                                                                    : "ERROR",
                    format_double(r.max_fraction), format_double(r.sustain_time),
                    std::to_string(r.components_late), std::to_string(r.nucleations),
                    r.error});
  const std::string runs_csv = dir + "/runs.csv";
  write_csv(runs_csv,
            {res.axis1_name, res.axis2_name, "seed", "label", "max_fraction", "sustain_time",
             "components_late", "nucleations", "error"},
            rows);

  rows.clear();
  for (const auto& c : res.cells)
    rows.push_back({format_double(c.axis1), format_double(c.axis2), wave_label_name(c.modal),
                    std::to_string(c.histogram[0]), std::to_string(c.histogram[1]),
                    std::to_string(c.histogram[2]), std::to_string(c.histogram[3]),
                    c.transition_flag ? "T" : ""});
  const std::string cells_csv = dir + "/cells.csv";
  write_csv(cells_csv,
            {res.axis1_name, res.axis2_name, "modal", "nw", "w", "rw", "dw", "flag"}, rows);

  Manifest manifest(dir);
  manifest.add(runs_csv);
  manifest.add(cells_csv);
  manifest.finish();
  std::printf("wrote %s and %s\n", runs_csv.c_str(), cells_csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-element simulator for stochastic excitable media"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: machine parallelism)");

  auto* mesh_info = app.add_subcommand("mesh-info", "mesh statistics");
  std::string mesh_file;
  std::vector<double> square;
  mesh_info->add_option("file", mesh_file, "mesh file");
  mesh_info->add_option("--square", square, "unit square grid: l N")->expected(2);

  auto* noise_error = app.add_subcommand("noise-error", "noise projection error table");
  std::vector<int> n_list = {5, 10, 20, 30};
  int samples = 200, k0 = 1, p0 = 1;
  double l = 1.0;
  std::uint64_t seed = 0;
  std::string out_csv;
  noise_error->add_option("--N", n_list, "grid sizes")->delimiter(',');
  noise_error->add_option("--samples", samples, "Monte Carlo samples per N");
  noise_error->add_option("--seed", seed, "master seed");
  noise_error->add_option("--k0", k0, "mode number");
  noise_error->add_option("--p0", p0, "mode number");
  noise_error->add_option("--l", l, "square side");
  noise_error->add_option("--out", out_csv, "CSV output path");

  std::string heat_cfg, strong_cfg, sim_cfg, sweep_cfg, sim_model, sweep_model;
  auto* heat = app.add_subcommand("heat-validate", "heat equation variance check");
  heat->add_option("--config", heat_cfg, "config file")->required();
  auto* strong = app.add_subcommand("strong-order", "strong convergence rate table");
  strong->add_option("--config", strong_cfg, "config file")->required();
  auto* sim = app.add_subcommand("simulate", "one model trajectory");
  sim->add_option("--model", sim_model, "fhn|barkley|ms")->required();
  sim->add_option("--config", sim_cfg, "config file")->required();
  auto* sw = app.add_subcommand("sweep", "parameter sweep / bifurcation table");
  sw->add_option("--model", sweep_model, "barkley|ms")->required();
  sw->add_option("--config", sweep_cfg, "config file")->required();

  // allow --threads after the subcommand name too
  for (auto* s : {mesh_info, noise_error, heat, strong, sim, sw}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  }

  try {
    if (mesh_info->parsed()) return cmd_mesh_info(mesh_file, square);
    if (noise_error->parsed()) return cmd_noise_error(n_list, samples, seed, k0, p0, l, out_csv);
    if (heat->parsed()) return cmd_heat_validate(heat_cfg, threads);
    if (strong->parsed()) return cmd_strong_order(strong_cfg, threads);
    if (sim->parsed()) return cmd_simulate(sim_model, sim_cfg, threads);
    if (sw->parsed()) return cmd_sweep(sweep_model, sweep_cfg, threads);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const MeshError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
  return 0;
}
