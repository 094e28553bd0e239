#pragma once

#include <functional>
#include <string>

#include "emsim/models.hpp"

namespace emsim {

struct RunRecord {
  std::vector<double> times;               // strictly increasing, starts at 0
  std::vector<double> activated_fraction;  // fraction of nodes with u >= u_act
  std::vector<int> component_count;        // excited components per frame
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
};

enum class WaveLabel { NW, W, RW, DW };

const char* wave_label_name(WaveLabel label);

struct WaveClass {
  WaveLabel label = WaveLabel::NW;
  std::string evidence;  // which thresholds were crossed
};

struct ClassifyPolicy {
  double u_act = 0.5;
  double f_wave = 0.05;
  double f_quiet = 0.01;
  int c_max = 4;
  double t_sustain_frac = 0.6;
};

/// Pure heuristic on the record:
///   NW  activated fraction never exceeds f_wave
///   W   a wave fires but activity dies (fraction <= f_quiet) before
///       T_sustain = t_sustain_frac * T_obs and stays quiet
///   RW  activity persists past T_sustain with <= c_max components
///   DW  activity persists with > c_max components on >= 50% of late frames
WaveClass classify_run(const RunRecord& record, const ClassifyPolicy& policy);

/// Connected components of {triangles with all three nodes above threshold}
/// under shared-edge adjacency (union-find). `u_full` is a full nodal field.
int excited_components(const Vec& u_full, const Mesh& mesh, double threshold);

/// Total positive variation of the component count: number of wave
/// nucleation events seen over the run.
int nucleation_count(const RunRecord& record);

enum class ModelKind { Fhn, Barkley, Ms };

struct ModelParams {
  ModelKind kind = ModelKind::Barkley;
  FhnParams fhn;
  BarkleyParams barkley;
  MsParams ms;
  bool fhn_v_over_eps = false;

  double sigma() const;
  void set_sigma(double s);
  void set_epsilon(double e);
};

struct RunConfig {
  double dt = 0.05;
  double t_end = 20.0;
  BcKind bc = BcKind::Periodic;
  double period = 0.0;  // square side for periodic BCs
  Kernel kernel = Kernel::gaussian(2.0);
  Discretization discretization = Discretization::P1;
  std::uint64_t seed = 0;
  int record_every = 1;  // component counts every k-th step
  ClassifyPolicy policy;
};

/// One trajectory from rest (MS starts at v=1, others at v=0). The optional
/// callback sees every state (step index, full nodal u and v) for snapshots.
using FrameCallback = std::function<void(int step, const Vec& u_full, const Vec& v_full)>;

RunRecord run_model(const Mesh& mesh, const ModelParams& params, const RunConfig& cfg,
                    std::uint64_t replica, const FemOperators* prebuilt = nullptr,
                    const std::shared_ptr<const Eigen::MatrixXd>* factor = nullptr,
                    const FrameCallback& on_frame = {});

struct SweepCellRun {
  std::size_t i = 0, j = 0;
  double axis1 = 0.0, axis2 = 0.0;
  std::uint64_t seed_replica = 0;
  WaveLabel label = WaveLabel::NW;
  double max_fraction = 0.0;
  double sustain_time = 0.0;  // last time with fraction > f_quiet
  int components_late = 0;    // max component count past T_sustain
  int nucleations = 0;
  std::string error;          // non-empty if the run failed
};

struct SweepCellSummary {
  std::size_t i = 0, j = 0;
  double axis1 = 0.0, axis2 = 0.0;
  WaveLabel modal = WaveLabel::NW;
  std::array<int, 4> histogram{};  // NW, W, RW, DW
  bool transition_flag = false;    // RW/DW split cell
};

struct SweepResult {
  std::string axis1_name, axis2_name;
  std::vector<SweepCellRun> runs;
  std::vector<SweepCellSummary> cells;
};

/// Which parameter a sweep axis drives.
enum class SweepAxis { Sigma, Epsilon, TauClose };

struct SweepConfig {
  SweepAxis axis1 = SweepAxis::Epsilon;
  std::vector<double> axis1_values;
  SweepAxis axis2 = SweepAxis::Sigma;
  std::vector<double> axis2_values;
  int seeds_per_cell = 10;
};

SweepResult sweep(const Mesh& mesh, const ModelParams& base, const RunConfig& run_cfg,
                  const SweepConfig& sweep_cfg, int threads);

struct SpearmanResult {
  double rho = 0.0;
  double p_one_sided = 1.0;  // for the alternative rho > 0
};

/// Spearman rank correlation with average ranks for ties; normal
/// approximation z = rho * sqrt(n - 1).
SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace emsim
