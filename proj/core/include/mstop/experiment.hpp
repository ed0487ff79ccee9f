#pragma once

// Config-driven experiment harness: trains on a p-grid x seed-grid, compares
// value curves against the problem's oracle, rolls out the learned policy and
// emits CSV tables plus SVG plots. Outputs are byte-identical for identical
// (config, seed) regardless of the worker count.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mstop/shallownet.hpp"
#include "mstop/simgen.hpp"
#include "mstop/solver.hpp"

namespace mstop {

struct ExperimentConfig {
  // [problem]
  std::string problem;  // multi_put | log_utility
  int components = 5;
  double horizon = 1.0;
  std::vector<double> strikes;  // multi_put only
  std::vector<double> drifts;
  std::vector<double> vols;
  std::vector<double> initial_state;
  bool exact_gbm_step = false;

  // [sampling]
  long sample_count = 1L << 15;
  StateLaw::Kind state_law = StateLaw::Kind::uniform_box;
  double box_lo = 0.0;
  double box_hi = 0.0;
  double lognormal_spread = 0.3;

  // [solver]
  SolveMode mode = SolveMode::partial;
  BackendKind backend = BackendKind::shallow_net;
  int width = 0;
  Activation activation = Activation::tanh;
  TrainConfig train;
  bool warm_start = true;

  // [study]
  std::vector<int> p_list;
  std::vector<long> seeds;

  // [evaluate]
  long rollout_paths = 1L << 16;
  double diag_lo = 0.0;
  double diag_hi = 0.0;
  int diag_points = 101;
  int oracle_put_steps = 2000;
  double rel_floor = 1e-8;
  bool plane_csv = false;

  // [output]
  std::string out_dir;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig experiment_config_from_text(std::string_view text,
                                             std::string origin);

// Canonical echo of every resolved key, written next to the artifacts.
std::string render_resolved_config(const ExperimentConfig& cfg);

ProblemSpec make_experiment_problem(const ExperimentConfig& cfg, int num_steps);
StateLaw make_experiment_state_law(const ExperimentConfig& cfg);

// Reference value along the diagonal grid: closed form for log_utility, sum
// of 1-D binomial puts for multi_put.
std::vector<double> oracle_diagonal(const ExperimentConfig& cfg,
                                    std::span<const double> grid);
// Reference value at the initial state.
double oracle_value_at_start(const ExperimentConfig& cfg);

struct ExperimentJobResult {
  int num_steps = 0;
  long seed = 0;
  double l2_error = 0.0;
  double rel_error = 0.0;
  double rollout_value = 0.0;
  double rollout_std_error = 0.0;
  double train_seconds = 0.0;
};

struct ExperimentResult {
  std::filesystem::path out_dir;
  std::vector<ExperimentJobResult> jobs;
  std::vector<double> slopes;  // log-log rate fit per seed (needs >= 3 p's)
  double slope_mean = 0.0;
  double slope_std = 0.0;
  double reference_value = 0.0;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_root);

// Bundled example configurations, addressable by name.
std::vector<std::string> bundled_config_names();
std::string bundled_config(const std::string& name);

}  // namespace mstop
