#include "mstop/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

#include "mstop/config.hpp"
#include "mstop/csvio.hpp"
#include "mstop/evaluate.hpp"
#include "mstop/oracle.hpp"
#include "mstop/parallel.hpp"
#include "mstop/svg.hpp"
#include "mstop/version.hpp"

namespace mstop {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

// Scalar entries broadcast to all N components; lists must have N entries.
std::vector<double> broadcast(ParsedConfig& cfg, const std::string& section,
                              const std::string& key, int n) {
  std::vector<double> v = cfg.get_double_list(section, key);
  if (v.size() == 1) v.assign(static_cast<std::size_t>(n), v.front());
  require(static_cast<int>(v.size()) == n,
          cfg.origin() + ": key '" + section + "." + key + "' needs 1 or " +
              std::to_string(n) + " entries");
  return v;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ", ";
    out += format_double(v[k]);
  }
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double std_dev = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double acc = 0.0;
    for (double x : v) acc += (x - out.mean) * (x - out.mean);
    out.std_dev = std::sqrt(acc / (static_cast<double>(v.size()) - 1.0));
  }
  return out;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream probe(path);
  if (!probe) throw ConfigError("cannot open config file " + path.string());
  probe.close();
  ParsedConfig parsed = ParsedConfig::from_file(path);
  ExperimentConfig out;

  out.problem = parsed.get_string("problem", "name");
  require(out.problem == "multi_put" || out.problem == "log_utility",
          parsed.origin() + ": key 'problem.name' must be multi_put or log_utility");
  out.components = static_cast<int>(parsed.get_int("problem", "components"));
  require(out.components >= 1 && out.components <= kMaxComponents,
          parsed.origin() + ": key 'problem.components' must be in [1, " +
              std::to_string(kMaxComponents) + "]");
  out.horizon = parsed.get_double("problem", "horizon", 1.0);
  require(out.horizon > 0.0, parsed.origin() + ": key 'problem.horizon' must be > 0");
  out.drifts = broadcast(parsed, "problem", "drift", out.components);
  out.vols = broadcast(parsed, "problem", "vol", out.components);
  out.initial_state = broadcast(parsed, "problem", "x0", out.components);
  if (out.problem == "multi_put") {
    out.strikes = broadcast(parsed, "problem", "strike", out.components);
  }
  const std::string stepping = parsed.get_string("problem", "stepping", "euler");
  require(stepping == "euler" || stepping == "exact_gbm",
          parsed.origin() + ": key 'problem.stepping' must be euler or exact_gbm");
  out.exact_gbm_step = stepping == "exact_gbm";

  out.sample_count = parsed.get_int("sampling", "M");
  require(out.sample_count >= 1,
          parsed.origin() + ": key 'sampling.M' must be a positive integer");
  const std::string law = parsed.get_string("sampling", "state_law", "uniform");
  if (law == "uniform") {
    out.state_law = StateLaw::Kind::uniform_box;
    out.box_lo = parsed.get_double("sampling", "box_lo");
    out.box_hi = parsed.get_double("sampling", "box_hi");
    require(out.box_lo < out.box_hi,
            parsed.origin() + ": key 'sampling.box_lo' must be below 'sampling.box_hi'");
  } else if (law == "lognormal") {
    out.state_law = StateLaw::Kind::lognormal;
    out.lognormal_spread = parsed.get_double("sampling", "spread", 0.3);
    require(out.lognormal_spread > 0.0,
            parsed.origin() + ": key 'sampling.spread' must be > 0");
  } else {
    throw ConfigError(parsed.origin() +
                      ": key 'sampling.state_law' must be uniform or lognormal");
  }

  out.mode = parse_mode(parsed.get_string("solver", "mode", "partial"));
  out.backend = parse_backend(parsed.get_string("solver", "backend", "shallow_net"));
  out.width = static_cast<int>(parsed.get_int("solver", "width", 0));
  require(out.width >= 0, parsed.origin() + ": key 'solver.width' must be >= 0");
  out.activation = parse_activation(parsed.get_string("solver", "activation", "tanh"));
  const std::string optimizer = parsed.get_string("solver", "optimizer", "adam");
  require(optimizer == "adam" || optimizer == "sgd",
          parsed.origin() + ": key 'solver.optimizer' must be adam or sgd");
  out.train.optimizer = optimizer == "adam" ? Optimizer::adam : Optimizer::sgd;
  out.train.learning_rate = parsed.get_double("solver", "learning_rate", 1e-3);
  require(out.train.learning_rate > 0.0,
          parsed.origin() + ": key 'solver.learning_rate' must be > 0");
  out.train.batch = parsed.get_int("solver", "batch", 512);
  require(out.train.batch >= 1, parsed.origin() + ": key 'solver.batch' must be >= 1");
  out.train.epochs = static_cast<int>(parsed.get_int("solver", "epochs", 50));
  require(out.train.epochs >= 1, parsed.origin() + ": key 'solver.epochs' must be >= 1");
  out.train.grad_clip = parsed.get_double("solver", "grad_clip", 0.0);
  out.train.early_stop_tol = parsed.get_double("solver", "early_stop_tol", 1e-7);
  out.train.patience = static_cast<int>(parsed.get_int("solver", "patience", 8));
  out.warm_start = parsed.get_bool("solver", "warm_start", true);

  out.p_list.clear();
  for (long p : parsed.get_int_list("study", "p_list")) {
    require(p >= 1, parsed.origin() + ": key 'study.p_list' entries must be >= 1");
    out.p_list.push_back(static_cast<int>(p));
  }
  out.seeds = parsed.get_int_list("study", "seeds");
  for (long s : out.seeds) {
    require(s >= 0, parsed.origin() + ": key 'study.seeds' entries must be >= 0");
  }

  out.rollout_paths = parsed.get_int("evaluate", "rollout_paths", 1L << 16);
  require(out.rollout_paths >= 1,
          parsed.origin() + ": key 'evaluate.rollout_paths' must be >= 1");
  double mean_anchor = 0.0;
  for (double v : out.initial_state) mean_anchor += v;
  mean_anchor /= static_cast<double>(out.components);
  out.diag_lo = parsed.get_double("evaluate", "diag_lo", 0.5 * mean_anchor);
  out.diag_hi = parsed.get_double("evaluate", "diag_hi", 1.5 * mean_anchor);
  require(out.diag_lo < out.diag_hi,
          parsed.origin() + ": key 'evaluate.diag_lo' must be below 'evaluate.diag_hi'");
  out.diag_points = static_cast<int>(parsed.get_int("evaluate", "diag_points", 101));
  require(out.diag_points >= 2,
          parsed.origin() + ": key 'evaluate.diag_points' must be >= 2");
  out.oracle_put_steps =
      static_cast<int>(parsed.get_int("evaluate", "oracle_put_steps", 2000));
  require(out.oracle_put_steps >= 1,
          parsed.origin() + ": key 'evaluate.oracle_put_steps' must be >= 1");
  out.rel_floor = parsed.get_double("evaluate", "rel_floor", 1e-8);
  out.plane_csv = parsed.get_bool("evaluate", "plane", false);

  out.out_dir = parsed.get_string("output", "dir");
  require(!out.out_dir.empty() && out.out_dir.find("..") == std::string::npos,
          parsed.origin() + ": key 'output.dir' must be a plain directory name");

  parsed.reject_unknown();
  return out;
}

ExperimentConfig experiment_config_from_text(std::string_view text, std::string origin) {
  const std::filesystem::path tmp =
      std::filesystem::temp_directory_path() /
      ("mstop_cfg_" + std::to_string(detail::mix64(std::hash<std::string_view>{}(text))) +
       ".cfg");
  {
    std::ofstream os(tmp);
    os << text;
  }
  try {
    ExperimentConfig cfg = load_experiment_config(tmp);
    std::filesystem::remove(tmp);
    return cfg;
  } catch (...) {
    std::filesystem::remove(tmp);
    throw;
  }
}

std::string render_resolved_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "# resolved configuration (mstop " << kVersion << ")\n";
  os << "\n[problem]\n";
  os << "name = " << cfg.problem << "\n";
  os << "components = " << cfg.components << "\n";
  os << "horizon = " << format_double(cfg.horizon) << "\n";
  if (cfg.problem == "multi_put") os << "strike = " << join_doubles(cfg.strikes) << "\n";
  os << "drift = " << join_doubles(cfg.drifts) << "\n";
  os << "vol = " << join_doubles(cfg.vols) << "\n";
  os << "x0 = " << join_doubles(cfg.initial_state) << "\n";
  os << "stepping = " << (cfg.exact_gbm_step ? "exact_gbm" : "euler") << "\n";
  os << "\n[sampling]\n";
  os << "M = " << cfg.sample_count << "\n";
  if (cfg.state_law == StateLaw::Kind::uniform_box) {
    os << "state_law = uniform\n";
    os << "box_lo = " << format_double(cfg.box_lo) << "\n";
    os << "box_hi = " << format_double(cfg.box_hi) << "\n";
  } else {
    os << "state_law = lognormal\n";
    os << "spread = " << format_double(cfg.lognormal_spread) << "\n";
  }
  os << "\n[solver]\n";
  os << "mode = " << mode_name(cfg.mode) << "\n";
  os << "backend = " << backend_name(cfg.backend) << "\n";
  os << "width = " << cfg.width << "\n";
  os << "activation = " << activation_name(cfg.activation) << "\n";
  os << "optimizer = " << (cfg.train.optimizer == Optimizer::adam ? "adam" : "sgd") << "\n";
  os << "learning_rate = " << format_double(cfg.train.learning_rate) << "\n";
  os << "batch = " << cfg.train.batch << "\n";
  os << "epochs = " << cfg.train.epochs << "\n";
  os << "grad_clip = " << format_double(cfg.train.grad_clip) << "\n";
  os << "early_stop_tol = " << format_double(cfg.train.early_stop_tol) << "\n";
  os << "patience = " << cfg.train.patience << "\n";
  os << "warm_start = " << (cfg.warm_start ? "true" : "false") << "\n";
  os << "\n[study]\n";
  os << "p_list = ";
  for (std::size_t i = 0; i < cfg.p_list.size(); ++i) {
    os << (i ? ", " : "") << cfg.p_list[i];
  }
  os << "\nseeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) os << (i ? ", " : "") << cfg.seeds[i];
  os << "\n\n[evaluate]\n";
  os << "rollout_paths = " << cfg.rollout_paths << "\n";
  os << "diag_lo = " << format_double(cfg.diag_lo) << "\n";
  os << "diag_hi = " << format_double(cfg.diag_hi) << "\n";
  os << "diag_points = " << cfg.diag_points << "\n";
  if (cfg.problem == "multi_put") {
    os << "oracle_put_steps = " << cfg.oracle_put_steps << "\n";
  }
  os << "rel_floor = " << format_double(cfg.rel_floor) << "\n";
  os << "plane = " << (cfg.plane_csv ? "true" : "false") << "\n";
  os << "\n[output]\n";
  os << "dir = " << cfg.out_dir << "\n";
  return os.str();
}

ProblemSpec make_experiment_problem(const ExperimentConfig& cfg, int num_steps) {
  if (cfg.problem == "multi_put") {
    PutParams params;
    params.num_components = cfg.components;
    params.strikes = cfg.strikes;
    params.drifts = cfg.drifts;
    params.vols = cfg.vols;
    params.horizon = cfg.horizon;
    params.num_steps = num_steps;
    params.initial_state = cfg.initial_state;
    params.exact_gbm_step = cfg.exact_gbm_step;
    return make_put_problem(params);
  }
  LogUtilityParams params;
  params.num_components = cfg.components;
  params.drifts = cfg.drifts;
  params.vols = cfg.vols;
  params.horizon = cfg.horizon;
  params.num_steps = num_steps;
  params.initial_state = cfg.initial_state;
  params.exact_gbm_step = cfg.exact_gbm_step;
  return make_log_utility_problem(params);
}

StateLaw make_experiment_state_law(const ExperimentConfig& cfg) {
  if (cfg.state_law == StateLaw::Kind::uniform_box) {
    return StateLaw::uniform_box(
        std::vector<double>(static_cast<std::size_t>(cfg.components), cfg.box_lo),
        std::vector<double>(static_cast<std::size_t>(cfg.components), cfg.box_hi));
  }
  return StateLaw::lognormal(cfg.initial_state, cfg.lognormal_spread);
}

std::vector<double> oracle_diagonal(const ExperimentConfig& cfg,
                                    std::span<const double> grid) {
  std::vector<double> values(grid.size());
  if (cfg.problem == "log_utility") {
    for (std::size_t g = 0; g < grid.size(); ++g) values[g] = std::log1p(grid[g]);
    return values;
  }
  parallel_for(grid.size(), 1, [&](std::size_t g0, std::size_t g1) {
    for (std::size_t g = g0; g < g1; ++g) {
      double total = 0.0;
      for (int j = 0; j < cfg.components; ++j) {
        total += binomial_put(grid[g], cfg.strikes[j], cfg.drifts[j], cfg.vols[j],
                              cfg.horizon, cfg.oracle_put_steps);
      }
      values[g] = total;
    }
  });
  return values;
}

double oracle_value_at_start(const ExperimentConfig& cfg) {
  if (cfg.problem == "log_utility") {
    return log_utility_value(cfg.initial_state);
  }
  double total = 0.0;
  for (int j = 0; j < cfg.components; ++j) {
    total += binomial_put(cfg.initial_state[j], cfg.strikes[j], cfg.drifts[j],
                          cfg.vols[j], cfg.horizon, cfg.oracle_put_steps);
  }
  return total;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_root) {
  const std::filesystem::path out_dir = out_root / cfg.out_dir;
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream os(out_dir / "resolved_config.cfg");
    os << render_resolved_config(cfg);
    std::ofstream vs(out_dir / "VERSION");
    vs << "mstop " << kVersion << "\n";
  }

  ExperimentResult result;
  result.out_dir = out_dir;
  result.reference_value = oracle_value_at_start(cfg);

  const std::vector<double> grid = linspace(cfg.diag_lo, cfg.diag_hi, cfg.diag_points);
  const std::vector<double> oracle_curve = oracle_diagonal(cfg, grid);
  const StateLaw state_law = make_experiment_state_law(cfg);

  SolveConfig solve_cfg;
  solve_cfg.backend = cfg.backend;
  solve_cfg.width = cfg.width;
  solve_cfg.activation = cfg.activation;
  solve_cfg.train = cfg.train;
  solve_cfg.warm_start = cfg.warm_start;

  CsvWriter rate_csv(out_dir / "rate.csv", {"p", "h", "l2_error", "rel_error", "seed"});
  CsvWriter rollout_csv(out_dir / "rollout.csv", {"p", "seed", "j0", "std_error"});

  const int max_p = *std::max_element(cfg.p_list.begin(), cfg.p_list.end());
  std::vector<std::pair<double, double>> first_seed_curve;  // largest p, first seed

  for (const int p : cfg.p_list) {
    const ProblemSpec problem = make_experiment_problem(cfg, p);
    for (const long seed : cfg.seeds) {
      const auto t0 = std::chrono::steady_clock::now();
      const TrainingSet data = draw_training_set(problem, cfg.sample_count, state_law,
                                                 static_cast<std::uint64_t>(seed));
      SolveConfig job_cfg = solve_cfg;
      job_cfg.train.seed = static_cast<std::uint64_t>(seed);
      const ValueStack stack = solve(problem, data, cfg.mode, job_cfg);
      const double train_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      const auto curve = diagonal_value_curve(stack, grid);
      ExperimentJobResult job;
      job.num_steps = p;
      job.seed = seed;
      job.l2_error = curve_l2_error(curve, oracle_curve);
      job.rel_error = curve_relative_l2_error(curve, oracle_curve, cfg.rel_floor);
      job.train_seconds = train_seconds;

      auto stack_ptr = std::make_shared<const ValueStack>(stack);
      const StoppingPolicy policy(stack_ptr);
      const EvalReport rollout = rollout_policy(problem, policy, cfg.rollout_paths,
                                                static_cast<std::uint64_t>(seed));
      job.rollout_value = rollout.estimate;
      job.rollout_std_error = rollout.std_error;
      result.jobs.push_back(job);

      rate_csv.row(std::vector<double>{static_cast<double>(p), cfg.horizon / p,
                                       job.l2_error, job.rel_error,
                                       static_cast<double>(seed)});
      rollout_csv.row(std::vector<double>{static_cast<double>(p),
                                          static_cast<double>(seed), job.rollout_value,
                                          job.rollout_std_error});

      {
        CsvWriter curve_csv(out_dir / ("value_curve_p" + std::to_string(p) + "_seed" +
                                       std::to_string(seed) + ".csv"),
                            {"x", "value_nn", "value_oracle"});
        for (std::size_t g = 0; g < grid.size(); ++g) {
          curve_csv.row(std::vector<double>{grid[g], curve[g].second, oracle_curve[g]});
        }
        curve_csv.close();
      }
      if (p == max_p && seed == cfg.seeds.front()) {
        first_seed_curve.assign(curve.begin(), curve.end());
        if (cfg.plane_csv) {
          const auto plane = plane_value_curve(stack, grid, grid);
          CsvWriter plane_csv(out_dir / ("plane_p" + std::to_string(p) + "_seed" +
                                         std::to_string(seed) + ".csv"),
                              {"x", "y", "value_nn"});
          for (const auto& pt : plane) {
            plane_csv.row(std::vector<double>{pt.x, pt.y, pt.value});
          }
          plane_csv.close();
        }
      }

      std::cout << "[mstop] " << cfg.problem << " p=" << p << " seed=" << seed
                << " l2=" << format_double(job.l2_error)
                << " rel=" << format_double(job.rel_error)
                << " j0=" << format_double(job.rollout_value) << " ("
                << format_double(train_seconds) << "s train)\n";
    }
  }
  rate_csv.close();
  rollout_csv.close();

  // Per-p aggregates over seeds.
  std::vector<double> p_l2_mean, p_l2_std, p_rel_mean, p_rel_std;
  {
    CsvWriter summary_csv(out_dir / "rate_summary.csv",
                          {"p", "h", "l2_mean", "l2_std", "rel_mean", "rel_std"});
    for (const int p : cfg.p_list) {
      std::vector<double> l2s, rels;
      for (const auto& job : result.jobs) {
        if (job.num_steps == p) {
          l2s.push_back(job.l2_error);
          rels.push_back(job.rel_error);
        }
      }
      const MeanStd l2 = mean_std(l2s);
      const MeanStd rel = mean_std(rels);
      p_l2_mean.push_back(l2.mean);
      p_l2_std.push_back(l2.std_dev);
      p_rel_mean.push_back(rel.mean);
      p_rel_std.push_back(rel.std_dev);
      summary_csv.row(std::vector<double>{static_cast<double>(p), cfg.horizon / p,
                                          l2.mean, l2.std_dev, rel.mean, rel.std_dev});
    }
    summary_csv.close();
  }

  // Log-log rate fit per seed across the p grid.
  if (cfg.p_list.size() >= 3) {
    for (const long seed : cfg.seeds) {
      std::vector<std::pair<double, double>> points;
      for (const auto& job : result.jobs) {
        if (job.seed == seed && job.l2_error > 0.0) {
          points.emplace_back(static_cast<double>(job.num_steps), job.l2_error);
        }
      }
      if (points.size() >= 3) {
        result.slopes.push_back(fit_rate(points, cfg.horizon).slope);
      }
    }
  }
  const MeanStd slope = mean_std(result.slopes);
  result.slope_mean = slope.mean;
  result.slope_std = slope.std_dev;

  // Human-readable summary (deterministic content only).
  {
    std::ofstream os(out_dir / "summary.txt");
    os << "mstop " << kVersion << " experiment summary\n";
    os << "problem = " << cfg.problem << " (N = " << cfg.components
       << ", T = " << format_double(cfg.horizon) << ")\n";
    os << "mode = " << mode_name(cfg.mode) << ", backend = " << backend_name(cfg.backend)
       << ", M = " << cfg.sample_count << "\n";
    os << "reference value at x0 = " << format_double(result.reference_value) << "\n\n";
    os << "diagonal errors vs oracle on [" << format_double(cfg.diag_lo) << ", "
       << format_double(cfg.diag_hi) << "] (" << cfg.diag_points << " points):\n";
    for (std::size_t i = 0; i < cfg.p_list.size(); ++i) {
      os << "  p = " << cfg.p_list[i] << ": l2 = " << format_double(p_l2_mean[i])
         << " +- " << format_double(p_l2_std[i])
         << ", rel = " << format_double(p_rel_mean[i]) << " +- "
         << format_double(p_rel_std[i]) << "\n";
    }
    os << "\nrollout J0 per (p, seed):\n";
    for (const auto& job : result.jobs) {
      os << "  p = " << job.num_steps << ", seed = " << job.seed
         << ": J0 = " << format_double(job.rollout_value) << " +- "
         << format_double(job.rollout_std_error)
         << " (gap to reference = " << format_double(result.reference_value - job.rollout_value)
         << ")\n";
    }
    if (!result.slopes.empty()) {
      os << "\nfitted log-log slope of l2 error vs h (error ~ C h^s):\n";
      os << "  per-seed slopes = ";
      for (std::size_t i = 0; i < result.slopes.size(); ++i) {
        os << (i ? ", " : "") << format_double(result.slopes[i]);
      }
      os << "\n  slope = " << format_double(result.slope_mean) << " +- "
         << format_double(result.slope_std) << "\n";
      os << "  expectation: error decreasing in p (positive slope)\n";
    }
  }

  // Plots.
  if (!first_seed_curve.empty()) {
    SvgSeries nn{"value (regressed)", first_seed_curve, "#1f77b4", false};
    SvgSeries oracle{"value (oracle)", {}, "#d62728", true};
    for (std::size_t g = 0; g < grid.size(); ++g) {
      oracle.points.emplace_back(grid[g], oracle_curve[g]);
    }
    std::vector<SvgSeries> series{nn, oracle};
    if (cfg.problem == "multi_put") {
      SvgSeries payoff{"terminal payoff", {}, "#2ca02c", true};
      for (double x : grid) {
        double total = 0.0;
        for (int j = 0; j < cfg.components; ++j) {
          total += std::max(cfg.strikes[j] - x, 0.0);
        }
        payoff.points.emplace_back(x, total);
      }
      series.push_back(payoff);
    }
    SvgPlotOptions opt;
    opt.title = cfg.problem + ": value along the diagonal (p = " +
                std::to_string(max_p) + ")";
    opt.x_label = "x (all coordinates equal)";
    opt.y_label = "value";
    write_line_plot(out_dir / "value_curve.svg", opt, series);
  }
  if (cfg.p_list.size() >= 2) {
    SvgSeries mean_series{"l2 error (mean)", {}, "#1f77b4", false};
    SvgBand band;
    band.color = "#1f77b4";
    bool band_ok = true;
    for (std::size_t i = 0; i < cfg.p_list.size(); ++i) {
      const double p = static_cast<double>(cfg.p_list[i]);
      mean_series.points.emplace_back(p, p_l2_mean[i]);
      const double lo = p_l2_mean[i] - p_l2_std[i];
      band_ok = band_ok && lo > 0.0;
      band.lo.emplace_back(p, lo);
      band.hi.emplace_back(p, p_l2_mean[i] + p_l2_std[i]);
    }
    SvgSeries rel_series{"relative l2 error (mean)", {}, "#2ca02c", true};
    for (std::size_t i = 0; i < cfg.p_list.size(); ++i) {
      rel_series.points.emplace_back(static_cast<double>(cfg.p_list[i]), p_rel_mean[i]);
    }
    std::vector<SvgSeries> series{mean_series, rel_series};
    if (!result.slopes.empty()) {
      // Line fitted on the per-p mean errors.
      std::vector<std::pair<double, double>> mean_points;
      for (std::size_t i = 0; i < cfg.p_list.size(); ++i) {
        if (p_l2_mean[i] > 0.0) {
          mean_points.emplace_back(static_cast<double>(cfg.p_list[i]), p_l2_mean[i]);
        }
      }
      if (mean_points.size() >= 3) {
        const RateFit fit = fit_rate(mean_points, cfg.horizon);
        SvgSeries fitted{"fitted slope " + format_double(fit.slope), {}, "#ff7f0e", true};
        for (const auto& [p, unused] : mean_points) {
          const double h = cfg.horizon / p;
          fitted.points.emplace_back(p, std::exp(fit.intercept + fit.slope * std::log(h)));
        }
        series.push_back(fitted);
      }
    }
    SvgPlotOptions opt;
    opt.title = cfg.problem + ": diagonal l2 error vs number of time steps";
    opt.x_label = "p (time steps)";
    opt.y_label = "l2 error";
    opt.log_x = true;
    opt.log_y = true;
    write_line_plot(out_dir / "rate.svg", opt, series,
                    band_ok ? std::vector<SvgBand>{band} : std::vector<SvgBand>{});
  }

  return result;
}

namespace {

constexpr const char* kLogUtilityN5 = R"cfg(# Nonlinear closed-form study: N = 5 components, terminal reward
# log(1 + mean(x)), nonpositive drifts. The exact value is
# log(1 + mean(x0)) and stopping everything at once is optimal, which
# makes this the standard sanity study for the partial solver.

[problem]
name = log_utility
components = 5
horizon = 1.0
drift = -0.05
vol = 0.2
x0 = 1.0

[sampling]
M = 32768
state_law = uniform
box_lo = 0.0
box_hi = 3.0

[solver]
mode = partial
backend = shallow_net
width = 0            # 0 = ceil(sqrt(M))
activation = tanh
optimizer = adam
learning_rate = 0.003
batch = 512
epochs = 60
warm_start = true

[study]
p_list = 5, 10, 20, 40
seeds = 1, 2, 3, 4, 5

[evaluate]
rollout_paths = 65536
diag_lo = 0.5
diag_hi = 2.0
diag_points = 101

[output]
dir = log_utility_n5
)cfg";

constexpr const char* kMultiPutN5 = R"cfg(# Basket of 5 independent American puts. The oracle value is the sum of
# per-component 1-D binomial-tree prices, so the diagonal value curve has
# an independent reference.

[problem]
name = multi_put
components = 5
horizon = 1.0
strike = 100.0
drift = 0.05
vol = 0.2
x0 = 100.0

[sampling]
M = 32768
state_law = uniform
box_lo = 50.0
box_hi = 150.0

[solver]
mode = exhaustive
backend = shallow_net
width = 0
activation = tanh
optimizer = adam
learning_rate = 0.003
batch = 512
epochs = 60
warm_start = true

[study]
p_list = 5, 10, 20, 40
seeds = 1, 2, 3, 4, 5

[evaluate]
rollout_paths = 65536
diag_lo = 80.0
diag_hi = 120.0
diag_points = 101
oracle_put_steps = 2000
plane = true

[output]
dir = multi_put_n5
)cfg";

constexpr const char* kSmokeN3 = R"cfg(# Small fast study used by tests and for a quick end-to-end smoke run.

[problem]
name = log_utility
components = 3
horizon = 1.0
drift = -0.05
vol = 0.2
x0 = 1.0

[sampling]
M = 1024
state_law = uniform
box_lo = 0.0
box_hi = 3.0

[solver]
mode = partial
backend = shallow_net
width = 24
activation = tanh
optimizer = adam
learning_rate = 0.005
batch = 256
epochs = 20
warm_start = true

[study]
p_list = 3, 6
seeds = 1, 2

[evaluate]
rollout_paths = 2048
diag_lo = 0.5
diag_hi = 2.0
diag_points = 21

[output]
dir = smoke_n3
)cfg";

}  // namespace

std::vector<std::string> bundled_config_names() {
  return {"log_utility_n5", "multi_put_n5", "smoke_n3"};
}

std::string bundled_config(const std::string& name) {
  if (name == "log_utility_n5") return kLogUtilityN5;
  if (name == "multi_put_n5") return kMultiPutN5;
  if (name == "smoke_n3") return kSmokeN3;
  throw ConfigError("unknown bundled config '" + name +
                    "' (log_utility_n5, multi_put_n5, smoke_n3)");
}

}  // namespace mstop
