// Acceptance suite: each criterion prints one [PASS]/[FAIL] line; the
// process exits nonzero if any criterion fails. Individual criteria can be
// selected by passing their numbers as arguments.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mstop/csvio.hpp"
#include "mstop/evaluate.hpp"
#include "mstop/experiment.hpp"
#include "mstop/oracle.hpp"
#include "mstop/parallel.hpp"
#include "mstop/rng.hpp"
#include "mstop/selftest.hpp"
#include "mstop/simgen.hpp"
#include "mstop/solver.hpp"

using namespace mstop;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

std::string fmt(double v) { return format_double(v); }

// ---------------------------------------------------------------------------
// 1. Oracle equivalence: tabular-backend solve vs exact DP on randomized
//    finite instances, both modes, every reachable point, <= 1e-10.
bool criterion_oracle_equivalence(std::string& detail) {
  Timer timer;
  constexpr int kInstances = 20;
  double worst = 0.0;
  long points = 0;
  for (int t = 0; t < kInstances; ++t) {
    const FiniteInstance inst = make_random_finite_instance(9000 + t);
    const StateLaw law = StateLaw::uniform_box(
        std::vector<double>(inst.problem.num_components, -1.0),
        std::vector<double>(inst.problem.num_components, 1.0));
    const TrainingSet data = draw_training_set(inst.problem, 2, law, 7);
    SolveConfig cfg;
    cfg.backend = BackendKind::tabular_exact;
    for (const auto mode : {SolveMode::exhaustive, SolveMode::partial}) {
      const ValueStack stack = solve(inst.problem, data, mode, cfg);
      const ExactDpTable table =
          exact_dp(inst, mode == SolveMode::exhaustive ? DpVariant::original
                                                       : DpVariant::alternative);
      for (const auto& entry : table.entries()) {
        const double diff =
            std::abs(stack.value(entry.step, entry.state, entry.mask).value -
                     entry.value);
        worst = std::max(worst, diff);
        ++points;
        if (diff > 1e-10) {
          detail = "instance " + std::to_string(t) + " (" + mode_name(mode) +
                   ") deviates by " + fmt(diff);
          return false;
        }
      }
    }
  }
  const double elapsed = timer.seconds();
  detail = std::to_string(kInstances) + " instances, " + std::to_string(points) +
           " points, max |diff| = " + fmt(worst) + ", " + fmt(elapsed) + "s";
  return elapsed < 60.0;
}

// ---------------------------------------------------------------------------
// 2. Dominance: alternative exact DP <= original everywhere; with a shared
//    net stack, value_partial <= value_exhaustive at 10^4 random queries.
bool criterion_dominance(std::string& detail) {
  for (int t = 0; t < 20; ++t) {
    const FiniteInstance inst = make_random_finite_instance(9000 + t);
    const ExactDpTable original = exact_dp(inst, DpVariant::original);
    const ExactDpTable alternative = exact_dp(inst, DpVariant::alternative);
    for (const auto& entry : alternative.entries()) {
      if (!original.contains(entry.step, entry.state, entry.mask)) continue;
      if (entry.value > original.value(entry.step, entry.state, entry.mask) + 1e-12) {
        detail = "exact tables: alternative exceeds original on instance " +
                 std::to_string(t);
        return false;
      }
    }
  }

  LogUtilityParams params;
  params.num_components = 4;
  params.drifts = std::vector<double>(4, -0.05);
  params.vols = std::vector<double>(4, 0.2);
  params.horizon = 1.0;
  params.num_steps = 4;
  params.initial_state = std::vector<double>(4, 1.0);
  const ProblemSpec spec = make_log_utility_problem(params);
  const StateLaw law = StateLaw::uniform_box(std::vector<double>(4, 0.0),
                                             std::vector<double>(4, 3.0));
  const TrainingSet data = draw_training_set(spec, 4096, law, 1);
  SolveConfig cfg;
  cfg.width = 48;
  cfg.train.epochs = 25;
  cfg.train.seed = 1;
  const ValueStack stack = solve(spec, data, SolveMode::partial, cfg);

  long violations = 0;
  const RandomStream rs = make_stream(123, StreamTag::eval_points, 0, 0);
  std::vector<double> x(4);
  for (int q = 0; q < 10000; ++q) {
    for (int k = 0; k < 4; ++k) {
      x[k] = 3.0 * rs.uniform(static_cast<std::uint32_t>(q * 8 + k));
    }
    const SurvivalVector i{rs.bits32(static_cast<std::uint32_t>(q * 8 + 5)) & 0xFu};
    const int n = static_cast<int>(rs.bits32(static_cast<std::uint32_t>(q * 8 + 6)) % 4);
    if (value_partial(stack, n, x, i).value > value_exhaustive(stack, n, x, i).value) {
      ++violations;
    }
  }
  detail = "exact tables dominated; " + std::to_string(violations) +
           " violations in 10000 shared-stack queries";
  return violations == 0;
}

// ---------------------------------------------------------------------------
// 3. Gradient check: 10^3 random (net, input, target) triples, analytic vs
//    central finite differences, per-coordinate relative error <= 1e-5.
bool criterion_gradients(std::string& detail) {
  constexpr double kStep = 1e-6;
  constexpr double kTol = 1e-5;
  const Activation acts[] = {Activation::tanh, Activation::relu, Activation::sigmoid};
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const RandomStream rs =
        make_stream(31337, StreamTag::instance_gen, static_cast<std::uint32_t>(t), 0);
    std::uint32_t idx = 0;
    const int dim = 1 + static_cast<int>(rs.bits32(idx++) % 6);
    const int width = 1 + static_cast<int>(rs.bits32(idx++) % 8);
    ShallowNet net = make_shallow_net(dim, width, acts[t % 3],
                                      777 + static_cast<std::uint64_t>(t));
    std::vector<double> theta(net.param_count());
    for (double& v : theta) v = 2.0 * rs.uniform(idx++) - 1.0;
    net.set_params(theta);
    std::vector<double> input(dim);
    for (double& v : input) v = 1.5 * (2.0 * rs.uniform(idx++) - 1.0);
    const double target = 2.0 * (2.0 * rs.uniform(idx++) - 1.0);

    std::vector<double> analytic(net.param_count());
    grad(net, input, target, analytic);
    for (std::size_t q = 0; q < theta.size(); ++q) {
      const double saved = theta[q];
      theta[q] = saved + kStep;
      net.set_params(theta);
      const double up = net.forward(input) - target;
      theta[q] = saved - kStep;
      net.set_params(theta);
      const double dn = net.forward(input) - target;
      theta[q] = saved;
      net.set_params(theta);
      const double fd = (0.5 * up * up - 0.5 * dn * dn) / (2.0 * kStep);
      const double rel = std::abs(analytic[q] - fd) /
                         std::max({std::abs(analytic[q]), std::abs(fd), 1e-4});
      worst = std::max(worst, rel);
      if (rel > kTol) {
        detail = "triple " + std::to_string(t) + ", parameter " + std::to_string(q) +
                 ": relative error " + fmt(rel);
        return false;
      }
    }
  }
  detail = "1000 triples, worst relative error " + fmt(worst);
  return true;
}

// ---------------------------------------------------------------------------
// 4. Stopping-schedule serializer: exhaustive enumeration over N <= 3,
//    p <= 5 with membership, delay bound and prefix causality.
bool criterion_serializer(std::string& detail) {
  long schedules = 0;
  for (int n_comp = 1; n_comp <= 3; ++n_comp) {
    for (int p = 1; p <= 5; ++p) {
      const long count = static_cast<long>(std::pow(p + 1, n_comp));
      std::vector<std::vector<int>> inputs(count), outputs(count);
      for (long code = 0; code < count; ++code) {
        std::vector<int> stops(n_comp);
        long rest = code;
        for (int k = 0; k < n_comp; ++k) {
          stops[k] = static_cast<int>(rest % (p + 1));
          rest /= (p + 1);
        }
        const StopSchedule out = serialize_stops(stops, p);
        ++schedules;
        if (!out.pairwise_distinct) {
          detail = "membership failed at N=" + std::to_string(n_comp) +
                   " p=" + std::to_string(p);
          return false;
        }
        for (int k = 0; k < n_comp; ++k) {
          const int delay = out.stops[k] - stops[k];
          if (delay < 0 || delay > n_comp) {
            detail = "delay bound failed: component " + std::to_string(k + 1) +
                     " moved " + std::to_string(delay) + " steps";
            return false;
          }
        }
        inputs[code] = std::move(stops);
        outputs[code] = out.stops;
      }
      auto capped = [](const std::vector<int>& stops, int n) {
        std::vector<int> capped_stops(stops.size());
        for (std::size_t k = 0; k < stops.size(); ++k) {
          capped_stops[k] = stops[k] <= n ? stops[k] : n + 1;
        }
        return capped_stops;
      };
      for (long a = 0; a < count; ++a) {
        for (long b = a + 1; b < count; ++b) {
          for (int n = 0; n < p; ++n) {
            if (capped(inputs[a], n) != capped(inputs[b], n)) continue;
            if (capped(outputs[a], n) != capped(outputs[b], n)) {
              detail = "causality failed at prefix " + std::to_string(n) +
                       " (N=" + std::to_string(n_comp) + ", p=" + std::to_string(p) + ")";
              return false;
            }
          }
        }
      }
    }
  }
  detail = std::to_string(schedules) + " schedules, all properties hold";
  return true;
}

// ---------------------------------------------------------------------------
// 5. Nonlinear closed-form study: N = 5 log-utility, partial solver at
//    defaults; relative L2 error along the 101-point diagonal <= 5% and the
//    rollout within 3 standard errors of-or-below the closed form.
bool criterion_log_utility(std::string& detail) {
  Timer timer;
  LogUtilityParams params;
  params.num_components = 5;
  params.drifts = std::vector<double>(5, -0.05);
  params.vols = std::vector<double>(5, 0.2);
  params.horizon = 1.0;
  params.num_steps = 10;
  params.initial_state = std::vector<double>(5, 1.0);
  const ProblemSpec spec = make_log_utility_problem(params);
  const StateLaw law = StateLaw::uniform_box(std::vector<double>(5, 0.0),
                                             std::vector<double>(5, 3.0));
  const TrainingSet data = draw_training_set(spec, 1L << 14, law, 1);

  SolveConfig cfg;
  cfg.train.learning_rate = 3e-3;
  cfg.train.epochs = 60;
  cfg.train.batch = 512;
  cfg.train.seed = 1;
  const ValueStack stack = solve(spec, data, SolveMode::partial, cfg);

  const auto grid = linspace(0.5, 2.0, 101);
  const auto curve = diagonal_value_curve(stack, grid);
  std::vector<double> oracle(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) oracle[g] = std::log1p(grid[g]);
  const double rel = curve_relative_l2_error(curve, oracle, 1e-8);

  auto shared = std::make_shared<const ValueStack>(stack);
  const StoppingPolicy policy(shared);
  const EvalReport rollout = rollout_policy(spec, policy, 1L << 16, 99);
  const double reference = std::log(2.0);
  const double elapsed = timer.seconds();

  detail = "relative L2 = " + fmt(rel) + " (limit 0.05), J0 = " + fmt(rollout.estimate) +
           " +- " + fmt(rollout.std_error) + " vs log 2 = " + fmt(reference) + ", " +
           fmt(elapsed) + "s";
  const bool rollout_ok = rollout.estimate <= reference + 3.0 * rollout.std_error;
  return rel <= 0.05 && rollout_ok && elapsed < 600.0;
}

// ---------------------------------------------------------------------------
// 6. Multi American put: binomial oracle vs r = 0 Black-Scholes closed form,
//    and the solved diagonal within 5% relative L2 of the summed 1-D oracle
//    values on the at-the-money region.
bool criterion_multi_put(std::string& detail) {
  Timer timer;
  auto norm_cdf = [](double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); };
  const double closed_form = 100.0 * (norm_cdf(0.1) - norm_cdf(-0.1));  // 7.9656
  const double tree = binomial_put(100.0, 100.0, 0.0, 0.2, 1.0, 2000);
  if (std::abs(tree - closed_form) > 0.01) {
    detail = "binomial tree " + fmt(tree) + " vs closed form " + fmt(closed_form);
    return false;
  }

  PutParams params;
  params.num_components = 5;
  params.strikes = std::vector<double>(5, 100.0);
  params.drifts = std::vector<double>(5, 0.05);
  params.vols = std::vector<double>(5, 0.2);
  params.horizon = 1.0;
  params.num_steps = 10;
  params.initial_state = std::vector<double>(5, 100.0);
  const ProblemSpec spec = make_put_problem(params);
  const StateLaw law = StateLaw::uniform_box(std::vector<double>(5, 50.0),
                                             std::vector<double>(5, 150.0));
  const TrainingSet data = draw_training_set(spec, 1L << 14, law, 1);

  SolveConfig cfg;
  cfg.train.learning_rate = 3e-3;
  cfg.train.epochs = 60;
  cfg.train.batch = 512;
  cfg.train.seed = 1;
  const ValueStack stack = solve(spec, data, SolveMode::exhaustive, cfg);

  const auto grid = linspace(80.0, 120.0, 101);
  std::vector<double> oracle(grid.size());
  parallel_for(grid.size(), 1, [&](std::size_t g0, std::size_t g1) {
    for (std::size_t g = g0; g < g1; ++g) {
      oracle[g] = 5.0 * binomial_put(grid[g], 100.0, 0.05, 0.2, 1.0, 2000);
    }
  });
  const auto curve = diagonal_value_curve(stack, grid);
  const double rel = curve_relative_l2_error(curve, oracle, 1e-8);
  const double elapsed = timer.seconds();

  detail = "binomial vs closed form |diff| = " + fmt(std::abs(tree - closed_form)) +
           ", diagonal relative L2 = " + fmt(rel) + " (limit 0.05), " + fmt(elapsed) +
           "s";
  return rel <= 0.05 && elapsed < 600.0;
}

// ---------------------------------------------------------------------------
// 7. Rate machinery: exact synthetic slopes, then the small real log-utility
//    rate study reporting slope mean +- std over 5 seeds.
bool criterion_rate_study(std::string& detail) {
  std::vector<std::pair<double, double>> linear, root, flat;
  for (const double p : {5.0, 10.0, 20.0, 40.0}) {
    const double h = 1.0 / p;
    linear.emplace_back(p, h);
    root.emplace_back(p, std::sqrt(h));
    flat.emplace_back(p, 0.2);
  }
  if (std::abs(fit_rate(linear, 1.0).slope - 1.0) > 1e-6 ||
      std::abs(fit_rate(root, 1.0).slope - 0.5) > 1e-6 ||
      std::abs(fit_rate(flat, 1.0).slope) > 1e-6) {
    detail = "synthetic power-law slopes not recovered";
    return false;
  }

  LogUtilityParams params;
  params.num_components = 5;
  params.drifts = std::vector<double>(5, -0.05);
  params.vols = std::vector<double>(5, 0.2);
  params.horizon = 1.0;
  params.initial_state = std::vector<double>(5, 1.0);
  const StateLaw law = StateLaw::uniform_box(std::vector<double>(5, 0.0),
                                             std::vector<double>(5, 3.0));
  const auto grid = linspace(0.5, 2.0, 101);
  std::vector<double> oracle(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) oracle[g] = std::log1p(grid[g]);

  std::vector<double> slopes;
  for (long seed = 1; seed <= 5; ++seed) {
    std::vector<std::pair<double, double>> points;
    for (const int p : {5, 10, 20}) {
      params.num_steps = p;
      const ProblemSpec spec = make_log_utility_problem(params);
      const TrainingSet data = draw_training_set(spec, 4096, law, seed);
      SolveConfig cfg;
      cfg.width = 64;
      cfg.train.learning_rate = 3e-3;
      cfg.train.epochs = 40;
      cfg.train.batch = 256;
      cfg.train.seed = static_cast<std::uint64_t>(seed);
      const ValueStack stack = solve(spec, data, SolveMode::partial, cfg);
      const double err =
          curve_l2_error(diagonal_value_curve(stack, grid), oracle);
      if (!(err > 0.0) || !std::isfinite(err)) {
        detail = "degenerate diagonal error in the rate study";
        return false;
      }
      points.emplace_back(static_cast<double>(p), err);
    }
    slopes.push_back(fit_rate(points, 1.0).slope);
  }
  double mean = 0.0;
  for (double s : slopes) mean += s;
  mean /= static_cast<double>(slopes.size());
  double var = 0.0;
  for (double s : slopes) var += (s - mean) * (s - mean);
  const double std_dev = std::sqrt(var / (slopes.size() - 1.0));
  detail = "synthetic slopes exact; log-utility study slope = " + fmt(mean) + " +- " +
           fmt(std_dev) + " over 5 seeds (documented expectation: error decreasing in p)";
  return true;
}

// ---------------------------------------------------------------------------
// 8. Determinism: identical config + seeds give byte-identical CSVs for
//    different worker counts.
bool criterion_determinism(std::string& detail) {
  const ExperimentConfig cfg =
      experiment_config_from_text(bundled_config("smoke_n3"), "smoke_n3.cfg");
  const auto root_a = std::filesystem::temp_directory_path() / "mstop_acc_det_a";
  const auto root_b = std::filesystem::temp_directory_path() / "mstop_acc_det_b";
  std::filesystem::remove_all(root_a);
  std::filesystem::remove_all(root_b);

  const int saved = worker_count();
  set_worker_count(2);
  const ExperimentResult res_a = run_experiment(cfg, root_a);
  set_worker_count(1);
  const ExperimentResult res_b = run_experiment(cfg, root_b);
  set_worker_count(saved);

  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
  };
  long compared = 0;
  for (const auto& entry : std::filesystem::directory_iterator(res_a.out_dir)) {
    if (entry.path().extension() != ".csv") continue;
    ++compared;
    const auto twin = res_b.out_dir / entry.path().filename();
    if (!std::filesystem::exists(twin) ||
        slurp(entry.path()) != slurp(twin)) {
      detail = "CSV mismatch for " + entry.path().filename().string();
      return false;
    }
  }
  std::filesystem::remove_all(root_a);
  std::filesystem::remove_all(root_b);
  detail = std::to_string(compared) + " CSV files byte-identical across worker counts";
  return compared > 0;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "oracle equivalence (tabular solve vs exact DP)", criterion_oracle_equivalence},
      {2, "dominance (partial <= exhaustive)", criterion_dominance},
      {3, "gradient check vs central differences", criterion_gradients},
      {4, "stopping-schedule serializer enumeration", criterion_serializer},
      {5, "log-utility closed-form study", criterion_log_utility},
      {6, "multi American put separability", criterion_multi_put},
      {7, "rate-fit sanity and log-utility rate study", criterion_rate_study},
      {8, "byte-identical CSVs across worker counts", criterion_determinism},
  };

  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (!selected.empty() && !selected.count(criterion.id)) continue;
    std::string detail;
    bool pass = false;
    try {
      pass = criterion.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion.id << ": "
              << criterion.name << " - " << detail << "\n"
              << std::flush;
    if (!pass) ++failures;
  }
  return failures;
}
