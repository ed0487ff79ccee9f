#include "mstop/selftest.hpp"

#include <cmath>
#include <cstring>
#include <ostream>
#include <sstream>

#include "mstop/evaluate.hpp"
#include "mstop/rng.hpp"
#include "mstop/simgen.hpp"
#include "mstop/solver.hpp"

namespace mstop {

namespace {

std::string describe_state(int n, std::span<const double> x, SurvivalVector i) {
  std::ostringstream os;
  os << "n=" << n << " x=(";
  for (std::size_t k = 0; k < x.size(); ++k) os << (k ? "," : "") << x[k];
  os << ") i=" << i.bits;
  return os.str();
}

// Max |stack value - table value| over every tabulated reachable point.
struct DpComparison {
  double max_abs_diff = 0.0;
  long points = 0;
  std::string worst;
};

DpComparison compare_stack_to_table(const ValueStack& stack, const ExactDpTable& table) {
  DpComparison cmp;
  for (const auto& entry : table.entries()) {
    const double got = stack.value(entry.step, entry.state, entry.mask).value;
    const double diff = std::abs(got - entry.value);
    ++cmp.points;
    if (diff > cmp.max_abs_diff) {
      cmp.max_abs_diff = diff;
      cmp.worst = describe_state(entry.step, entry.state, entry.mask) + " exact=" +
                  std::to_string(entry.value) + " solver=" + std::to_string(got);
    }
  }
  return cmp;
}

}  // namespace

FiniteInstance make_random_finite_instance(std::uint64_t seed) {
  const RandomStream rs = make_stream(seed, StreamTag::instance_gen, 0, 0);
  std::uint32_t idx = 0;
  auto bits = [&] { return rs.bits32(idx++); };
  // Exact dyadic value in [lo, hi] on the 1/8 grid.
  auto dyadic = [&](int lo_eighths, int hi_eighths) {
    const int span = hi_eighths - lo_eighths + 1;
    return (lo_eighths + static_cast<int>(bits() % static_cast<std::uint32_t>(span))) / 8.0;
  };

  const int n_comp = 1 + static_cast<int>(bits() % 3);
  const int steps = 2 + static_cast<int>(bits() % 3);
  const int support = 2 + static_cast<int>(bits() % 2);

  std::vector<std::vector<double>> atoms(static_cast<std::size_t>(support));
  for (auto& atom : atoms) {
    atom.resize(static_cast<std::size_t>(n_comp));
    for (double& v : atom) v = dyadic(-8, 8);
  }
  std::vector<double> probs(static_cast<std::size_t>(support));
  double total = 0.0;
  for (double& w : probs) {
    w = 1.0 + static_cast<double>(bits() % 7);
    total += w;
  }
  for (double& w : probs) w /= total;

  std::vector<double> noise_scale(static_cast<std::size_t>(n_comp));
  for (double& s : noise_scale) s = (bits() % 2 == 0) ? 0.5 : 1.0;

  std::vector<double> stop_weight(static_cast<std::size_t>(n_comp));
  std::vector<double> stop_level(static_cast<std::size_t>(n_comp));
  for (int k = 0; k < n_comp; ++k) {
    stop_weight[static_cast<std::size_t>(k)] = static_cast<double>(bits() % 5) / 4.0;
    stop_level[static_cast<std::size_t>(k)] = dyadic(-8, 8);
  }
  const double step_factor = static_cast<double>(bits() % 3) / 4.0;  // c grows in n

  std::vector<double> lin_w(static_cast<std::size_t>(n_comp));
  std::vector<double> kink_w(static_cast<std::size_t>(n_comp));
  std::vector<double> kink_at(static_cast<std::size_t>(n_comp));
  for (int k = 0; k < n_comp; ++k) {
    lin_w[static_cast<std::size_t>(k)] = dyadic(-8, 8);
    kink_w[static_cast<std::size_t>(k)] = dyadic(-8, 8);
    kink_at[static_cast<std::size_t>(k)] = dyadic(-8, 8);
  }
  const double mask_bonus = dyadic(-4, 4);
  const double base = dyadic(-8, 8);

  FiniteInstance inst;
  ProblemSpec& pb = inst.problem;
  pb.name = "random_finite";
  pb.num_components = n_comp;
  pb.num_steps = steps;
  pb.noise_dim = n_comp;
  pb.noise = NoiseLaw::finite_support(std::move(atoms), std::move(probs));
  pb.initial_state.resize(static_cast<std::size_t>(n_comp));
  for (double& v : pb.initial_state) v = dyadic(-8, 8);

  pb.transition = [noise_scale](int, std::span<const double>,
                                std::span<const double> eps, std::span<double> out) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = noise_scale[k] * eps[k];
  };
  pb.running_reward = [stop_weight, stop_level, step_factor](
                          int n, std::span<const double> x, SurvivalVector i,
                          SurvivalVector i_next) {
    double reward = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (i.alive(static_cast<int>(k)) && !i_next.alive(static_cast<int>(k))) {
        reward += stop_weight[k] * std::max(stop_level[k] - x[k], 0.0);
      }
    }
    return (1.0 + step_factor * n) * reward;
  };
  pb.terminal_reward = [lin_w, kink_w, kink_at, mask_bonus, base](
                           std::span<const double> x, SurvivalVector i) {
    double value = base + mask_bonus * i.count();
    for (std::size_t k = 0; k < x.size(); ++k) {
      value += lin_w[k] * x[k] + kink_w[k] * std::abs(x[k] - kink_at[k]);
    }
    return value;
  };
  return inst;
}

namespace {

CheckResult check_submask_enumeration() {
  CheckResult res{"submask enumeration", true, ""};
  for (std::uint32_t bits = 0; bits < 16 && res.pass; ++bits) {
    const SurvivalVector i{bits};
    const auto subs = enumerate_submasks(i);
    if (subs.size() != (std::size_t{1} << i.count()) || subs.front() != i ||
        subs.back().bits != 0) {
      res.pass = false;
      res.detail = "mask " + std::to_string(bits) + ": wrong size or endpoints";
      break;
    }
    for (std::size_t a = 0; a < subs.size(); ++a) {
      if (!subs[a].subset_of(i) || (a > 0 && subs[a].bits >= subs[a - 1].bits)) {
        res.pass = false;
        res.detail = "mask " + std::to_string(bits) + ": order violated at " +
                     std::to_string(a);
        break;
      }
    }
  }
  if (res.pass) res.detail = "all masks over 4 components";
  return res;
}

CheckResult check_drop_one() {
  CheckResult res{"drop_one", true, ""};
  const SurvivalVector i{0b011};  // components 1 and 2 alive
  if (drop_one(i, 1, 3).bits != 0b010 || drop_one(i, 0, 3) != i ||
      drop_one(i, 3, 3) != i || drop_one(i, 2, 3).bits != 0b001) {
    res.pass = false;
    res.detail = "clear/no-op behaviour wrong on (1,1,0)";
    return res;
  }
  try {
    drop_one(i, 4, 3);
    res.pass = false;
    res.detail = "index 4 > N accepted";
  } catch (const ConfigError&) {
    res.detail = "identity at 0, clears bits, rejects l > N";
  }
  return res;
}

CheckResult check_exact_dp_equivalence(int instances, std::uint64_t seed0) {
  CheckResult res{"tabular solver matches exact DP", true, ""};
  double worst = 0.0;
  long points = 0;
  for (int t = 0; t < instances; ++t) {
    const FiniteInstance inst = make_random_finite_instance(seed0 + static_cast<std::uint64_t>(t));
    const StateLaw law = StateLaw::uniform_box(
        std::vector<double>(static_cast<std::size_t>(inst.problem.num_components), -1.0),
        std::vector<double>(static_cast<std::size_t>(inst.problem.num_components), 1.0));
    const TrainingSet data = draw_training_set(inst.problem, 2, law, 7);
    SolveConfig cfg;
    cfg.backend = BackendKind::tabular_exact;
    for (const auto mode : {SolveMode::exhaustive, SolveMode::partial}) {
      const ValueStack stack = solve(inst.problem, data, mode, cfg);
      const ExactDpTable table = exact_dp(
          inst, mode == SolveMode::exhaustive ? DpVariant::original : DpVariant::alternative);
      const DpComparison cmp = compare_stack_to_table(stack, table);
      points += cmp.points;
      if (cmp.max_abs_diff > worst) worst = cmp.max_abs_diff;
      if (cmp.max_abs_diff > 1e-10) {
        res.pass = false;
        res.detail = "instance " + std::to_string(t) + " (" +
                     std::string(mode_name(mode)) + "): " + cmp.worst;
        return res;
      }
    }
  }
  res.detail = std::to_string(points) + " tabulated points, max diff " +
               std::to_string(worst);
  return res;
}

CheckResult check_dominance(int instances, std::uint64_t seed0) {
  CheckResult res{"alternative DP <= original DP", true, ""};
  long points = 0;
  for (int t = 0; t < instances; ++t) {
    const FiniteInstance inst = make_random_finite_instance(seed0 + static_cast<std::uint64_t>(t));
    const ExactDpTable original = exact_dp(inst, DpVariant::original);
    const ExactDpTable alternative = exact_dp(inst, DpVariant::alternative);
    for (const auto& entry : alternative.entries()) {
      if (!original.contains(entry.step, entry.state, entry.mask)) continue;
      const double orig = original.value(entry.step, entry.state, entry.mask);
      ++points;
      if (entry.value > orig + 1e-12) {
        res.pass = false;
        res.detail = "instance " + std::to_string(t) + ": " +
                     describe_state(entry.step, entry.state, entry.mask) +
                     " alternative=" + std::to_string(entry.value) +
                     " original=" + std::to_string(orig);
        return res;
      }
    }
  }
  res.detail = std::to_string(points) + " points dominated";
  return res;
}

CheckResult check_gradients(int triples, std::uint64_t seed0) {
  CheckResult res{"analytic gradient vs central differences", true, ""};
  constexpr double kStep = 1e-6;
  constexpr double kTol = 1e-5;
  double worst = 0.0;
  const Activation acts[] = {Activation::tanh, Activation::relu, Activation::sigmoid};
  for (int t = 0; t < triples; ++t) {
    const RandomStream rs = make_stream(seed0, StreamTag::instance_gen,
                                        static_cast<std::uint32_t>(t), 1);
    std::uint32_t idx = 0;
    const int dim = 1 + static_cast<int>(rs.bits32(idx++) % 6);
    const int width = 1 + static_cast<int>(rs.bits32(idx++) % 8);
    ShallowNet net = make_shallow_net(dim, width, acts[t % 3],
                                      seed0 ^ static_cast<std::uint64_t>(t));
    const std::size_t params = net.param_count();
    std::vector<double> theta(params);
    for (std::size_t q = 0; q < params; ++q) {
      theta[q] = 2.0 * rs.uniform(idx++) - 1.0;
    }
    net.set_params(theta);
    std::vector<double> input(static_cast<std::size_t>(dim));
    for (double& v : input) v = 1.5 * (2.0 * rs.uniform(idx++) - 1.0);
    const double target = 2.0 * (2.0 * rs.uniform(idx++) - 1.0);

    std::vector<double> analytic(params);
    grad(net, input, target, analytic);

    for (std::size_t q = 0; q < params; ++q) {
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
      // The 1e-4 floor keeps the comparison absolute where the true
      // derivative is ~0 and central differences carry only roundoff.
      const double rel = std::abs(analytic[q] - fd) /
                         std::max({std::abs(analytic[q]), std::abs(fd), 1e-4});
      worst = std::max(worst, rel);
      if (rel > kTol) {
        res.pass = false;
        res.detail = "triple " + std::to_string(t) + " param " + std::to_string(q) +
                     ": analytic=" + std::to_string(analytic[q]) +
                     " fd=" + std::to_string(fd);
        return res;
      }
    }
  }
  res.detail = std::to_string(triples) + " triples, worst relative error " +
               std::to_string(worst);
  return res;
}

std::vector<int> capped_schedule(const std::vector<int>& stops, int n) {
  std::vector<int> capped(stops.size());
  for (std::size_t k = 0; k < stops.size(); ++k) {
    capped[k] = stops[k] <= n ? stops[k] : n + 1;
  }
  return capped;
}

CheckResult check_serializer(int max_components, int max_steps) {
  CheckResult res{"stop serializer (exhaustive)", true, ""};
  long schedules = 0;
  for (int n_comp = 1; n_comp <= max_components; ++n_comp) {
    for (int p = 1; p <= max_steps; ++p) {
      const long count = static_cast<long>(std::pow(p + 1, n_comp));
      std::vector<std::vector<int>> all_serialized(static_cast<std::size_t>(count));
      for (long code = 0; code < count; ++code) {
        std::vector<int> stops(static_cast<std::size_t>(n_comp));
        long rest = code;
        for (int k = 0; k < n_comp; ++k) {
          stops[static_cast<std::size_t>(k)] = static_cast<int>(rest % (p + 1));
          rest /= (p + 1);
        }
        const StopSchedule out = serialize_stops(stops, p);
        all_serialized[static_cast<std::size_t>(code)] = out.stops;
        ++schedules;

        if (!out.pairwise_distinct) {
          res.pass = false;
          res.detail = "membership failed for a schedule with N=" +
                       std::to_string(n_comp) + " p=" + std::to_string(p);
          return res;
        }
        for (int k = 0; k < n_comp; ++k) {
          const int delay = out.stops[static_cast<std::size_t>(k)] -
                            stops[static_cast<std::size_t>(k)];
          if (delay < 0 || delay > n_comp) {
            res.pass = false;
            res.detail = "shift bound violated: component " + std::to_string(k + 1) +
                         " moved by " + std::to_string(delay) +
                         " (N=" + std::to_string(n_comp) + ", p=" + std::to_string(p) + ")";
            return res;
          }
        }
      }
      // Causality: equal stop histories through step n give equal serialized
      // events through step n.
      for (long a = 0; a < count; ++a) {
        std::vector<int> stops_a(static_cast<std::size_t>(n_comp));
        long rest = a;
        for (int k = 0; k < n_comp; ++k) {
          stops_a[static_cast<std::size_t>(k)] = static_cast<int>(rest % (p + 1));
          rest /= (p + 1);
        }
        for (long b = a + 1; b < count; ++b) {
          std::vector<int> stops_b(static_cast<std::size_t>(n_comp));
          rest = b;
          for (int k = 0; k < n_comp; ++k) {
            stops_b[static_cast<std::size_t>(k)] = static_cast<int>(rest % (p + 1));
            rest /= (p + 1);
          }
          for (int n = 0; n < p; ++n) {
            if (capped_schedule(stops_a, n) != capped_schedule(stops_b, n)) continue;
            if (capped_schedule(all_serialized[static_cast<std::size_t>(a)], n) !=
                capped_schedule(all_serialized[static_cast<std::size_t>(b)], n)) {
              res.pass = false;
              res.detail = "causality violated at prefix " + std::to_string(n) +
                           " (N=" + std::to_string(n_comp) + ", p=" + std::to_string(p) + ")";
              return res;
            }
          }
        }
      }
    }
  }
  res.detail = std::to_string(schedules) + " schedules enumerated";
  return res;
}

CheckResult check_binomial_put() {
  CheckResult res{"binomial put vs closed form", true, ""};
  // With zero drift and no discounting the American put equals the
  // Black-Scholes European put at r = 0.
  const double s = 100.0, k = 100.0, vol = 0.2, horizon = 1.0;
  const double d1 = (std::log(s / k) + 0.5 * vol * vol * horizon) / (vol * std::sqrt(horizon));
  const double d2 = d1 - vol * std::sqrt(horizon);
  auto norm_cdf = [](double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); };
  const double reference = k * norm_cdf(-d2) - s * norm_cdf(-d1);
  const double tree = binomial_put(s, k, 0.0, vol, horizon, 2000);
  if (std::abs(tree - reference) > 0.01) {
    res.pass = false;
    res.detail = "tree=" + std::to_string(tree) + " closed form=" + std::to_string(reference);
    return res;
  }
  const double deep_otm = binomial_put(100.0, 1e-9, 0.0, vol, horizon, 64);
  const double itm = binomial_put(50.0, 100.0, 0.05, vol, horizon, 64);
  if (deep_otm != 0.0 || itm < 50.0) {
    res.pass = false;
    res.detail = "payoff floor or intrinsic bound violated";
    return res;
  }
  res.detail = "tree " + std::to_string(tree) + " vs " + std::to_string(reference);
  return res;
}

CheckResult check_freezing() {
  CheckResult res{"freezing invariant on simulated paths", true, ""};
  PutParams params;
  params.num_components = 2;
  params.strikes = {100.0, 100.0};
  params.drifts = {0.05, 0.0};
  params.vols = {0.2, 0.3};
  params.horizon = 1.0;
  params.num_steps = 6;
  params.initial_state = {100.0, 90.0};
  const DiffusionSpec diffusion = put_diffusion(params);
  const StopAllAtStep policy(2);
  const PathBatch paths = simulate_paths(diffusion, &policy, 128, 11);
  const long violations = count_freezing_violations(paths);
  if (violations != 0) {
    res.pass = false;
    res.detail = std::to_string(violations) + " frozen coordinates moved";
    return res;
  }
  res.detail = "128 paths, 0 violations";
  return res;
}

CheckResult check_training_set_determinism() {
  CheckResult res{"training set seed determinism", true, ""};
  LogUtilityParams params;
  params.num_components = 2;
  params.drifts = {-0.05, -0.05};
  params.vols = {0.2, 0.2};
  params.horizon = 1.0;
  params.num_steps = 3;
  params.initial_state = {1.0, 1.0};
  const ProblemSpec spec = make_log_utility_problem(params);
  const StateLaw law = StateLaw::uniform_box({0.0, 0.0}, {2.0, 2.0});
  const TrainingSet a = draw_training_set(spec, 64, law, 42);
  const TrainingSet b = draw_training_set(spec, 64, law, 42);
  const TrainingSet c = draw_training_set(spec, 64, law, 43);
  const bool same = a.states == b.states && a.masks == b.masks && a.shocks == b.shocks;
  const bool differs = a.states != c.states;
  if (!same || !differs) {
    res.pass = false;
    res.detail = same ? "different seeds produced identical draws"
                      : "same seed produced different draws";
    return res;
  }
  res.detail = "same seed identical, different seed differs";
  return res;
}

CheckResult check_reward_audit() {
  CheckResult res{"reward diagonal audit", true, ""};
  PutParams put;
  put.num_components = 2;
  put.strikes = {100.0, 90.0};
  put.drifts = {0.0, 0.05};
  put.vols = {0.2, 0.2};
  put.horizon = 1.0;
  put.num_steps = 4;
  put.initial_state = {100.0, 100.0};
  const RewardAuditReport put_report =
      audit_reward_zero_diag(make_put_problem(put), 512, 3);
  if (!put_report.pass) {
    res.pass = false;
    res.detail = "put problem failed: max |c(x,i,i)| = " +
                 std::to_string(put_report.max_abs_diagonal);
    return res;
  }
  ProblemSpec adversarial = make_put_problem(put);
  adversarial.running_reward = [](int, std::span<const double>, SurvivalVector,
                                  SurvivalVector) { return 1.0; };
  const RewardAuditReport bad = audit_reward_zero_diag(adversarial, 64, 3);
  if (bad.pass) {
    res.pass = false;
    res.detail = "adversarial c(x,i,i) = 1 passed the audit";
    return res;
  }
  res.detail = "constructors pass, injected violation caught";
  return res;
}

CheckResult check_stop_now_rollout() {
  CheckResult res{"stop-everything rollout hits the closed form", true, ""};
  LogUtilityParams params;
  params.num_components = 5;
  params.drifts = std::vector<double>(5, -0.05);
  params.vols = std::vector<double>(5, 0.2);
  params.horizon = 1.0;
  params.num_steps = 4;
  params.initial_state = std::vector<double>(5, 1.0);
  const ProblemSpec spec = make_log_utility_problem(params);
  const StopAllAtStep policy(0);
  const EvalReport report = rollout_policy(spec, policy, 256, 5);
  const double expected = std::log(2.0);
  if (std::abs(report.estimate - expected) > 1e-15 || report.std_error != 0.0) {
    res.pass = false;
    res.detail = "estimate=" + std::to_string(report.estimate) +
                 " se=" + std::to_string(report.std_error);
    return res;
  }
  res.detail = "estimate log(2) with zero variance";
  return res;
}

}  // namespace

std::vector<CheckResult> run_selftest() {
  std::vector<CheckResult> results;
  results.push_back(check_submask_enumeration());
  results.push_back(check_drop_one());
  results.push_back(check_exact_dp_equivalence(6, 100));
  results.push_back(check_dominance(6, 100));
  results.push_back(check_gradients(200, 17));
  results.push_back(check_serializer(3, 4));
  results.push_back(check_binomial_put());
  results.push_back(check_freezing());
  results.push_back(check_training_set_determinism());
  results.push_back(check_reward_audit());
  results.push_back(check_stop_now_rollout());
  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (!r.pass) return false;
  }
  return true;
}

void print_results(const std::vector<CheckResult>& results, std::ostream& os) {
  for (const auto& r : results) {
    os << (r.pass ? "[PASS] " : "[FAIL] ") << r.name;
    if (!r.detail.empty()) os << " - " << r.detail;
    os << "\n";
  }
}

}  // namespace mstop
