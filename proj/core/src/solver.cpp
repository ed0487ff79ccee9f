#include "mstop/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mstop/parallel.hpp"
#include "mstop/rng.hpp"

namespace mstop {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

// Core maximization shared by value queries, policy decisions and target
// construction. First maximizer in the deterministic candidate order wins,
// so ties prefer continuing: exhaustive order is descending submasks with i
// first; partial order is l = 0, then alive l ascending.
ValueResult maximize(const ProblemSpec& pb, const Regressor& u, SolveMode mode,
                     int n, std::span<const double> x, SurvivalVector i) {
  ValueResult best;
  if (mode == SolveMode::exhaustive) {
    bool first = true;
    for_each_submask(i, [&](SurvivalVector cand) {
      const double v = pb.running_reward(n, x, i, cand) + u.value(x, cand);
      ++best.candidates;
      if (first || v > best.value) {
        best.value = v;
        best.decision = cand;
        first = false;
      }
    });
    return best;
  }
  best.value = pb.running_reward(n, x, i, i) + u.value(x, i);
  best.decision = i;
  best.drop_index = 0;
  best.candidates = 1;
  for (int ell = 1; ell <= pb.num_components; ++ell) {
    if (!i.alive(ell - 1)) continue;  // duplicates the l = 0 candidate
    const SurvivalVector cand{i.bits & ~(1u << (ell - 1))};
    const double v = pb.running_reward(n, x, i, cand) + u.value(x, cand);
    ++best.candidates;
    if (v > best.value) {
      best.value = v;
      best.decision = cand;
      best.drop_index = ell;
    }
  }
  return best;
}

// V_{n}(., .) as a standalone callable: the terminal reward when n == p,
// otherwise the maximization over U_n.
ValueFn make_value_fn(std::shared_ptr<const ProblemSpec> pb, SolveMode mode, int n,
                      std::shared_ptr<const Regressor> u_n) {
  if (!u_n) {
    return [pb](std::span<const double> x, SurvivalVector i) {
      return pb->terminal_reward(x, i);
    };
  }
  return [pb, mode, n, u_n](std::span<const double> x, SurvivalVector i) {
    return maximize(*pb, *u_n, mode, n, x, i).value;
  };
}

std::string tabular_key(std::span<const double> x, SurvivalVector i) {
  std::string key(sizeof(std::uint32_t) + x.size() * sizeof(double), '\0');
  std::memcpy(key.data(), &i.bits, sizeof(std::uint32_t));
  std::memcpy(key.data() + sizeof(std::uint32_t), x.data(), x.size() * sizeof(double));
  return key;
}

}  // namespace

const char* mode_name(SolveMode m) {
  return m == SolveMode::exhaustive ? "exhaustive" : "partial";
}

SolveMode parse_mode(const std::string& name) {
  if (name == "exhaustive") return SolveMode::exhaustive;
  if (name == "partial") return SolveMode::partial;
  throw ConfigError("unknown solver mode '" + name + "' (exhaustive, partial)");
}

const char* backend_name(BackendKind b) {
  return b == BackendKind::shallow_net ? "shallow_net" : "tabular_exact";
}

BackendKind parse_backend(const std::string& name) {
  if (name == "shallow_net" || name == "net") return BackendKind::shallow_net;
  if (name == "tabular_exact" || name == "tabular") return BackendKind::tabular_exact;
  throw ConfigError("unknown backend '" + name + "' (shallow_net, tabular_exact)");
}

double NetRegressor::value(std::span<const double> x, SurvivalVector i) const {
  thread_local std::vector<double> input;
  const std::size_t n = x.size();
  input.resize(2 * n);
  std::copy(x.begin(), x.end(), input.begin());
  for (std::size_t k = 0; k < n; ++k) {
    input[n + k] = i.alive(static_cast<int>(k)) ? 1.0 : 0.0;
  }
  return net_.forward(input);
}

TabularRegressor::TabularRegressor(std::shared_ptr<const ProblemSpec> problem,
                                   int step, ValueFn next_value)
    : problem_(std::move(problem)), step_(step), next_value_(std::move(next_value)) {
  if (problem_->noise.kind != NoiseLaw::Kind::finite) {
    throw ConfigError("the tabular backend needs a finite-support noise law");
  }
}

double TabularRegressor::value(std::span<const double> x, SurvivalVector i) const {
  const std::string key = tabular_key(x, i);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  const NoiseLaw& law = problem_->noise;
  std::vector<double> incr(x.size());
  std::vector<double> next(x.size());
  double acc = 0.0;
  for (std::size_t a = 0; a < law.atoms.size(); ++a) {
    problem_->transition(step_, x, law.atoms[a], incr);
    std::copy(x.begin(), x.end(), next.begin());
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (i.alive(static_cast<int>(k))) next[k] += incr[k];
    }
    acc += law.probs[a] * next_value_(next, i);
  }
  std::lock_guard<std::mutex> lock(mutex_);
  memo_.emplace(std::move(key), acc);
  return acc;
}

double ValueStack::u_value(int n, std::span<const double> x, SurvivalVector i) const {
  require(n >= 0 && n < num_steps(), "u_value: step outside [0, p)");
  return u[static_cast<std::size_t>(n)]->value(x, i);
}

ValueResult ValueStack::value(int n, std::span<const double> x, SurvivalVector i) const {
  return value(n, x, i, mode);
}

ValueResult ValueStack::value(int n, std::span<const double> x, SurvivalVector i,
                              SolveMode mode_override) const {
  require(n >= 0 && n <= num_steps(), "value: step outside [0, p]");
  if (n == num_steps()) {
    ValueResult r;
    r.value = problem->terminal_reward(x, i);
    r.decision = i;
    return r;
  }
  return maximize(*problem, *u[static_cast<std::size_t>(n)], mode_override, n, x, i);
}

ValueResult value_exhaustive(const ValueStack& stack, int n,
                             std::span<const double> x, SurvivalVector i) {
  return stack.value(n, x, i, SolveMode::exhaustive);
}

ValueResult value_partial(const ValueStack& stack, int n, std::span<const double> x,
                          SurvivalVector i) {
  return stack.value(n, x, i, SolveMode::partial);
}

StoppingPolicy::StoppingPolicy(std::shared_ptr<const ValueStack> stack)
    : stack_(std::move(stack)), mode_(stack_->mode) {}

StoppingPolicy::StoppingPolicy(std::shared_ptr<const ValueStack> stack, SolveMode mode)
    : stack_(std::move(stack)), mode_(mode) {}

SurvivalVector StoppingPolicy::decide(int n, std::span<const double> x,
                                      SurvivalVector i) const {
  if (i.none()) return i;
  return stack_->value(n, x, i, mode_).decision;
}

namespace {

// Assembles the regression design matrix [M x 2N] for step n.
void assemble_inputs(const TrainingSet& data, int n, std::vector<double>& inputs) {
  const int n_comp = data.num_components;
  const long rows = data.sample_count;
  inputs.resize(static_cast<std::size_t>(rows) * 2 * n_comp);
  parallel_for(static_cast<std::size_t>(rows), 1024, [&](std::size_t m0, std::size_t m1) {
    for (std::size_t m = m0; m < m1; ++m) {
      const auto x = data.state(n, static_cast<long>(m));
      const SurvivalVector mask = data.mask(n, static_cast<long>(m));
      double* row = inputs.data() + m * 2 * n_comp;
      for (int k = 0; k < n_comp; ++k) {
        row[k] = x[k];
        row[n_comp + k] = mask.alive(k) ? 1.0 : 0.0;
      }
    }
  });
}

// Targets y_m = next_value(X_m + F_n(X_m, eps_m) (.) I_m, I_m).
void build_targets(std::shared_ptr<const ProblemSpec> pb, int n,
                   const TrainingSet& data, const ValueFn& next_value,
                   std::vector<double>& targets) {
  const int n_comp = data.num_components;
  const long rows = data.sample_count;
  targets.resize(static_cast<std::size_t>(rows));
  parallel_for(static_cast<std::size_t>(rows), 256, [&](std::size_t m0, std::size_t m1) {
    std::vector<double> incr(static_cast<std::size_t>(n_comp));
    std::vector<double> next(static_cast<std::size_t>(n_comp));
    for (std::size_t m = m0; m < m1; ++m) {
      const auto x = data.state(n, static_cast<long>(m));
      const SurvivalVector mask = data.mask(n, static_cast<long>(m));
      pb->transition(n, x, data.shock(n, static_cast<long>(m)), incr);
      std::copy(x.begin(), x.end(), next.begin());
      for (int k = 0; k < n_comp; ++k) {
        if (mask.alive(k)) next[static_cast<std::size_t>(k)] += incr[static_cast<std::size_t>(k)];
      }
      targets[m] = next_value(next, mask);
    }
  });
}

}  // namespace

std::shared_ptr<const Regressor> regress_step(const SolveConfig& cfg,
                                              std::shared_ptr<const ProblemSpec> problem,
                                              int n, const TrainingSet& data,
                                              const ValueFn& next_value,
                                              const ShallowNet* warm_from,
                                              const ShallowNet* norm_template,
                                              StepDiagnostics* diag) {
  if (cfg.backend == BackendKind::tabular_exact) {
    if (diag) {
      diag->step = n;
      diag->mse = 0.0;
      diag->epochs = 0;
    }
    return std::make_shared<TabularRegressor>(std::move(problem), n, next_value);
  }

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> inputs, targets;
  assemble_inputs(data, n, inputs);
  build_targets(problem, n, data, next_value, targets);

  const int input_dim = 2 * data.num_components;
  const int width =
      cfg.width > 0
          ? cfg.width
          : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(data.sample_count))));

  ShallowNet net;
  if (warm_from != nullptr) {
    net = *warm_from;
  } else {
    net = make_shallow_net(input_dim, width, cfg.activation,
                           detail::mix64(cfg.train.seed + 0x9E37u) +
                               static_cast<std::uint64_t>(n));
    if (norm_template != nullptr) {
      net.in_shift = norm_template->in_shift;
      net.in_scale = norm_template->in_scale;
    } else {
      fit_normalization(net, inputs);
    }
  }

  TrainConfig tc = cfg.train;
  tc.seed = detail::mix64(cfg.train.seed ^ (0x5DEECE66Dull * (n + 1)));
  const FitResult fit = fit_lsq(net, inputs, targets, tc);

  if (diag) {
    diag->step = n;
    diag->mse = fit.final_mse;
    diag->epochs = fit.epochs_run;
    diag->learning_rate = tc.learning_rate;
    diag->seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return std::make_shared<NetRegressor>(std::move(net));
}

ValueStack solve(const ProblemSpec& spec, const TrainingSet& data, SolveMode mode,
                 const SolveConfig& cfg) {
  require(spec.num_components >= 1 && spec.num_components <= kMaxComponents,
          "solve: component count outside [1, " + std::to_string(kMaxComponents) + "]");
  require(data.num_components == spec.num_components &&
              data.num_steps == spec.num_steps && data.noise_dim == spec.noise_dim,
          "training set does not match the problem (regenerate it for this spec)");
  if (cfg.backend == BackendKind::tabular_exact) {
    require(spec.noise.kind == NoiseLaw::Kind::finite,
            "the tabular backend needs a finite-support noise law");
  }

  auto pb = std::make_shared<const ProblemSpec>(spec);
  const int p = spec.num_steps;
  ValueStack stack;
  stack.mode = mode;
  stack.backend = cfg.backend;
  stack.problem = pb;
  stack.u.resize(static_cast<std::size_t>(p));
  stack.diagnostics.resize(static_cast<std::size_t>(p));

  // The sampling law is time-homogeneous, so one input standardization
  // (fitted on the step-0 slice) serves every step.
  ShallowNet norm_template;
  if (cfg.backend == BackendKind::shallow_net) {
    std::vector<double> inputs0;
    assemble_inputs(data, 0, inputs0);
    norm_template = make_shallow_net(2 * spec.num_components, 1, cfg.activation, 0);
    fit_normalization(norm_template, inputs0);
  }

  std::shared_ptr<const Regressor> next;  // empty: V_p = terminal reward
  double prev_mse = -1.0;
  for (int n = p - 1; n >= 0; --n) {
    const ValueFn next_value = make_value_fn(pb, mode, n + 1, next);
    StepDiagnostics diag;
    std::shared_ptr<const Regressor> fitted;

    if (cfg.backend == BackendKind::tabular_exact) {
      fitted = regress_step(cfg, pb, n, data, next_value, nullptr, nullptr, &diag);
    } else {
      const ShallowNet* warm = nullptr;
      if (cfg.warm_start && next) {
        warm = &static_cast<const NetRegressor&>(*next).net();
      }
      fitted = regress_step(cfg, pb, n, data, next_value, warm, &norm_template, &diag);

      const bool diverged = prev_mse >= 0.0 &&
                            diag.mse > cfg.divergence_factor * prev_mse &&
                            diag.mse > cfg.divergence_floor;
      if (diverged) {
        SolveConfig retry_cfg = cfg;
        retry_cfg.train.learning_rate *= 0.5;
        StepDiagnostics retry_diag;
        fitted = regress_step(retry_cfg, pb, n, data, next_value, warm, &norm_template,
                              &retry_diag);
        retry_diag.retried = true;
        if (retry_diag.mse > cfg.divergence_factor * prev_mse &&
            retry_diag.mse > cfg.divergence_floor) {
          throw NumericError(
              "regression diverged at step " + std::to_string(n) + ": MSE " +
              std::to_string(retry_diag.mse) + " vs previous step's " +
              std::to_string(prev_mse) + " after a halved-rate retry");
        }
        diag = retry_diag;
      }
      prev_mse = diag.mse;
    }

    stack.u[static_cast<std::size_t>(n)] = fitted;
    stack.diagnostics[static_cast<std::size_t>(n)] = diag;
    next = fitted;
  }
  return stack;
}

std::vector<ShallowNet> distill_values(const ValueStack& stack, const TrainingSet& data,
                                       const SolveConfig& cfg) {
  require(stack.backend == BackendKind::shallow_net,
          "distillation applies to shallow-net stacks");
  const int p = stack.num_steps();
  std::vector<ShallowNet> nets;
  nets.reserve(static_cast<std::size_t>(p));
  for (int n = 0; n < p; ++n) {
    std::vector<double> inputs, targets;
    assemble_inputs(data, n, inputs);
    targets.resize(static_cast<std::size_t>(data.sample_count));
    parallel_for(static_cast<std::size_t>(data.sample_count), 256,
                 [&](std::size_t m0, std::size_t m1) {
      for (std::size_t m = m0; m < m1; ++m) {
        targets[m] = stack.value(n, data.state(n, static_cast<long>(m)),
                                 data.mask(n, static_cast<long>(m)))
                         .value;
      }
    });
    ShallowNet net = static_cast<const NetRegressor&>(*stack.u[static_cast<std::size_t>(n)]).net();
    TrainConfig tc = cfg.train;
    tc.seed = detail::mix64(cfg.train.seed ^ (0xD1570ull + static_cast<std::uint64_t>(n)));
    fit_lsq(net, inputs, targets, tc);
    nets.push_back(std::move(net));
  }
  return nets;
}

namespace {

constexpr std::uint32_t kStackMagic = 0x5356534Du;  // "MSVS"
constexpr std::uint32_t kStackVersion = 1;

}  // namespace

void save_value_stack(const ValueStack& stack, const std::filesystem::path& path) {
  if (stack.backend != BackendKind::shallow_net) {
    throw ConfigError(
        "only shallow-net stacks serialize; tabular regressors are lazy views "
        "of the problem with no persistable state");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  auto write_u32 = [&os](std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  write_u32(kStackMagic);
  write_u32(kStackVersion);
  write_u32(static_cast<std::uint32_t>(stack.mode));
  write_u32(static_cast<std::uint32_t>(stack.backend));
  write_u32(static_cast<std::uint32_t>(stack.problem->num_components));
  write_u32(static_cast<std::uint32_t>(stack.num_steps()));
  for (const auto& reg : stack.u) {
    write_net(static_cast<const NetRegressor&>(*reg).net(), os);
  }
  if (!os) throw ConfigError("write failed for " + path.string());
}

ValueStack load_value_stack(const std::filesystem::path& path,
                            const ProblemSpec& problem) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path.string());
  auto read_u32 = [&is] {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
  };
  if (read_u32() != kStackMagic) {
    throw ConfigError(path.string() + " is not a serialized value stack");
  }
  if (read_u32() != kStackVersion) {
    throw ConfigError(path.string() + " has an unsupported stack version");
  }
  ValueStack stack;
  stack.mode = static_cast<SolveMode>(read_u32());
  stack.backend = static_cast<BackendKind>(read_u32());
  const int n_comp = static_cast<int>(read_u32());
  const int p = static_cast<int>(read_u32());
  require(n_comp == problem.num_components && p == problem.num_steps,
          "serialized stack does not match the supplied problem");
  stack.problem = std::make_shared<const ProblemSpec>(problem);
  stack.u.reserve(static_cast<std::size_t>(p));
  for (int n = 0; n < p; ++n) {
    stack.u.push_back(std::make_shared<NetRegressor>(read_net(is)));
  }
  stack.diagnostics.resize(static_cast<std::size_t>(p));
  if (!is) throw ConfigError("truncated value stack: " + path.string());
  return stack;
}

}  // namespace mstop
