#pragma once

// Backward induction over a pluggable regression backend. At each step n the
// continuation surface
//   U_n(x, i) = E[ V_{n+1}(x + F_n(x, eps) (.) i, i) ]
// is regressed from the training sample, and values/policies are derived on
// demand by maximizing reward-plus-U over the feasible decisions: all
// submasks i' <= i (exhaustive mode) or the N+1 single-drop candidates
// i^{-l} (partial mode). Only the U_n regressors are stored.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mstop/policy.hpp"
#include "mstop/problem.hpp"
#include "mstop/shallownet.hpp"
#include "mstop/simgen.hpp"

namespace mstop {

enum class SolveMode { exhaustive, partial };
enum class BackendKind { shallow_net, tabular_exact };

const char* mode_name(SolveMode m);
SolveMode parse_mode(const std::string& name);
const char* backend_name(BackendKind b);
BackendKind parse_backend(const std::string& name);

// A fitted continuation surface U_n.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual double value(std::span<const double> x, SurvivalVector i) const = 0;
};

// Shallow network over the concatenated input (x, survival bits as 0/1).
class NetRegressor final : public Regressor {
 public:
  explicit NetRegressor(ShallowNet net) : net_(std::move(net)) {}
  double value(std::span<const double> x, SurvivalVector i) const override;
  const ShallowNet& net() const { return net_; }

 private:
  ShallowNet net_;
};

using ValueFn = std::function<double(std::span<const double>, SurvivalVector)>;

// Exact conditional expectation over a finite noise support, memoized on
// bit-exact (x, i) keys. Evaluation recurses through the captured
// next-step value function down to the terminal reward.
class TabularRegressor final : public Regressor {
 public:
  TabularRegressor(std::shared_ptr<const ProblemSpec> problem, int step,
                   ValueFn next_value);
  double value(std::span<const double> x, SurvivalVector i) const override;

 private:
  std::shared_ptr<const ProblemSpec> problem_;
  int step_;
  ValueFn next_value_;
  mutable std::unordered_map<std::string, double> memo_;
  mutable std::mutex mutex_;
};

struct StepDiagnostics {
  int step = 0;
  double mse = 0.0;
  int epochs = 0;
  double seconds = 0.0;
  double learning_rate = 0.0;
  bool retried = false;
};

struct SolveConfig {
  BackendKind backend = BackendKind::shallow_net;
  int width = 0;  // hidden units; 0 picks ceil(sqrt(M))
  Activation activation = Activation::tanh;
  TrainConfig train;
  bool warm_start = true;  // initialize step n from the trained step n+1
  // A step whose MSE exceeds divergence_factor x the previous step's (and
  // the absolute floor) is retried once at half the learning rate, then the
  // solve aborts.
  double divergence_factor = 10.0;
  double divergence_floor = 1e-8;
};

struct ValueResult {
  double value = 0.0;
  SurvivalVector decision{};  // argmax decision mask
  int drop_index = 0;         // partial mode: argmax l in [N], 0 = continue
  int candidates = 0;         // U evaluations performed
};

struct ValueStack {
  SolveMode mode = SolveMode::exhaustive;
  BackendKind backend = BackendKind::shallow_net;
  std::shared_ptr<const ProblemSpec> problem;
  std::vector<std::shared_ptr<const Regressor>> u;  // U_n, n = 0..p-1
  std::vector<StepDiagnostics> diagnostics;

  int num_steps() const { return problem ? problem->num_steps : 0; }
  double u_value(int n, std::span<const double> x, SurvivalVector i) const;
  // Derived value V_n(x, i); n = p returns the terminal reward.
  ValueResult value(int n, std::span<const double> x, SurvivalVector i) const;
  ValueResult value(int n, std::span<const double> x, SurvivalVector i,
                    SolveMode mode_override) const;
};

ValueResult value_exhaustive(const ValueStack& stack, int n,
                             std::span<const double> x, SurvivalVector i);
ValueResult value_partial(const ValueStack& stack, int n,
                          std::span<const double> x, SurvivalVector i);

// Policy induced by a solved stack; ties prefer continuing.
class StoppingPolicy final : public Policy {
 public:
  explicit StoppingPolicy(std::shared_ptr<const ValueStack> stack);
  StoppingPolicy(std::shared_ptr<const ValueStack> stack, SolveMode mode);
  SurvivalVector decide(int n, std::span<const double> x,
                        SurvivalVector i) const override;
  SolveMode mode() const { return mode_; }
  const char* tie_break() const { return "continue-first"; }

 private:
  std::shared_ptr<const ValueStack> stack_;
  SolveMode mode_;
};

// Fits U_n against targets next_value(X + F(X, eps) (.) I, I) over the
// step-n slice of the training sample. warm_from (optional) seeds the
// network parameters; norm_template supplies the input standardization for
// cold starts.
std::shared_ptr<const Regressor> regress_step(const SolveConfig& cfg,
                                              std::shared_ptr<const ProblemSpec> problem,
                                              int n, const TrainingSet& data,
                                              const ValueFn& next_value,
                                              const ShallowNet* warm_from,
                                              const ShallowNet* norm_template,
                                              StepDiagnostics* diag);

// Runs the full backward induction n = p-1 .. 0 and returns the stack.
ValueStack solve(const ProblemSpec& spec, const TrainingSet& data, SolveMode mode,
                 const SolveConfig& cfg);

// Optional post-pass: fits one network per step to the derived values
// V_n(x, i) over the training sample, trading training time for faster
// inference.
std::vector<ShallowNet> distill_values(const ValueStack& stack,
                                       const TrainingSet& data,
                                       const SolveConfig& cfg);

// Serialization; shallow-net stacks only (tabular regressors are lazy views
// of the problem and have nothing persistable). Round-trips are bit-exact.
void save_value_stack(const ValueStack& stack, const std::filesystem::path& path);
ValueStack load_value_stack(const std::filesystem::path& path,
                            const ProblemSpec& problem);

}  // namespace mstop
