#pragma once

// Discrete-time multiple stopping instances. The controlled dynamics are
//   X_{n+1} = X_n + F_n(X_n, eps_{n+1}) (.) I_{n+1}
// with Hadamard masking by the survival vector, the objective accumulates
// running rewards c_n(X_n, I_n, I_{n+1}) over n < p plus a terminal reward
// at step p evaluated on the frozen state.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mstop/survival.hpp"

namespace mstop {

// Law of the one-step shock vector eps in R^d.
struct NoiseLaw {
  enum class Kind { gaussian, finite };

  Kind kind = Kind::gaussian;
  int dim = 1;
  // gaussian: i.i.d. N(0, stddev^2) per coordinate.
  double stddev = 1.0;
  // finite: atoms[a] is a d-vector drawn with probability probs[a].
  std::vector<std::vector<double>> atoms;
  std::vector<double> probs;

  static NoiseLaw standard_gaussian(int dim, double stddev = 1.0);
  static NoiseLaw finite_support(std::vector<std::vector<double>> atoms,
                                 std::vector<double> probs);
};

// F_n(x, eps) -> R^N. Writes into `out` (size N); the caller applies the
// survival mask.
using TransitionFn = std::function<void(int n, std::span<const double> x,
                                        std::span<const double> eps,
                                        std::span<double> out)>;

// c_n(x, i, i') >= 0, with c_n(x, i, i) = 0. Only evaluated with i' <= i.
using RunningRewardFn = std::function<double(int n, std::span<const double> x,
                                             SurvivalVector i, SurvivalVector i_next)>;

// Terminal reward at step p on the frozen state. The survival vector at p is
// passed alongside so rewards collected at stopping transitions are not
// collected a second time at the terminal date; i-independent rewards simply
// ignore it.
using TerminalRewardFn =
    std::function<double(std::span<const double> x, SurvivalVector i)>;

struct ProblemSpec {
  int num_components = 0;  // N
  int num_steps = 0;       // p
  int noise_dim = 0;       // d
  NoiseLaw noise;
  TransitionFn transition;
  RunningRewardFn running_reward;
  TerminalRewardFn terminal_reward;
  std::vector<double> initial_state;  // X_0
  std::string name;

  // Convenience wrapper around `transition`.
  std::vector<double> step_increment(int n, std::span<const double> x,
                                     std::span<const double> eps) const;
};

// Coefficients of an interacting stopped diffusion on [0, T] with p uniform
// Euler steps of size h = T / p. The shock vector has dimension N + 1:
// index 0 is the common Brownian increment, index k >= 1 drives component k.
struct DiffusionSpec {
  int num_components = 0;
  double horizon = 0.0;  // T, in years
  int num_steps = 0;     // p
  std::function<double(int k, double t, std::span<const double> x)> drift;     // b_k
  std::function<double(int k, double t, std::span<const double> x)> idio_vol;  // sigma_k
  std::function<double(double t, std::span<const double> x)> common_vol;       // sigma_0
  std::vector<double> initial_state;

  double step_size() const { return horizon / num_steps; }
};

struct PutParams {
  int num_components = 0;
  std::vector<double> strikes;
  std::vector<double> drifts;
  std::vector<double> vols;
  double horizon = 1.0;
  int num_steps = 1;
  std::vector<double> initial_state;
  // false: Euler increment b h + sigma dW; true: exact GBM step
  // x (exp((mu - sigma^2/2) h + sigma dW) - 1).
  bool exact_gbm_step = false;
};

// Basket of independent American puts: stopping component k collects
// (K_k - x_k)+ at the stopping transition; components never stopped before p
// collect the same payoff at the terminal date.
ProblemSpec make_put_problem(const PutParams& params);

// GBM diffusion underlying the put problem (sigma_0 = 0).
DiffusionSpec put_diffusion(const PutParams& params);

struct LogUtilityParams {
  int num_components = 0;
  std::vector<double> drifts;  // all <= 0
  std::vector<double> vols;
  double horizon = 1.0;
  int num_steps = 1;
  std::vector<double> initial_state;
  bool exact_gbm_step = false;
};

// Terminal reward log(1 + mean(x)) on the frozen state, c == 0. With all
// drifts <= 0 the exact value is log(1 + mean(x_0)) and stopping immediately
// is optimal, which makes this a closed-form validation problem.
ProblemSpec make_log_utility_problem(const LogUtilityParams& params);

double log_utility_terminal(std::span<const double> x);

struct RewardAuditReport {
  long samples = 0;
  double max_abs_diagonal = 0.0;  // max |c_n(x, i, i)| observed
  double min_reward = 0.0;        // min c_n(x, i, i') observed over i' <= i
  bool pass = false;
};

// Randomized audit of the reward contract: c_n(x, i, i) = 0 (pass iff the
// max deviation is <= 1e-12) and c >= 0 on feasible transitions.
RewardAuditReport audit_reward_zero_diag(const ProblemSpec& spec, long samples,
                                         std::uint64_t seed);

}  // namespace mstop
