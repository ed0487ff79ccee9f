#pragma once

// Forward Monte Carlo evaluation of stopping policies, error metrics and
// empirical convergence-rate fits.

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "mstop/policy.hpp"
#include "mstop/problem.hpp"
#include "mstop/simgen.hpp"
#include "mstop/solver.hpp"

namespace mstop {

struct EvalReport {
  double estimate = 0.0;   // mean total reward over the rollout paths
  double std_error = 0.0;  // sample std / sqrt(paths)
  long paths = 0;
  // stops_per_step[n] counts components stopped by the decision at step n;
  // index p counts components never stopped.
  std::vector<long> stops_per_step;
  std::uint64_t seed = 0;
};

// Simulates `paths` fresh trajectories under the policy (shocks independent
// of any training sample) and accumulates running plus terminal rewards.
// Deterministic for fixed seed, for any worker count.
EvalReport rollout_policy(const ProblemSpec& spec, const Policy& policy, long paths,
                          std::uint64_t seed);

// E_mu[max_i |f(x, i) - ref(x, i)|^2]^{1/2} over the supplied states,
// maximizing over all 2^N survival vectors per state (N <= 16).
double sup_norm_error(const ValueFn& f, const ValueFn& ref,
                      const std::vector<std::vector<double>>& states,
                      int num_components);

// Draws evaluation states from mu (shared sample sets make error estimates
// comparable across functions).
std::vector<std::vector<double>> sample_states(const StateLaw& law, long count,
                                               std::uint64_t seed);

struct RateFit {
  std::vector<std::pair<double, double>> points;  // (p, error)
  double slope = 0.0;      // exponent s in error ~ C h^s, h = T / p
  double intercept = 0.0;  // log C
  double residual = 0.0;   // RMS residual of the log-log fit
};

// Ordinary least squares on (log h, log error). Needs >= 3 points, distinct
// step counts and strictly positive errors.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points,
                 double horizon);

// (x, V_0(x 1, 1)) along the diagonal; p = 0 stacks return the terminal
// reward.
std::vector<std::pair<double, double>> diagonal_value_curve(
    const ValueStack& stack, std::span<const double> grid);
std::vector<std::pair<double, double>> diagonal_value_curve(
    const ValueStack& stack, std::span<const double> grid, SolveMode mode);

// (x, y, V_0((x, y, ..., y), 1)) over the grid product, the two-coordinate
// slice of the value surface.
struct PlanePoint {
  double x = 0.0, y = 0.0, value = 0.0;
};
std::vector<PlanePoint> plane_value_curve(const ValueStack& stack,
                                          std::span<const double> first_axis,
                                          std::span<const double> other_axis);

std::vector<double> linspace(double lo, double hi, int count);

// Root-mean-square gap between a curve and reference values on a shared
// grid; the relative variant divides pointwise by max(|reference|, floor).
double curve_l2_error(std::span<const std::pair<double, double>> curve,
                      std::span<const double> reference);
double curve_relative_l2_error(std::span<const std::pair<double, double>> curve,
                               std::span<const double> reference,
                               double floor = 1e-8);

}  // namespace mstop
