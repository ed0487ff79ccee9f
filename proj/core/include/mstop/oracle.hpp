#pragma once

// Ground-truth engines used to validate the solver: exact dynamic programming
// on small finite-support instances (both the all-submask and the
// one-stop-per-step recursions), a recombining binomial tree for the 1-D
// undiscounted American put, the closed-form log-utility value, and the
// queue-based serializer that turns an arbitrary stopping schedule into one
// with pairwise-distinct stop times.
//
// The candidate loops here are written locally on purpose: these engines are
// the independent side of the solver/oracle cross-checks.

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mstop/problem.hpp"

namespace mstop {

// A ProblemSpec whose noise law has finite support and whose reachable state
// set is small enough to enumerate. Shocks should be exact dyadic values:
// reached states are compared bit-for-bit.
struct FiniteInstance {
  ProblemSpec problem;
  int max_components = 3;
  int max_steps = 5;
  int max_support = 3;
  std::size_t state_cap = 1u << 20;
};

enum class DpVariant { original, alternative };

class ExactDpTable {
 public:
  struct Entry {
    int step = 0;
    SurvivalVector mask{};
    std::vector<double> state;
    double value = 0.0;
  };

  int num_components = 0;
  int num_steps = 0;
  DpVariant variant = DpVariant::original;

  bool contains(int n, std::span<const double> x, SurvivalVector i) const;
  double value(int n, std::span<const double> x, SurvivalVector i) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  friend ExactDpTable exact_dp(const FiniteInstance&, DpVariant);
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Entry> entries_;
};

// Exact backward recursion over the tree reachable from (0, x_0, full mask);
// expectations are finite sums over the noise atoms. `original` maximizes
// over all submasks i' <= i, `alternative` over the N+1 single-drop
// candidates i^{-l}.
ExactDpTable exact_dp(const FiniteInstance& instance, DpVariant variant);

// Undiscounted American put value under GBM with real-world drift `mu`:
// recombining tree with up/down factors exp(+-vol sqrt(dt)) and the
// drift-matched up probability, early exercise at every node.
double binomial_put(double spot, double strike, double mu, double vol,
                    double horizon, int steps);

// Closed-form value of the log-utility problem: log(1 + mean(x)), valid for
// x >= 0 and nonpositive drifts.
double log_utility_value(std::span<const double> x);

struct StopSchedule {
  std::vector<int> stops;        // stop step per component, values in [0, p]
  bool pairwise_distinct = false;  // distinct except possibly at p
};

bool is_pairwise_distinct_schedule(const std::vector<int>& stops, int p);

// Serializes a stopping schedule through the pending-index queue: at every
// step the smallest pending component index is assigned, newcomers join the
// queue when their original stop step arrives. The output has pairwise
// distinct stop steps (except at p), delays each stop by at most N steps and
// is causal in the input schedule.
StopSchedule serialize_stops(const std::vector<int>& stops, int p);

}  // namespace mstop
