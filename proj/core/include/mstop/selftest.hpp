#pragma once

// Fast correctness suites runnable from the CLI: exact-DP equivalence of the
// tabular solver, gradient checks against finite differences, exhaustive
// stopping-schedule serializer checks and assorted invariants. Each check
// reports pass/fail plus a counterexample description on failure.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mstop/oracle.hpp"

namespace mstop {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // counterexample or summary statistics
};

// Randomized small instance with dyadic shocks and exactly representable
// states: additive noise transitions, stop payoffs a_k max(b_k - x_k, 0)
// collected at falling survival bits, and a terminal reward with linear,
// kinked and mask-dependent terms.
FiniteInstance make_random_finite_instance(std::uint64_t seed);

std::vector<CheckResult> run_selftest();
bool all_passed(const std::vector<CheckResult>& results);
void print_results(const std::vector<CheckResult>& results, std::ostream& os);

}  // namespace mstop
