#pragma once

#include <span>

#include "mstop/survival.hpp"

namespace mstop {

// A stopping rule: given (n, x, i) it returns the next survival vector
// i' <= i. Decisions may depend only on the arguments (no lookahead).
class Policy {
 public:
  virtual ~Policy() = default;
  virtual SurvivalVector decide(int n, std::span<const double> x,
                                SurvivalVector i) const = 0;
};

// Stops every component at step `at_step` (useful as a reference policy).
class StopAllAtStep final : public Policy {
 public:
  explicit StopAllAtStep(int at_step) : at_step_(at_step) {}
  SurvivalVector decide(int n, std::span<const double>, SurvivalVector i) const override {
    return n >= at_step_ ? SurvivalVector{0} : i;
  }

 private:
  int at_step_;
};

class NeverStop final : public Policy {
 public:
  SurvivalVector decide(int, std::span<const double>, SurvivalVector i) const override {
    return i;
  }
};

}  // namespace mstop
