#include <doctest.h>

#include <cmath>

#include "mstop/problem.hpp"
#include "mstop/rng.hpp"
#include "mstop/simgen.hpp"

using namespace mstop;

namespace {

PutParams one_put() {
  PutParams p;
  p.num_components = 1;
  p.strikes = {100.0};
  p.drifts = {0.0};
  p.vols = {0.2};
  p.horizon = 1.0;
  p.num_steps = 4;
  p.initial_state = {100.0};
  return p;
}

PutParams five_puts() {
  PutParams p;
  p.num_components = 5;
  p.strikes = std::vector<double>(5, 100.0);
  p.drifts = std::vector<double>(5, 0.05);
  p.vols = std::vector<double>(5, 0.2);
  p.horizon = 1.0;
  p.num_steps = 4;
  p.initial_state = std::vector<double>(5, 100.0);
  return p;
}

}  // namespace

TEST_CASE("put reward: collected exactly once, at the stopping transition") {
  const ProblemSpec spec = make_put_problem(one_put());
  const SurvivalVector alive{1}, dead{0};
  // Stop at x = 90: (100 - 90)+ = 10.
  CHECK(spec.running_reward(0, std::vector<double>{90.0}, alive, dead) == 10.0);
  // Stop at x = 120: payoff floored at zero.
  CHECK(spec.running_reward(2, std::vector<double>{120.0}, alive, dead) == 0.0);
  // Holding pays nothing.
  CHECK(spec.running_reward(0, std::vector<double>{90.0}, alive, alive) == 0.0);
  // Terminal reward covers only never-stopped components.
  CHECK(spec.terminal_reward(std::vector<double>{90.0}, alive) == 10.0);
  CHECK(spec.terminal_reward(std::vector<double>{90.0}, dead) == 0.0);
}

TEST_CASE("put constructor: dimension mismatch rejected") {
  PutParams p = one_put();
  p.strikes = {100.0, 90.0};
  CHECK_THROWS_AS(make_put_problem(p), ConfigError);
  PutParams q = one_put();
  q.vols = {0.0};
  CHECK_THROWS_AS(make_put_problem(q), ConfigError);
}

TEST_CASE("put transition matches the generic Euler increment") {
  const PutParams params = five_puts();
  const ProblemSpec spec = make_put_problem(params);
  const DiffusionSpec diffusion = put_diffusion(params);
  const RandomStream rs = make_stream(3, StreamTag::instance_gen, 0, 0);
  std::vector<double> x(5), eps(6);
  for (int t = 0; t < 32; ++t) {
    for (int k = 0; k < 5; ++k) x[k] = 50.0 + 100.0 * rs.uniform(t * 16 + k);
    for (int j = 0; j < 6; ++j) eps[j] = rs.normal(t * 16 + 8 + j) * 0.1;
    const int n = t % spec.num_steps;
    const auto via_problem = spec.step_increment(n, x, eps);
    const auto via_euler = euler_transition(diffusion, n, x, eps);
    for (int k = 0; k < 5; ++k) {
      CHECK(via_problem[k] == doctest::Approx(via_euler[k]).epsilon(1e-15));
    }
  }
}

TEST_CASE("freezing: dead coordinates are preserved exactly") {
  const ProblemSpec spec = make_put_problem(five_puts());
  const RandomStream rs = make_stream(5, StreamTag::instance_gen, 0, 0);
  std::vector<double> x(5), eps(6);
  for (int t = 0; t < 64; ++t) {
    for (int k = 0; k < 5; ++k) x[k] = 60.0 + 80.0 * rs.uniform(t * 16 + k);
    for (int j = 0; j < 6; ++j) eps[j] = rs.normal(t * 16 + 8 + j) * 0.15;
    const SurvivalVector keep{rs.bits32(t * 16 + 15) & 0x1Fu};
    const auto incr = spec.step_increment(0, x, eps);
    std::vector<double> next = x;
    for (int k = 0; k < 5; ++k) {
      if (keep.alive(k)) next[k] += incr[k];
    }
    for (int k = 0; k < 5; ++k) {
      if (!keep.alive(k)) CHECK(next[k] == x[k]);
    }
  }
}

TEST_CASE("log utility: terminal reward and closed-form anchors") {
  LogUtilityParams p;
  p.num_components = 5;
  p.drifts = std::vector<double>(5, -0.05);
  p.vols = std::vector<double>(5, 0.2);
  p.horizon = 1.0;
  p.num_steps = 4;
  p.initial_state = std::vector<double>(5, 1.0);
  const ProblemSpec spec = make_log_utility_problem(p);

  CHECK(spec.terminal_reward(std::vector<double>(5, 1.0), full_mask(5)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(spec.terminal_reward(std::vector<double>(5, 0.0), full_mask(5)) == 0.0);
  CHECK(spec.terminal_reward(std::vector<double>{2.0, 0.0, 0.0, 0.0, 0.0},
                             full_mask(5)) ==
        doctest::Approx(std::log(1.4)).epsilon(1e-15));
  // c == 0 everywhere.
  CHECK(spec.running_reward(1, std::vector<double>(5, 1.0), full_mask(5),
                            SurvivalVector{0}) == 0.0);
}

TEST_CASE("log utility: positive drift rejected with an explicit message") {
  LogUtilityParams p;
  p.num_components = 2;
  p.drifts = {-0.05, 0.01};
  p.vols = {0.2, 0.2};
  p.horizon = 1.0;
  p.num_steps = 2;
  p.initial_state = {1.0, 1.0};
  CHECK_THROWS_WITH_AS(make_log_utility_problem(p),
                       doctest::Contains("drifts <= 0"), ConfigError);
}

TEST_CASE("reward audit: constructors pass, injected violation fails") {
  const ProblemSpec put = make_put_problem(five_puts());
  const RewardAuditReport put_report = audit_reward_zero_diag(put, 1000, 12);
  CHECK(put_report.pass);
  CHECK(put_report.max_abs_diagonal == 0.0);

  LogUtilityParams lp;
  lp.num_components = 3;
  lp.drifts = std::vector<double>(3, 0.0);
  lp.vols = std::vector<double>(3, 0.2);
  lp.horizon = 1.0;
  lp.num_steps = 3;
  lp.initial_state = std::vector<double>(3, 1.0);
  const RewardAuditReport log_report =
      audit_reward_zero_diag(make_log_utility_problem(lp), 1000, 12);
  CHECK(log_report.pass);

  ProblemSpec bad = make_put_problem(five_puts());
  bad.running_reward = [](int, std::span<const double>, SurvivalVector,
                          SurvivalVector) { return 1.0; };
  CHECK_FALSE(audit_reward_zero_diag(bad, 100, 12).pass);
}

TEST_CASE("finite noise law validation") {
  CHECK_THROWS_AS(NoiseLaw::finite_support({{1.0}, {-1.0}}, {0.6, 0.6}), ConfigError);
  CHECK_THROWS_AS(NoiseLaw::finite_support({{1.0}, {-1.0, 0.0}}, {0.5, 0.5}),
                  ConfigError);
  const NoiseLaw law = NoiseLaw::finite_support({{1.0}, {-1.0}}, {0.5, 0.5});
  CHECK(law.dim == 1);
}
