#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "mstop/simgen.hpp"

using namespace mstop;

namespace {

DiffusionSpec gbm_1d(double mu, double vol) {
  DiffusionSpec d;
  d.num_components = 1;
  d.horizon = 1.0;
  d.num_steps = 5;
  d.initial_state = {100.0};
  d.drift = [mu](int, double, std::span<const double> x) { return mu * x[0]; };
  d.idio_vol = [vol](int, double, std::span<const double> x) { return vol * x[0]; };
  d.common_vol = [](double, std::span<const double>) { return 0.0; };
  return d;
}

ProblemSpec tiny_log_problem(int n_comp, int steps) {
  LogUtilityParams p;
  p.num_components = n_comp;
  p.drifts = std::vector<double>(n_comp, -0.05);
  p.vols = std::vector<double>(n_comp, 0.2);
  p.horizon = 1.0;
  p.num_steps = steps;
  p.initial_state = std::vector<double>(n_comp, 1.0);
  return make_log_utility_problem(p);
}

}  // namespace

TEST_CASE("euler transition: identity, GBM and common-noise cases") {
  DiffusionSpec flat;
  flat.num_components = 2;
  flat.horizon = 1.0;
  flat.num_steps = 4;
  flat.initial_state = {1.0, 1.0};
  flat.drift = [](int, double, std::span<const double>) { return 0.0; };
  flat.idio_vol = [](int, double, std::span<const double>) { return 0.0; };
  flat.common_vol = [](double, std::span<const double>) { return 0.0; };
  const auto zero = euler_transition(flat, 0, std::vector<double>{1.0, 2.0},
                                     std::vector<double>{0.3, 0.1, -0.2});
  CHECK(zero[0] == 0.0);
  CHECK(zero[1] == 0.0);

  // GBM coefficient case: F = 0.2 * 100 * 0.1 = 2 with zero drift.
  const DiffusionSpec gbm = gbm_1d(0.0, 0.2);
  const auto f = euler_transition(gbm, 1, std::vector<double>{100.0},
                                  std::vector<double>{0.0, 0.1});
  CHECK(f[0] == doctest::Approx(2.0).epsilon(1e-15));

  // Common-noise term hits every coordinate.
  DiffusionSpec common = flat;
  common.common_vol = [](double, std::span<const double>) { return 0.5; };
  const auto g = euler_transition(common, 0, std::vector<double>{1.0, 2.0},
                                  std::vector<double>{0.2, 0.0, 0.0});
  CHECK(g[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(g[1] == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("noise-free paths follow the deterministic recursion") {
  DiffusionSpec d = gbm_1d(0.1, 0.0);  // vol 0: x_{n+1} = x_n (1 + mu h)
  const PathBatch paths = simulate_paths(d, nullptr, 3, 99);
  const double h = d.step_size();
  for (long b = 0; b < paths.batch; ++b) {
    double x = 100.0;
    for (int n = 0; n <= d.num_steps; ++n) {
      CHECK(paths.state(b, n)[0] == doctest::Approx(x).epsilon(1e-13));
      x += 0.1 * x * h;
    }
  }
}

TEST_CASE("stop-all policy freezes every coordinate") {
  const DiffusionSpec d = gbm_1d(0.05, 0.2);
  const StopAllAtStep policy(0);
  const PathBatch paths = simulate_paths(d, &policy, 16, 4);
  for (long b = 0; b < paths.batch; ++b) {
    for (int n = 0; n <= d.num_steps; ++n) {
      CHECK(paths.state(b, n)[0] == 100.0);
    }
  }
  CHECK(count_freezing_violations(paths) == 0);
}

TEST_CASE("unstopped GBM: sample mean of X_p matches x0 (1 + mu h)^p") {
  const DiffusionSpec d = gbm_1d(0.1, 0.2);
  const long batch = 100000;
  const PathBatch paths = simulate_paths(d, nullptr, batch, 2024);
  double mean = 0.0, second = 0.0;
  for (long b = 0; b < batch; ++b) {
    const double terminal = paths.state(b, d.num_steps)[0];
    mean += terminal;
    second += terminal * terminal;
  }
  mean /= static_cast<double>(batch);
  second /= static_cast<double>(batch);
  const double std_err = std::sqrt((second - mean * mean) / static_cast<double>(batch));
  // One Euler step multiplies the conditional mean by (1 + mu h).
  const double h = d.step_size();
  const double expected = 100.0 * std::pow(1.0 + 0.1 * h, d.num_steps);
  CHECK(std::abs(mean - expected) < 3.0 * std_err);
}

TEST_CASE("training set: cardinality, mask frequencies, determinism") {
  const ProblemSpec spec3 = tiny_log_problem(2, 3);
  const StateLaw law = StateLaw::uniform_box({0.0, 0.0}, {2.0, 2.0});

  const TrainingSet small = draw_training_set(spec3, 4, law, 1);
  CHECK(small.states.size() == 4u * 3u * 2u);  // M p N coordinates = 12 triples
  CHECK(small.masks.size() == 12u);
  CHECK(small.shocks.size() == 4u * 3u * 3u);

  // Mask law is uniform over {0,1}^N: binomial 4-sigma band per mask.
  const ProblemSpec spec1 = tiny_log_problem(2, 1);
  const long draws = 1 << 16;
  const TrainingSet big = draw_training_set(spec1, draws, law, 7);
  long counts[4] = {0, 0, 0, 0};
  for (long m = 0; m < draws; ++m) counts[big.mask(0, m).bits]++;
  const double q = 0.25;
  const double sigma = std::sqrt(q * (1 - q) / static_cast<double>(draws));
  for (int mask = 0; mask < 4; ++mask) {
    const double freq = static_cast<double>(counts[mask]) / static_cast<double>(draws);
    CHECK(std::abs(freq - q) < 4.0 * sigma);
  }

  const TrainingSet again = draw_training_set(spec3, 4, law, 1);
  CHECK(again.states == small.states);
  CHECK(again.masks == small.masks);
  CHECK(again.shocks == small.shocks);
}

TEST_CASE("training set: degenerate box rejected") {
  CHECK_THROWS_AS(StateLaw::uniform_box({1.0, 0.0}, {1.0, 2.0}), ConfigError);
}

TEST_CASE("training set dump round-trips bit-exactly") {
  const ProblemSpec spec = tiny_log_problem(3, 2);
  const StateLaw law = StateLaw::lognormal({1.0, 1.0, 1.0}, 0.3);
  const TrainingSet set = draw_training_set(spec, 32, law, 5);
  const auto path = std::filesystem::temp_directory_path() / "mstop_test_set.bin";
  save_training_set(set, path);
  const TrainingSet loaded = load_training_set(path);
  std::filesystem::remove(path);
  CHECK(loaded.num_components == set.num_components);
  CHECK(loaded.num_steps == set.num_steps);
  CHECK(loaded.sample_count == set.sample_count);
  CHECK(loaded.seed == set.seed);
  CHECK(loaded.states == set.states);
  CHECK(loaded.masks == set.masks);
  CHECK(loaded.shocks == set.shocks);
  CHECK(loaded.state_law.kind == set.state_law.kind);
  CHECK(loaded.state_law.anchor == set.state_law.anchor);
  CHECK(loaded.noise_law.stddev == set.noise_law.stddev);
}

TEST_CASE("policy contract: reviving a component aborts the simulation") {
  class Reviver final : public Policy {
   public:
    SurvivalVector decide(int n, std::span<const double>, SurvivalVector i) const override {
      if (n == 0) return SurvivalVector{0};
      return full_mask(1);  // illegal revival
    }
  };
  const DiffusionSpec d = gbm_1d(0.0, 0.2);
  const Reviver policy;
  CHECK_THROWS_AS(simulate_paths(d, &policy, 2, 1), ContractViolation);
}
