#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "mstop/rng.hpp"
#include "mstop/shallownet.hpp"

using namespace mstop;

namespace {

double mse_of(const ShallowNet& net, std::span<const double> inputs,
              std::span<const double> targets) {
  double acc = 0.0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    const double res =
        net.forward(inputs.subspan(r * net.input_dim,
                                   static_cast<std::size_t>(net.input_dim))) -
        targets[r];
    acc += res * res;
  }
  return acc / static_cast<double>(targets.size());
}

}  // namespace

TEST_CASE("forward: constant network returns its output bias") {
  ShallowNet net = make_shallow_net(3, 4, Activation::tanh, 1);
  std::fill(net.output_w.begin(), net.output_w.end(), 0.0);
  net.output_b = 2.5;
  CHECK(net.forward(std::vector<double>{0.1, -4.0, 7.0}) == 2.5);
  CHECK(net.forward(std::vector<double>{0.0, 0.0, 0.0}) == 2.5);
}

TEST_CASE("forward: single tanh unit") {
  ShallowNet net = make_shallow_net(2, 1, Activation::tanh, 1);
  net.hidden_w = {1.0, 0.0};
  net.hidden_b = {0.0};
  net.output_w = {1.0};
  net.output_b = 0.0;
  CHECK(net.forward(std::vector<double>{0.0, 5.0}) == 0.0);
  CHECK(net.forward(std::vector<double>{1.0, -2.0}) ==
        doctest::Approx(0.7615941559557649).epsilon(1e-12));
  CHECK(net.forward(std::vector<double>{1.0, -2.0}) == std::tanh(1.0));
}

TEST_CASE("forward: dimension mismatch throws") {
  const ShallowNet net = make_shallow_net(3, 2, Activation::relu, 1);
  CHECK_THROWS_AS(net.forward(std::vector<double>{1.0, 2.0}), ConfigError);
}

TEST_CASE("grad: stationary at zero residual, bias gradient is the residual") {
  ShallowNet net = make_shallow_net(2, 3, Activation::sigmoid, 7);
  const std::vector<double> input{0.4, -1.2};
  const double out = net.forward(input);
  std::vector<double> g(net.param_count());

  grad(net, input, out, g);  // zero residual
  for (double v : g) CHECK(v == 0.0);

  std::fill(net.output_w.begin(), net.output_w.end(), 0.0);
  net.output_b = 1.5;
  grad(net, input, -0.5, g);
  // Constant net: d(loss)/d(alpha_0) = alpha_0 - t; hidden gradients vanish.
  CHECK(g.back() == doctest::Approx(2.0).epsilon(1e-15));
  for (std::size_t q = 0; q < net.hidden_w.size() + net.hidden_b.size(); ++q) {
    CHECK(g[q] == 0.0);
  }
}

TEST_CASE("grad matches central finite differences") {
  const Activation acts[] = {Activation::tanh, Activation::relu, Activation::sigmoid};
  const RandomStream rs = make_stream(21, StreamTag::instance_gen, 0, 0);
  std::uint32_t idx = 0;
  for (int t = 0; t < 60; ++t) {
    const int dim = 1 + t % 5;
    const int width = 1 + t % 7;
    ShallowNet net = make_shallow_net(dim, width, acts[t % 3], 100 + t);
    std::vector<double> theta(net.param_count());
    for (double& v : theta) v = 2.0 * rs.uniform(idx++) - 1.0;
    net.set_params(theta);
    std::vector<double> input(dim);
    for (double& v : input) v = 1.5 * (2.0 * rs.uniform(idx++) - 1.0);
    const double target = 2.0 * (2.0 * rs.uniform(idx++) - 1.0);

    std::vector<double> analytic(net.param_count());
    grad(net, input, target, analytic);
    constexpr double kStep = 1e-6;
    for (std::size_t q = 0; q < theta.size(); ++q) {
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
      const double rel = std::abs(analytic[q] - fd) /
                         std::max({std::abs(analytic[q]), std::abs(fd), 1e-4});
      CHECK(rel <= 1e-5);
    }
  }
}

TEST_CASE("hidden-unit permutation symmetry") {
  // Swapping two units only commutes two additions, which is exact.
  ShallowNet net = make_shallow_net(3, 2, Activation::tanh, 5);
  net.output_w = {0.8, -1.3};
  const std::vector<double> input{0.3, -0.7, 1.1};
  const double before = net.forward(input);
  std::swap(net.output_w[0], net.output_w[1]);
  std::swap(net.hidden_b[0], net.hidden_b[1]);
  for (int d = 0; d < 3; ++d) std::swap(net.hidden_w[d], net.hidden_w[3 + d]);
  CHECK(net.forward(input) == before);

  // General permutations reorder the output sum; exact as real numbers, so
  // allow rounding at the last-ulp scale.
  ShallowNet wide = make_shallow_net(2, 16, Activation::sigmoid, 6);
  {
    const RandomStream rs = make_stream(61, StreamTag::net_init, 1, 0);
    for (int j = 0; j < 16; ++j) {
      wide.output_w[j] = 2.0 * rs.uniform(static_cast<std::uint32_t>(j)) - 1.0;
    }
  }
  const std::vector<double> in2{0.9, -0.4};
  const double ref = wide.forward(in2);
  ShallowNet rotated = wide;
  for (int j = 0; j < 16; ++j) {
    const int src = (j + 5) % 16;
    rotated.output_w[j] = wide.output_w[src];
    rotated.hidden_b[j] = wide.hidden_b[src];
    for (int d = 0; d < 2; ++d) rotated.hidden_w[j * 2 + d] = wide.hidden_w[src * 2 + d];
  }
  CHECK(rotated.forward(in2) == doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("fit_lsq: constant targets are fitted to machine noise") {
  const int rows = 256;
  std::vector<double> inputs(rows);
  std::vector<double> targets(rows, 3.25);
  const RandomStream rs = make_stream(31, StreamTag::instance_gen, 0, 0);
  for (int r = 0; r < rows; ++r) inputs[r] = 2.0 * rs.uniform(r) - 1.0;

  ShallowNet net = make_shallow_net(1, 8, Activation::tanh, 2);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch = 64;
  cfg.learning_rate = 3e-3;
  cfg.seed = 3;
  const FitResult fit = fit_lsq(net, inputs, targets, cfg);
  CHECK(fit.final_mse <= 1e-8);
  CHECK(fit.final_mse == doctest::Approx(mse_of(net, inputs, targets)).epsilon(1e-9));
}

TEST_CASE("fit_lsq: 1-D linear target on [-1, 1]") {
  const int rows = 512;
  std::vector<double> inputs(rows), targets(rows);
  const RandomStream rs = make_stream(33, StreamTag::instance_gen, 0, 0);
  for (int r = 0; r < rows; ++r) {
    inputs[r] = 2.0 * rs.uniform(r) - 1.0;
    targets[r] = 2.0 * inputs[r];
  }
  ShallowNet net = make_shallow_net(1, 32, Activation::tanh, 4);
  fit_normalization(net, inputs);
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.batch = 128;
  cfg.learning_rate = 1e-2;
  cfg.seed = 4;
  cfg.patience = 100;
  const FitResult fit = fit_lsq(net, inputs, targets, cfg);
  CHECK(fit.final_mse <= 1e-4);
}

TEST_CASE("fit_lsq: one sample is interpolated") {
  std::vector<double> inputs{0.7};
  std::vector<double> targets{-1.3};
  ShallowNet net = make_shallow_net(1, 4, Activation::tanh, 5);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch = 1;
  cfg.learning_rate = 0.05;
  cfg.seed = 5;
  cfg.patience = 200;
  cfg.early_stop_tol = 0.0;
  const FitResult fit = fit_lsq(net, inputs, targets, cfg);
  CHECK(fit.final_mse <= 1e-10);
}

TEST_CASE("fit_lsq: returned parameters are the best iterate") {
  const int rows = 128;
  std::vector<double> inputs(rows), targets(rows);
  const RandomStream rs = make_stream(35, StreamTag::instance_gen, 0, 0);
  for (int r = 0; r < rows; ++r) {
    inputs[r] = 2.0 * rs.uniform(r) - 1.0;
    targets[r] = std::sin(3.0 * inputs[r]);
  }
  ShallowNet net = make_shallow_net(1, 16, Activation::tanh, 6);
  const double initial_mse = mse_of(net, inputs, targets);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.batch = 32;
  cfg.seed = 6;
  const FitResult fit = fit_lsq(net, inputs, targets, cfg);
  CHECK(fit.final_mse <= initial_mse);
  CHECK(fit.final_mse == doctest::Approx(mse_of(net, inputs, targets)).epsilon(1e-9));
}

TEST_CASE("fit_lsq: deterministic for a fixed seed") {
  const int rows = 200;
  std::vector<double> inputs(rows), targets(rows);
  const RandomStream rs = make_stream(37, StreamTag::instance_gen, 0, 0);
  for (int r = 0; r < rows; ++r) {
    inputs[r] = 2.0 * rs.uniform(r) - 1.0;
    targets[r] = inputs[r] * inputs[r];
  }
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch = 64;
  cfg.seed = 9;
  ShallowNet a = make_shallow_net(1, 12, Activation::tanh, 7);
  ShallowNet b = make_shallow_net(1, 12, Activation::tanh, 7);
  fit_lsq(a, inputs, targets, cfg);
  fit_lsq(b, inputs, targets, cfg);
  CHECK(a.hidden_w == b.hidden_w);
  CHECK(a.output_w == b.output_w);
  CHECK(a.output_b == b.output_b);
}

TEST_CASE("fit_lsq: divergence raises a numeric error") {
  std::vector<double> inputs{1.0, -1.0, 0.5, -0.5};
  std::vector<double> targets{1e6, -1e6, 5e5, -5e5};
  ShallowNet net = make_shallow_net(1, 4, Activation::tanh, 8);
  TrainConfig cfg;
  cfg.optimizer = Optimizer::sgd;
  cfg.learning_rate = 1e12;
  cfg.epochs = 50;
  cfg.batch = 4;
  cfg.auto_scale = false;
  CHECK_THROWS_AS(fit_lsq(net, inputs, targets, cfg), NumericError);
}

TEST_CASE("network serialization round-trips bit-exactly") {
  ShallowNet net = make_shallow_net(5, 11, Activation::sigmoid, 13);
  net.in_shift.assign(5, 0.25);
  net.in_scale.assign(5, 3.5);
  const auto path = std::filesystem::temp_directory_path() / "mstop_test_net.bin";
  save_net(net, path);
  const ShallowNet loaded = load_net(path);
  std::filesystem::remove(path);
  CHECK(loaded.input_dim == net.input_dim);
  CHECK(loaded.width == net.width);
  CHECK(loaded.activation == net.activation);
  CHECK(loaded.hidden_w == net.hidden_w);
  CHECK(loaded.hidden_b == net.hidden_b);
  CHECK(loaded.output_w == net.output_w);
  CHECK(loaded.output_b == net.output_b);
  CHECK(loaded.in_shift == net.in_shift);
  CHECK(loaded.in_scale == net.in_scale);
}
