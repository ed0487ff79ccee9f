#pragma once

// Single-hidden-layer regression networks
//   f(x) = sum_j alpha_j act(beta_j . x + gamma_j) + alpha_0
// with least-squares training by minibatch SGD/Adam and analytic gradients.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mstop/errors.hpp"

namespace mstop {

inline constexpr int kMaxInputDim = 64;

enum class Activation { tanh, relu, sigmoid };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& name);

struct ShallowNet {
  int input_dim = 0;
  int width = 0;  // hidden units K
  Activation activation = Activation::tanh;
  std::vector<double> hidden_w;  // beta, [width][input_dim] row-major
  std::vector<double> hidden_b;  // gamma, [width]
  std::vector<double> output_w;  // alpha, [width]
  double output_b = 0.0;         // alpha_0
  // Affine input standardization applied before the hidden layer; identity
  // (shift 0, scale 1) by default.
  std::vector<double> in_shift;
  std::vector<double> in_scale;

  std::size_t param_count() const {
    return static_cast<std::size_t>(width) * (input_dim + 2) + 1;
  }
  double forward(std::span<const double> input) const;

  // Flat parameter vector in declared order:
  // hidden_w, hidden_b, output_w, output_b.
  void get_params(std::span<double> out) const;
  void set_params(std::span<const double> in);
};

ShallowNet make_shallow_net(int input_dim, int width, Activation activation,
                            std::uint64_t seed);

// Fits shift/scale to the per-coordinate mean/stddev of `inputs` (M x D).
void fit_normalization(ShallowNet& net, std::span<const double> inputs);

// d/dtheta of the squared loss 0.5 (f(input) - target)^2, written into
// grad_out (size param_count) in declared parameter order.
void grad(const ShallowNet& net, std::span<const double> input, double target,
          std::span<double> grad_out);

enum class Optimizer { sgd, adam };

struct TrainConfig {
  Optimizer optimizer = Optimizer::adam;
  double learning_rate = 1e-3;
  long batch = 512;
  int epochs = 50;
  double grad_clip = 0.0;  // global L2 threshold, 0 disables
  std::uint64_t seed = 0;
  // Plateau handling: when the best full-sample MSE fails to improve by
  // early_stop_tol (relative) for `patience` epochs, training resumes from
  // the best iterate at half the step size; after `lr_reductions` such cuts
  // the fit stops early.
  double early_stop_tol = 1e-7;
  int patience = 8;
  int lr_reductions = 3;
  // Snap the output bias to the target mean before training and scale Adam
  // steps by the target spread, so learning_rate is dimensionless.
  bool auto_scale = true;
};

struct FitResult {
  double final_mse = 0.0;  // mean squared error of the returned parameters
  int epochs_run = 0;
  int best_epoch = 0;
};

// Minimizes the empirical squared loss of net over (inputs, targets); the
// returned parameters are the best full-sample iterate seen. Deterministic
// given cfg.seed and independent of the worker count.
FitResult fit_lsq(ShallowNet& net, std::span<const double> inputs,
                  std::span<const double> targets, const TrainConfig& cfg);

// Versioned flat binary serialization; round-trips are bit-exact.
void save_net(const ShallowNet& net, const std::filesystem::path& path);
ShallowNet load_net(const std::filesystem::path& path);
void write_net(const ShallowNet& net, std::ostream& os);
ShallowNet read_net(std::istream& is);

}  // namespace mstop
