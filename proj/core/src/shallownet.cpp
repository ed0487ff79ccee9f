#include "mstop/shallownet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <ostream>

#include "mstop/parallel.hpp"
#include "mstop/rng.hpp"

namespace mstop {

namespace {

inline double activate(Activation a, double v) {
  switch (a) {
    case Activation::tanh:
      return std::tanh(v);
    case Activation::relu:
      return v > 0.0 ? v : 0.0;
    case Activation::sigmoid:
      return 1.0 / (1.0 + std::exp(-v));
  }
  return 0.0;
}

// Derivative expressed through the activation value s = act(v); relu uses
// subgradient 0 at the kink.
inline double activate_deriv(Activation a, double v, double s) {
  switch (a) {
    case Activation::tanh:
      return 1.0 - s * s;
    case Activation::relu:
      return v > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid:
      return s * (1.0 - s);
  }
  return 0.0;
}

void check_input_dim(const ShallowNet& net, std::span<const double> input) {
  if (static_cast<int>(input.size()) != net.input_dim) {
    throw ConfigError("network input has dimension " + std::to_string(input.size()) +
                      ", expected " + std::to_string(net.input_dim));
  }
}

}  // namespace

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::tanh:
      return "tanh";
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
  }
  return "?";
}

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + name + "' (tanh, relu, sigmoid)");
}

double ShallowNet::forward(std::span<const double> input) const {
  check_input_dim(*this, input);
  double z[kMaxInputDim];
  for (int d = 0; d < input_dim; ++d) z[d] = (input[d] - in_shift[d]) / in_scale[d];
  double out = output_b;
  const double* w = hidden_w.data();
  for (int j = 0; j < width; ++j, w += input_dim) {
    double pre = hidden_b[j];
    for (int d = 0; d < input_dim; ++d) pre += w[d] * z[d];
    out += output_w[j] * activate(activation, pre);
  }
  return out;
}

void ShallowNet::get_params(std::span<double> out) const {
  const std::size_t wd = hidden_w.size();
  std::copy(hidden_w.begin(), hidden_w.end(), out.begin());
  std::copy(hidden_b.begin(), hidden_b.end(), out.begin() + wd);
  std::copy(output_w.begin(), output_w.end(), out.begin() + wd + width);
  out[wd + 2 * static_cast<std::size_t>(width)] = output_b;
}

void ShallowNet::set_params(std::span<const double> in) {
  const std::size_t wd = hidden_w.size();
  std::copy(in.begin(), in.begin() + wd, hidden_w.begin());
  std::copy(in.begin() + wd, in.begin() + wd + width, hidden_b.begin());
  std::copy(in.begin() + wd + width, in.begin() + wd + 2 * static_cast<std::size_t>(width),
            output_w.begin());
  output_b = in[wd + 2 * static_cast<std::size_t>(width)];
}

ShallowNet make_shallow_net(int input_dim, int width, Activation activation,
                            std::uint64_t seed) {
  if (input_dim < 1 || input_dim > kMaxInputDim) {
    throw ConfigError("network input dimension must be in [1, " +
                      std::to_string(kMaxInputDim) + "]");
  }
  if (width < 1) throw ConfigError("network width must be >= 1");
  ShallowNet net;
  net.input_dim = input_dim;
  net.width = width;
  net.activation = activation;
  net.hidden_w.resize(static_cast<std::size_t>(width) * input_dim);
  net.hidden_b.resize(static_cast<std::size_t>(width));
  net.output_w.resize(static_cast<std::size_t>(width));
  net.in_shift.assign(static_cast<std::size_t>(input_dim), 0.0);
  net.in_scale.assign(static_cast<std::size_t>(input_dim), 1.0);

  // Random hidden layer, zero output layer: after the mean-matching bias
  // snap in fit_lsq a fresh net starts out predicting the target mean.
  const RandomStream rs = make_stream(seed, StreamTag::net_init, 0, 0);
  const double w_limit = std::sqrt(6.0 / (input_dim + 1));
  std::uint32_t idx = 0;
  for (auto& v : net.hidden_w) v = w_limit * (2.0 * rs.uniform(idx++) - 1.0);
  for (auto& v : net.hidden_b) v = 0.5 * (2.0 * rs.uniform(idx++) - 1.0);
  std::fill(net.output_w.begin(), net.output_w.end(), 0.0);
  net.output_b = 0.0;
  return net;
}

void fit_normalization(ShallowNet& net, std::span<const double> inputs) {
  const int dim = net.input_dim;
  const std::size_t rows = inputs.size() / dim;
  if (rows == 0) return;
  for (int d = 0; d < dim; ++d) {
    double mean = 0.0;
    for (std::size_t r = 0; r < rows; ++r) mean += inputs[r * dim + d];
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double c = inputs[r * dim + d] - mean;
      var += c * c;
    }
    var /= static_cast<double>(rows);
    net.in_shift[d] = mean;
    net.in_scale[d] = std::max(std::sqrt(var), 1e-8);
  }
}

void grad(const ShallowNet& net, std::span<const double> input, double target,
          std::span<double> grad_out) {
  check_input_dim(net, input);
  if (grad_out.size() != net.param_count()) {
    throw ConfigError("gradient buffer has wrong size");
  }
  const int dim = net.input_dim;
  const int width = net.width;
  double z[kMaxInputDim];
  for (int d = 0; d < dim; ++d) z[d] = (input[d] - net.in_shift[d]) / net.in_scale[d];

  // Forward pass, caching pre-activations and activations.
  std::vector<double> pre(static_cast<std::size_t>(width));
  std::vector<double> act(static_cast<std::size_t>(width));
  double out = net.output_b;
  const double* w = net.hidden_w.data();
  for (int j = 0; j < width; ++j, w += dim) {
    double a = net.hidden_b[j];
    for (int d = 0; d < dim; ++d) a += w[d] * z[d];
    pre[j] = a;
    act[j] = activate(net.activation, a);
    out += net.output_w[j] * act[j];
  }

  const double residual = out - target;
  double* g_hidden_w = grad_out.data();
  double* g_hidden_b = grad_out.data() + static_cast<std::size_t>(width) * dim;
  double* g_output_w = g_hidden_b + width;
  double* g_output_b = g_output_w + width;
  *g_output_b = residual;
  for (int j = 0; j < width; ++j) {
    g_output_w[j] = residual * act[j];
    const double da =
        residual * net.output_w[j] * activate_deriv(net.activation, pre[j], act[j]);
    g_hidden_b[j] = da;
    double* row = g_hidden_w + static_cast<std::size_t>(j) * dim;
    for (int d = 0; d < dim; ++d) row[d] = da * z[d];
  }
}

namespace {

// Accumulates the mean gradient of the batch rows listed in order[b0..b1)
// into grad_out; deterministic chunked reduction.
void batch_gradient(const ShallowNet& net, std::span<const double> inputs,
                    std::span<const double> targets,
                    std::span<const std::uint32_t> order, std::size_t b0,
                    std::size_t b1, std::vector<double>& grad_out,
                    std::vector<double>& scratch) {
  const std::size_t params = net.param_count();
  const std::size_t count = b1 - b0;
  parallel_accumulate(
      count, 128, params, grad_out.data(),
      [&](std::size_t c0, std::size_t c1, double* buf) {
        std::vector<double> g(params);
        for (std::size_t c = c0; c < c1; ++c) {
          const std::uint32_t row = order[b0 + c];
          grad(net,
               inputs.subspan(static_cast<std::size_t>(row) * net.input_dim,
                              static_cast<std::size_t>(net.input_dim)),
               targets[row], g);
          for (std::size_t q = 0; q < params; ++q) buf[q] += g[q];
        }
      });
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t q = 0; q < params; ++q) grad_out[q] *= inv;
  (void)scratch;
}

double full_mse(const ShallowNet& net, std::span<const double> inputs,
                std::span<const double> targets) {
  const std::size_t rows = targets.size();
  const double sum = parallel_sum(rows, 1024, [&](std::size_t r0, std::size_t r1) {
    double acc = 0.0;
    for (std::size_t r = r0; r < r1; ++r) {
      const double res =
          net.forward(inputs.subspan(r * net.input_dim,
                                     static_cast<std::size_t>(net.input_dim))) -
          targets[r];
      acc += res * res;
    }
    return acc;
  });
  return sum / static_cast<double>(rows);
}

void deterministic_shuffle(std::vector<std::uint32_t>& order, std::uint64_t seed,
                           int epoch) {
  const RandomStream rs =
      make_stream(seed, StreamTag::shuffle, static_cast<std::uint32_t>(epoch), 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = rs.bits32(static_cast<std::uint32_t>(i)) % i;
    std::swap(order[i - 1], order[j]);
  }
}

}  // namespace

FitResult fit_lsq(ShallowNet& net, std::span<const double> inputs,
                  std::span<const double> targets, const TrainConfig& cfg) {
  const std::size_t rows = targets.size();
  if (rows < 1) throw ConfigError("fit_lsq needs at least one sample");
  if (inputs.size() != rows * static_cast<std::size_t>(net.input_dim)) {
    throw ConfigError("fit_lsq input matrix does not match target count");
  }
  if (cfg.learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
  if (cfg.batch < 1) throw ConfigError("batch size must be >= 1");

  // Match the optimizer's step size to the spread of the targets and snap
  // the output bias so the initial prediction mean equals the target mean;
  // both leave the reported loss in original units.
  double step_scale = 1.0;
  if (cfg.auto_scale) {
    double y_mean = 0.0;
    for (double v : targets) y_mean += v;
    y_mean /= static_cast<double>(rows);
    double y_var = 0.0;
    for (double v : targets) y_var += (v - y_mean) * (v - y_mean);
    y_var /= static_cast<double>(rows);
    step_scale = std::max(std::sqrt(y_var), 1e-3 * (1.0 + std::abs(y_mean)));

    const double prediction_mean =
        parallel_sum(rows, 1024,
                     [&](std::size_t r0, std::size_t r1) {
                       double acc = 0.0;
                       for (std::size_t r = r0; r < r1; ++r) {
                         acc += net.forward(inputs.subspan(
                             r * net.input_dim,
                             static_cast<std::size_t>(net.input_dim)));
                       }
                       return acc;
                     }) /
        static_cast<double>(rows);
    net.output_b += y_mean - prediction_mean;
  }
  double lr = cfg.learning_rate * step_scale;
  std::span<const double> y = targets;

  const std::size_t params = net.param_count();
  std::vector<double> g(params), scratch;
  std::vector<double> adam_m, adam_v;
  if (cfg.optimizer == Optimizer::adam) {
    adam_m.assign(params, 0.0);
    adam_v.assign(params, 0.0);
  }
  std::vector<double> theta(params);
  net.get_params(theta);

  std::vector<std::uint32_t> order(rows);
  std::iota(order.begin(), order.end(), 0u);

  std::vector<double> best_theta = theta;
  double best_mse = full_mse(net, inputs, y);
  int best_epoch = 0;
  int stale_epochs = 0;
  int reductions_left = std::max(cfg.lr_reductions, 0);
  long adam_steps = 0;
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;

  int epoch = 0;
  for (; epoch < cfg.epochs; ++epoch) {
    deterministic_shuffle(order, cfg.seed, epoch);
    for (std::size_t b0 = 0; b0 < rows; b0 += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t b1 = std::min(rows, b0 + static_cast<std::size_t>(cfg.batch));
      batch_gradient(net, inputs, y, order, b0, b1, g, scratch);

      if (cfg.grad_clip > 0.0) {
        const double limit = cfg.grad_clip * step_scale;
        double norm2 = 0.0;
        for (double v : g) norm2 += v * v;
        const double norm = std::sqrt(norm2);
        if (norm > limit) {
          const double scale = limit / norm;
          for (double& v : g) v *= scale;
        }
      }

      if (cfg.optimizer == Optimizer::adam) {
        ++adam_steps;
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(adam_steps));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(adam_steps));
        for (std::size_t q = 0; q < params; ++q) {
          adam_m[q] = kBeta1 * adam_m[q] + (1.0 - kBeta1) * g[q];
          adam_v[q] = kBeta2 * adam_v[q] + (1.0 - kBeta2) * g[q] * g[q];
          theta[q] -= lr * (adam_m[q] / c1) / (std::sqrt(adam_v[q] / c2) + kAdamEps);
        }
      } else {
        // Plain SGD steps scale with the gradient itself.
        for (std::size_t q = 0; q < params; ++q) theta[q] -= cfg.learning_rate * g[q];
      }
      net.set_params(theta);
    }

    const double mse = full_mse(net, inputs, y);
    if (!std::isfinite(mse) || mse > 1e100) {
      throw NumericError("training diverged (loss " + std::to_string(mse) +
                         ") at epoch " + std::to_string(epoch) +
                         "; lower the learning rate " +
                         std::to_string(cfg.learning_rate));
    }
    if (mse < best_mse * (1.0 - cfg.early_stop_tol)) {
      best_mse = mse;
      best_theta = theta;
      best_epoch = epoch + 1;
      stale_epochs = 0;
    } else {
      if (mse < best_mse) {  // still keep strictly better iterates
        best_mse = mse;
        best_theta = theta;
        best_epoch = epoch + 1;
      }
      if (++stale_epochs >= cfg.patience) {
        if (reductions_left == 0) {
          ++epoch;
          break;
        }
        // Resume from the best iterate at half the step size.
        --reductions_left;
        lr *= 0.5;
        theta = best_theta;
        net.set_params(theta);
        std::fill(adam_m.begin(), adam_m.end(), 0.0);
        std::fill(adam_v.begin(), adam_v.end(), 0.0);
        adam_steps = 0;
        stale_epochs = 0;
      }
    }
  }

  net.set_params(best_theta);
  FitResult result;
  result.final_mse = best_mse;
  result.epochs_run = epoch;
  result.best_epoch = best_epoch;
  return result;
}

namespace {

constexpr std::uint32_t kNetMagic = 0x544E534Du;  // "MSNT"
constexpr std::uint32_t kNetVersion = 1;

template <class T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

void write_vec(std::ostream& os, const std::vector<double>& v) {
  write_pod<std::uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_vec(std::istream& is) {
  std::vector<double> v(read_pod<std::uint64_t>(is));
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  return v;
}

}  // namespace

void write_net(const ShallowNet& net, std::ostream& os) {
  write_pod(os, kNetMagic);
  write_pod(os, kNetVersion);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.input_dim));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.width));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.activation));
  write_vec(os, net.in_shift);
  write_vec(os, net.in_scale);
  write_vec(os, net.hidden_w);
  write_vec(os, net.hidden_b);
  write_vec(os, net.output_w);
  write_pod(os, net.output_b);
}

ShallowNet read_net(std::istream& is) {
  if (read_pod<std::uint32_t>(is) != kNetMagic) {
    throw ConfigError("stream does not hold a serialized network");
  }
  if (read_pod<std::uint32_t>(is) != kNetVersion) {
    throw ConfigError("unsupported network serialization version");
  }
  ShallowNet net;
  net.input_dim = static_cast<int>(read_pod<std::uint32_t>(is));
  net.width = static_cast<int>(read_pod<std::uint32_t>(is));
  net.activation = static_cast<Activation>(read_pod<std::uint32_t>(is));
  net.in_shift = read_vec(is);
  net.in_scale = read_vec(is);
  net.hidden_w = read_vec(is);
  net.hidden_b = read_vec(is);
  net.output_w = read_vec(is);
  net.output_b = read_pod<double>(is);
  if (!is) throw ConfigError("truncated network serialization");
  return net;
}

void save_net(const ShallowNet& net, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  write_net(net, os);
  if (!os) throw ConfigError("write failed for " + path.string());
}

ShallowNet load_net(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path.string());
  return read_net(is);
}

}  // namespace mstop
