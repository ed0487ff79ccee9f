#include "mstop/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mstop/rng.hpp"

namespace mstop {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

std::string state_to_string(std::span<const double> x) {
  std::ostringstream os;
  os << "(";
  for (std::size_t k = 0; k < x.size(); ++k) os << (k ? ", " : "") << x[k];
  os << ")";
  return os.str();
}

void check_finite(int n, std::span<const double> x, std::span<const double> f) {
  for (double v : f) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite transition output at step " + std::to_string(n) +
                         ", state " + state_to_string(x));
    }
  }
}

void check_gbm_params(int n, const std::vector<double>& drifts,
                      const std::vector<double>& vols,
                      const std::vector<double>& x0, double horizon, int steps) {
  require(n >= 1, "component count must be >= 1");
  require(n <= kMaxComponents, "component count exceeds limit of " +
                                   std::to_string(kMaxComponents));
  require(steps >= 1, "number of time steps must be >= 1");
  require(horizon > 0.0, "horizon must be positive");
  require(static_cast<int>(drifts.size()) == n &&
              static_cast<int>(vols.size()) == n &&
              static_cast<int>(x0.size()) == n,
          "dimension mismatch among drift, vol and initial state vectors");
  for (double v : vols) require(v > 0.0, "all vols must be positive");
}

// F_k = mu_k x_k h + sigma_k x_k eps_{k+1}, or the exact GBM increment.
TransitionFn gbm_transition(std::vector<double> drifts, std::vector<double> vols,
                            double h, bool exact_step) {
  return [drifts = std::move(drifts), vols = std::move(vols), h, exact_step](
             int n, std::span<const double> x, std::span<const double> eps,
             std::span<double> out) {
    const int dim = static_cast<int>(out.size());
    for (int k = 0; k < dim; ++k) {
      if (exact_step) {
        const double expo = (drifts[k] - 0.5 * vols[k] * vols[k]) * h + vols[k] * eps[k + 1];
        out[k] = x[k] * (std::exp(expo) - 1.0);
      } else {
        out[k] = drifts[k] * x[k] * h + vols[k] * x[k] * eps[k + 1];
      }
    }
    check_finite(n, x, out);
  };
}

}  // namespace

NoiseLaw NoiseLaw::standard_gaussian(int dim, double stddev) {
  require(dim >= 1, "noise dimension must be >= 1");
  require(stddev > 0.0, "noise stddev must be positive");
  NoiseLaw law;
  law.kind = Kind::gaussian;
  law.dim = dim;
  law.stddev = stddev;
  return law;
}

NoiseLaw NoiseLaw::finite_support(std::vector<std::vector<double>> atoms,
                                  std::vector<double> probs) {
  require(!atoms.empty() && atoms.size() == probs.size(),
          "finite noise law needs matching, non-empty atoms and probs");
  const int dim = static_cast<int>(atoms.front().size());
  double total = 0.0;
  for (const auto& a : atoms) {
    require(static_cast<int>(a.size()) == dim, "all atoms must share one dimension");
  }
  for (double w : probs) {
    require(w >= 0.0, "atom probabilities must be nonnegative");
    total += w;
  }
  require(std::abs(total - 1.0) <= 1e-12, "atom probabilities must sum to 1");
  NoiseLaw law;
  law.kind = Kind::finite;
  law.dim = dim;
  law.stddev = 0.0;
  law.atoms = std::move(atoms);
  law.probs = std::move(probs);
  return law;
}

std::vector<double> ProblemSpec::step_increment(int n, std::span<const double> x,
                                                std::span<const double> eps) const {
  std::vector<double> out(static_cast<std::size_t>(num_components), 0.0);
  transition(n, x, eps, out);
  return out;
}

DiffusionSpec put_diffusion(const PutParams& p) {
  check_gbm_params(p.num_components, p.drifts, p.vols, p.initial_state, p.horizon,
                   p.num_steps);
  require(static_cast<int>(p.strikes.size()) == p.num_components,
          "dimension mismatch among strike and state vectors");
  DiffusionSpec d;
  d.num_components = p.num_components;
  d.horizon = p.horizon;
  d.num_steps = p.num_steps;
  d.initial_state = p.initial_state;
  d.drift = [mu = p.drifts](int k, double, std::span<const double> x) {
    return mu[k] * x[k];
  };
  d.idio_vol = [vol = p.vols](int k, double, std::span<const double> x) {
    return vol[k] * x[k];
  };
  d.common_vol = [](double, std::span<const double>) { return 0.0; };
  return d;
}

ProblemSpec make_put_problem(const PutParams& p) {
  check_gbm_params(p.num_components, p.drifts, p.vols, p.initial_state, p.horizon,
                   p.num_steps);
  require(static_cast<int>(p.strikes.size()) == p.num_components,
          "dimension mismatch among strike, drift, vol and initial state vectors");

  const double h = p.horizon / p.num_steps;
  ProblemSpec spec;
  spec.name = "multi_put";
  spec.num_components = p.num_components;
  spec.num_steps = p.num_steps;
  spec.noise_dim = p.num_components + 1;
  spec.noise = NoiseLaw::standard_gaussian(spec.noise_dim, std::sqrt(h));
  spec.initial_state = p.initial_state;
  spec.transition = gbm_transition(p.drifts, p.vols, h, p.exact_gbm_step);

  const std::vector<double> strikes = p.strikes;
  spec.running_reward = [strikes](int, std::span<const double> x, SurvivalVector i,
                                  SurvivalVector i_next) {
    double total = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (i.alive(static_cast<int>(k)) && !i_next.alive(static_cast<int>(k))) {
        total += std::max(strikes[k] - x[k], 0.0);
      }
    }
    return total;
  };
  spec.terminal_reward = [strikes](std::span<const double> x, SurvivalVector i) {
    double total = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (i.alive(static_cast<int>(k))) total += std::max(strikes[k] - x[k], 0.0);
    }
    return total;
  };
  return spec;
}

double log_utility_terminal(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  // Euler paths can in principle cross below -1 in the mean; clamp so the
  // reward stays a total function.
  return std::log1p(std::max(mean, -1.0 + 1e-12));
}

ProblemSpec make_log_utility_problem(const LogUtilityParams& p) {
  check_gbm_params(p.num_components, p.drifts, p.vols, p.initial_state, p.horizon,
                   p.num_steps);
  for (std::size_t j = 0; j < p.drifts.size(); ++j) {
    if (p.drifts[j] > 0.0) {
      throw ConfigError(
          "log_utility requires all drifts <= 0 (component " + std::to_string(j + 1) +
          " has drift " + std::to_string(p.drifts[j]) +
          "); with a positive drift the closed-form reference value is invalid");
    }
  }

  const double h = p.horizon / p.num_steps;
  ProblemSpec spec;
  spec.name = "log_utility";
  spec.num_components = p.num_components;
  spec.num_steps = p.num_steps;
  spec.noise_dim = p.num_components + 1;
  spec.noise = NoiseLaw::standard_gaussian(spec.noise_dim, std::sqrt(h));
  spec.initial_state = p.initial_state;
  spec.transition = gbm_transition(p.drifts, p.vols, h, p.exact_gbm_step);
  spec.running_reward = [](int, std::span<const double>, SurvivalVector,
                           SurvivalVector) { return 0.0; };
  spec.terminal_reward = [](std::span<const double> x, SurvivalVector) {
    return log_utility_terminal(x);
  };
  return spec;
}

RewardAuditReport audit_reward_zero_diag(const ProblemSpec& spec, long samples,
                                         std::uint64_t seed) {
  require(samples >= 1, "audit needs at least one sample");
  const int n_comp = spec.num_components;
  double scale = 1.0;
  for (double v : spec.initial_state) scale = std::max(scale, std::abs(v));

  RewardAuditReport report;
  report.samples = samples;
  report.min_reward = 0.0;
  for (long s = 0; s < samples; ++s) {
    const RandomStream rs = make_stream(seed, StreamTag::audit,
                                        static_cast<std::uint32_t>(s), 0);
    const int n = static_cast<int>(rs.uniform(0) * spec.num_steps);
    std::vector<double> x(static_cast<std::size_t>(n_comp));
    for (int k = 0; k < n_comp; ++k) {
      const double center = spec.initial_state.empty() ? 0.0 : spec.initial_state[k];
      x[static_cast<std::size_t>(k)] = center + 5.0 * scale * (2.0 * rs.uniform(1 + k) - 1.0);
    }
    const SurvivalVector i{rs.bits32(1 + n_comp) & full_mask(n_comp).bits};
    const SurvivalVector i_sub{rs.bits32(2 + n_comp) & i.bits};
    report.max_abs_diagonal =
        std::max(report.max_abs_diagonal, std::abs(spec.running_reward(n, x, i, i)));
    report.min_reward = std::min(report.min_reward, spec.running_reward(n, x, i, i_sub));
  }
  report.pass = report.max_abs_diagonal <= 1e-12 && report.min_reward >= 0.0;
  return report;
}

}  // namespace mstop
