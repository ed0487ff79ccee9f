#include "mstop/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "mstop/parallel.hpp"
#include "mstop/rng.hpp"

namespace mstop {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace

EvalReport rollout_policy(const ProblemSpec& spec, const Policy& policy, long paths,
                          std::uint64_t seed) {
  require(paths >= 1, "rollout needs at least one path");
  require(static_cast<int>(spec.initial_state.size()) == spec.num_components,
          "problem has no initial state");
  const int n_comp = spec.num_components;
  const int p = spec.num_steps;
  const std::size_t hist_size = static_cast<std::size_t>(p) + 1;

  // One path's total reward; the histogram pointer is null for the
  // reference pre-run.
  auto simulate_one = [&](std::size_t b, double* hist) {
    std::vector<double> x(static_cast<std::size_t>(n_comp));
    std::vector<double> eps(static_cast<std::size_t>(spec.noise_dim));
    std::vector<double> incr(static_cast<std::size_t>(n_comp));
    std::copy(spec.initial_state.begin(), spec.initial_state.end(), x.begin());
    SurvivalVector alive = full_mask(n_comp);
    double reward = 0.0;
    for (int n = 0; n < p; ++n) {
      const SurvivalVector next = policy.decide(n, x, alive);
      if (!next.subset_of(alive)) {
        throw ContractViolation("policy revived a stopped component at step " +
                                std::to_string(n));
      }
      reward += spec.running_reward(n, x, alive, next);
      if (hist) hist[n] += static_cast<double>(alive.count() - next.count());
      const RandomStream rs = make_stream(seed, StreamTag::rollout,
                                          static_cast<std::uint32_t>(b),
                                          static_cast<std::uint32_t>(n));
      sample_noise(spec.noise, rs, 0, eps);
      spec.transition(n, x, eps, incr);
      for (int k = 0; k < n_comp; ++k) {
        if (next.alive(k)) x[static_cast<std::size_t>(k)] += incr[static_cast<std::size_t>(k)];
      }
      alive = next;
    }
    reward += spec.terminal_reward(x, alive);
    if (hist) hist[p] += static_cast<double>(alive.count());
    return reward;
  };

  // Accumulate around the first path's reward so degenerate (constant)
  // policies report exactly zero variance.
  const double shift = simulate_one(0, nullptr);

  // Accumulator layout: [sum of (r - shift), sum of squares, histogram...].
  std::vector<double> acc(2 + hist_size);
  parallel_accumulate(static_cast<std::size_t>(paths), 256, acc.size(), acc.data(),
                      [&](std::size_t b0, std::size_t b1, double* out) {
                        for (std::size_t b = b0; b < b1; ++b) {
                          const double centered = simulate_one(b, out + 2) - shift;
                          out[0] += centered;
                          out[1] += centered * centered;
                        }
                      });

  EvalReport report;
  report.paths = paths;
  report.seed = seed;
  const double centered_mean = acc[0] / static_cast<double>(paths);
  report.estimate = shift + centered_mean;
  const double var =
      paths > 1 ? std::max(0.0, acc[1] / static_cast<double>(paths) -
                                    centered_mean * centered_mean) *
                      (static_cast<double>(paths) / (paths - 1.0))
                : 0.0;
  report.std_error = std::sqrt(var / static_cast<double>(paths));
  report.stops_per_step.resize(hist_size);
  for (std::size_t n = 0; n < hist_size; ++n) {
    report.stops_per_step[n] = static_cast<long>(std::llround(acc[2 + n]));
  }
  return report;
}

double sup_norm_error(const ValueFn& f, const ValueFn& ref,
                      const std::vector<std::vector<double>>& states,
                      int num_components) {
  require(num_components >= 1 && num_components <= kMaxComponents,
          "sup_norm_error refuses N outside [1, " + std::to_string(kMaxComponents) +
              "] (2^N masks per state)");
  require(!states.empty(), "sup_norm_error needs at least one state");
  const std::uint32_t top = full_mask(num_components).bits;
  const double sum =
      parallel_sum(states.size(), 16, [&](std::size_t s0, std::size_t s1) {
        double acc = 0.0;
        for (std::size_t s = s0; s < s1; ++s) {
          double worst = 0.0;
          for (std::uint32_t bits = 0; bits <= top; ++bits) {
            const SurvivalVector i{bits};
            const double gap = std::abs(f(states[s], i) - ref(states[s], i));
            worst = std::max(worst, gap);
          }
          acc += worst * worst;
        }
        return acc;
      });
  return std::sqrt(sum / static_cast<double>(states.size()));
}

std::vector<std::vector<double>> sample_states(const StateLaw& law, long count,
                                               std::uint64_t seed) {
  require(count >= 1, "need at least one state");
  const std::size_t dim =
      law.kind == StateLaw::Kind::uniform_box ? law.lo.size() : law.anchor.size();
  std::vector<std::vector<double>> states(static_cast<std::size_t>(count));
  for (long s = 0; s < count; ++s) {
    const RandomStream rs =
        make_stream(seed, StreamTag::eval_points, static_cast<std::uint32_t>(s), 0);
    std::vector<double> x(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      if (law.kind == StateLaw::Kind::uniform_box) {
        x[k] = law.lo[k] + (law.hi[k] - law.lo[k]) * rs.uniform(static_cast<std::uint32_t>(k));
      } else {
        x[k] = law.anchor[k] * std::exp(law.spread * rs.normal(static_cast<std::uint32_t>(k)) -
                                        0.5 * law.spread * law.spread);
      }
    }
    states[static_cast<std::size_t>(s)] = std::move(x);
  }
  return states;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points,
                 double horizon) {
  require(points.size() >= 3, "rate fit needs at least 3 points");
  require(horizon > 0.0, "rate fit needs a positive horizon");
  for (std::size_t a = 0; a < points.size(); ++a) {
    require(points[a].first >= 1.0, "step counts must be >= 1");
    require(points[a].second > 0.0,
            "rate fit rejects non-positive errors (log undefined)");
    for (std::size_t b = a + 1; b < points.size(); ++b) {
      require(points[a].first != points[b].first, "step counts must be distinct");
    }
  }

  const double count = static_cast<double>(points.size());
  double mean_lh = 0.0, mean_le = 0.0;
  std::vector<double> lh(points.size()), le(points.size());
  for (std::size_t a = 0; a < points.size(); ++a) {
    lh[a] = std::log(horizon / points[a].first);
    le[a] = std::log(points[a].second);
    mean_lh += lh[a];
    mean_le += le[a];
  }
  mean_lh /= count;
  mean_le /= count;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t a = 0; a < points.size(); ++a) {
    sxx += (lh[a] - mean_lh) * (lh[a] - mean_lh);
    sxy += (lh[a] - mean_lh) * (le[a] - mean_le);
  }

  RateFit fit;
  fit.points = points;
  fit.slope = sxy / sxx;
  fit.intercept = mean_le - fit.slope * mean_lh;
  double rss = 0.0;
  for (std::size_t a = 0; a < points.size(); ++a) {
    const double r = le[a] - (fit.intercept + fit.slope * lh[a]);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / count);
  return fit;
}

std::vector<std::pair<double, double>> diagonal_value_curve(
    const ValueStack& stack, std::span<const double> grid, SolveMode mode) {
  const int n_comp = stack.problem->num_components;
  const SurvivalVector all = full_mask(n_comp);
  std::vector<std::pair<double, double>> curve(grid.size());
  parallel_for(grid.size(), 2, [&](std::size_t g0, std::size_t g1) {
    std::vector<double> x(static_cast<std::size_t>(n_comp));
    for (std::size_t g = g0; g < g1; ++g) {
      std::fill(x.begin(), x.end(), grid[g]);
      curve[g] = {grid[g], stack.value(0, x, all, mode).value};
    }
  });
  return curve;
}

std::vector<std::pair<double, double>> diagonal_value_curve(
    const ValueStack& stack, std::span<const double> grid) {
  return diagonal_value_curve(stack, grid, stack.mode);
}

std::vector<PlanePoint> plane_value_curve(const ValueStack& stack,
                                          std::span<const double> first_axis,
                                          std::span<const double> other_axis) {
  const int n_comp = stack.problem->num_components;
  const SurvivalVector all = full_mask(n_comp);
  std::vector<PlanePoint> out(first_axis.size() * other_axis.size());
  parallel_for(out.size(), 2, [&](std::size_t g0, std::size_t g1) {
    std::vector<double> x(static_cast<std::size_t>(n_comp));
    for (std::size_t g = g0; g < g1; ++g) {
      const double first = first_axis[g / other_axis.size()];
      const double other = other_axis[g % other_axis.size()];
      x[0] = first;
      std::fill(x.begin() + 1, x.end(), other);
      out[g] = {first, other, stack.value(0, x, all).value};
    }
  });
  return out;
}

std::vector<double> linspace(double lo, double hi, int count) {
  require(count >= 2 && lo < hi, "linspace needs count >= 2 and lo < hi");
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int g = 0; g < count; ++g) {
    grid[static_cast<std::size_t>(g)] = lo + (hi - lo) * g / (count - 1.0);
  }
  return grid;
}

double curve_l2_error(std::span<const std::pair<double, double>> curve,
                      std::span<const double> reference) {
  require(curve.size() == reference.size() && !curve.empty(),
          "curve and reference sizes differ");
  double acc = 0.0;
  for (std::size_t g = 0; g < curve.size(); ++g) {
    const double r = curve[g].second - reference[g];
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(curve.size()));
}

double curve_relative_l2_error(std::span<const std::pair<double, double>> curve,
                               std::span<const double> reference, double floor) {
  require(curve.size() == reference.size() && !curve.empty(),
          "curve and reference sizes differ");
  double acc = 0.0;
  for (std::size_t g = 0; g < curve.size(); ++g) {
    const double r = (curve[g].second - reference[g]) /
                     std::max(std::abs(reference[g]), floor);
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(curve.size()));
}

}  // namespace mstop
