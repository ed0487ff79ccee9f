#include "mstop/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

namespace mstop {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

std::string state_key(int n, SurvivalVector i, std::span<const double> x) {
  std::string key(sizeof(int) + sizeof(std::uint32_t) + x.size() * sizeof(double), '\0');
  char* out = key.data();
  std::memcpy(out, &n, sizeof(int));
  out += sizeof(int);
  std::memcpy(out, &i.bits, sizeof(std::uint32_t));
  out += sizeof(std::uint32_t);
  std::memcpy(out, x.data(), x.size() * sizeof(double));
  return key;
}

class DpSolver {
 public:
  DpSolver(const FiniteInstance& inst, DpVariant variant)
      : inst_(inst), problem_(inst.problem), variant_(variant) {}

  double solve(int n, std::span<const double> x, SurvivalVector i) {
    const std::string key = state_key(n, i, x);
    if (auto it = index.find(key); it != index.end()) {
      return entries[it->second].value;
    }
    double value;
    if (n == problem_.num_steps) {
      value = problem_.terminal_reward(x, i);
    } else if (variant_ == DpVariant::original) {
      value = best_over_submasks(n, x, i);
    } else {
      value = best_over_single_drops(n, x, i);
    }
    if (entries.size() >= inst_.state_cap) {
      throw ConfigError("finite instance exceeds the reachable-state cap (" +
                        std::to_string(entries.size()) + " states)");
    }
    index.emplace(key, entries.size());
    entries.push_back({n, i, std::vector<double>(x.begin(), x.end()), value});
    return value;
  }

  std::unordered_map<std::string, std::size_t> index;
  std::vector<ExactDpTable::Entry> entries;

 private:
  double expectation(int n, std::span<const double> x, SurvivalVector next_mask) {
    const NoiseLaw& law = problem_.noise;
    std::vector<double> next(x.begin(), x.end());
    std::vector<double> incr(x.size());
    double acc = 0.0;
    for (std::size_t a = 0; a < law.atoms.size(); ++a) {
      std::copy(x.begin(), x.end(), next.begin());
      problem_.transition(n, x, law.atoms[a], incr);
      for (std::size_t k = 0; k < x.size(); ++k) {
        if (next_mask.alive(static_cast<int>(k))) next[k] += incr[k];
      }
      acc += law.probs[a] * solve(n + 1, next, next_mask);
    }
    return acc;
  }

  double best_over_submasks(int n, std::span<const double> x, SurvivalVector i) {
    double best = 0.0;
    bool first = true;
    std::uint32_t sub = i.bits;
    for (;;) {
      const SurvivalVector cand{sub};
      const double v =
          problem_.running_reward(n, x, i, cand) + expectation(n, x, cand);
      if (first || v > best) {
        best = v;
        first = false;
      }
      if (sub == 0) break;
      sub = (sub - 1) & i.bits;
    }
    return best;
  }

  double best_over_single_drops(int n, std::span<const double> x, SurvivalVector i) {
    double best = 0.0;
    bool first = true;
    for (int ell = 0; ell <= problem_.num_components; ++ell) {
      const SurvivalVector cand =
          ell == 0 ? i : SurvivalVector{i.bits & ~(1u << (ell - 1))};
      const double v =
          problem_.running_reward(n, x, i, cand) + expectation(n, x, cand);
      if (first || v > best) {
        best = v;
        first = false;
      }
    }
    return best;
  }

  const FiniteInstance& inst_;
  const ProblemSpec& problem_;
  DpVariant variant_;
};

}  // namespace

bool ExactDpTable::contains(int n, std::span<const double> x, SurvivalVector i) const {
  return index_.count(state_key(n, i, x)) > 0;
}

double ExactDpTable::value(int n, std::span<const double> x, SurvivalVector i) const {
  const auto it = index_.find(state_key(n, i, x));
  if (it == index_.end()) {
    throw ConfigError("queried a state outside the tabulated reachable tree");
  }
  return entries_[it->second].value;
}

ExactDpTable exact_dp(const FiniteInstance& inst, DpVariant variant) {
  const ProblemSpec& pb = inst.problem;
  require(pb.noise.kind == NoiseLaw::Kind::finite,
          "exact_dp needs a finite-support noise law");
  require(pb.num_components >= 1 && pb.num_components <= inst.max_components,
          "exact_dp guard: component count exceeds " +
              std::to_string(inst.max_components));
  require(pb.num_steps >= 1 && pb.num_steps <= inst.max_steps,
          "exact_dp guard: step count exceeds " + std::to_string(inst.max_steps));
  require(static_cast<int>(pb.noise.atoms.size()) <= inst.max_support,
          "exact_dp guard: noise support exceeds " + std::to_string(inst.max_support));
  require(static_cast<int>(pb.initial_state.size()) == pb.num_components,
          "finite instance needs an initial state");

  ExactDpTable table;
  table.num_components = pb.num_components;
  table.num_steps = pb.num_steps;
  table.variant = variant;
  DpSolver solver(inst, variant);
  solver.solve(0, pb.initial_state, full_mask(pb.num_components));
  table.index_ = std::move(solver.index);
  table.entries_ = std::move(solver.entries);
  return table;
}

double binomial_put(double spot, double strike, double mu, double vol,
                    double horizon, int steps) {
  require(steps >= 1, "binomial_put needs steps >= 1");
  require(vol > 0.0, "binomial_put needs vol > 0");
  require(spot > 0.0 && strike >= 0.0 && horizon > 0.0,
          "binomial_put needs spot > 0, strike >= 0, horizon > 0");
  const double dt = horizon / steps;
  const double up = std::exp(vol * std::sqrt(dt));
  const double down = 1.0 / up;
  const double growth = std::exp(mu * dt);
  const double q = (growth - down) / (up - down);
  if (!(q > 0.0 && q < 1.0)) {
    const double dt_max = (vol / mu) * (vol / mu);
    throw NumericError(
        "drift-matched probability outside (0,1); use a time step below " +
        std::to_string(dt_max) + " years (" +
        std::to_string(static_cast<int>(std::ceil(horizon / dt_max)) + 1) +
        "+ steps)");
  }

  std::vector<double> value(static_cast<std::size_t>(steps) + 1);
  for (int j = 0; j <= steps; ++j) {
    const double s = spot * std::pow(up, 2.0 * j - steps);
    value[j] = std::max(strike - s, 0.0);
  }
  for (int n = steps - 1; n >= 0; --n) {
    for (int j = 0; j <= n; ++j) {
      const double s = spot * std::pow(up, 2.0 * j - n);
      const double hold = q * value[j + 1] + (1.0 - q) * value[j];
      value[j] = std::max(hold, std::max(strike - s, 0.0));
    }
  }
  return value[0];
}

double log_utility_value(std::span<const double> x) {
  require(!x.empty(), "log_utility_value needs a non-empty state");
  double mean = 0.0;
  for (double v : x) {
    require(v >= 0.0, "log_utility_value requires a componentwise nonnegative state");
    mean += v;
  }
  return std::log1p(mean / static_cast<double>(x.size()));
}

bool is_pairwise_distinct_schedule(const std::vector<int>& stops, int p) {
  for (std::size_t k = 0; k < stops.size(); ++k) {
    for (std::size_t l = k + 1; l < stops.size(); ++l) {
      if (stops[k] == stops[l] && stops[k] != p) return false;
    }
  }
  return true;
}

StopSchedule serialize_stops(const std::vector<int>& stops, int p) {
  const int n_comp = static_cast<int>(stops.size());
  require(n_comp >= 1, "serialize_stops needs at least one component");
  for (int s : stops) {
    require(s >= 0 && s <= p, "stop steps must lie in [0, p]");
  }

  std::vector<int> serialized(static_cast<std::size_t>(n_comp), p);
  std::set<int> pending;  // 1-based component ids, natural order
  int last_assigned = 0;  // 0 = none
  for (int n = 0; n < p; ++n) {
    if (last_assigned != 0) {
      pending.erase(last_assigned);
      last_assigned = 0;
    }
    for (int k = 1; k <= n_comp; ++k) {
      if (stops[static_cast<std::size_t>(k - 1)] == n) pending.insert(k);
    }
    if (!pending.empty()) {
      const int k = *pending.begin();
      serialized[static_cast<std::size_t>(k - 1)] = n;
      last_assigned = k;
    }
  }

  StopSchedule out;
  out.stops = std::move(serialized);
  out.pairwise_distinct = is_pairwise_distinct_schedule(out.stops, p);
  return out;
}

}  // namespace mstop
