#pragma once

// Forward Euler-scheme simulation and generation of the time-homogeneous
// training sample: M i.i.d. (state, survival, shock) triples per time step,
// drawn from the product law mu_X (x) mu_I (x) mu_eps.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mstop/policy.hpp"
#include "mstop/problem.hpp"
#include "mstop/rng.hpp"

namespace mstop {

// Sampling law mu_X for training states.
struct StateLaw {
  enum class Kind { uniform_box, lognormal };

  Kind kind = Kind::uniform_box;
  std::vector<double> lo, hi;  // uniform_box bounds, per coordinate
  std::vector<double> anchor;  // lognormal anchor x_0
  double spread = 0.0;         // lognormal log-scale

  static StateLaw uniform_box(std::vector<double> lo, std::vector<double> hi);
  // x_k = anchor_k exp(spread Z_k - spread^2 / 2), mean-preserving.
  static StateLaw lognormal(std::vector<double> anchor, double spread);
};

struct TrainingSet {
  int num_components = 0;
  int num_steps = 0;
  int noise_dim = 0;
  long sample_count = 0;  // M
  std::uint64_t seed = 0;
  StateLaw state_law;
  NoiseLaw noise_law;
  // Row-major [p][M][N], [p][M] and [p][M][d].
  std::vector<double> states;
  std::vector<std::uint32_t> masks;
  std::vector<double> shocks;

  std::span<const double> state(int n, long m) const {
    return {states.data() + (static_cast<std::size_t>(n) * sample_count + m) *
                                num_components,
            static_cast<std::size_t>(num_components)};
  }
  SurvivalVector mask(int n, long m) const {
    return SurvivalVector{masks[static_cast<std::size_t>(n) * sample_count + m]};
  }
  std::span<const double> shock(int n, long m) const {
    return {shocks.data() +
                (static_cast<std::size_t>(n) * sample_count + m) * noise_dim,
            static_cast<std::size_t>(noise_dim)};
  }
};

struct PathBatch {
  int num_components = 0;
  int num_steps = 0;
  long batch = 0;
  // Row-major [batch][p+1][N], [batch][p+1] and [batch][p][N+1].
  std::vector<double> states;
  std::vector<std::uint32_t> masks;
  std::vector<double> shocks;

  std::span<const double> state(long b, int n) const {
    return {states.data() + (b * (num_steps + 1) + n) * num_components,
            static_cast<std::size_t>(num_components)};
  }
  SurvivalVector mask(long b, int n) const {
    return SurvivalVector{masks[static_cast<std::size_t>(b * (num_steps + 1) + n)]};
  }
};

// One Euler increment F_n(x, eps): drift * h + idiosyncratic vol * eps_{1..N}
// + common vol * eps_0 on every coordinate. The caller applies the survival
// mask.
std::vector<double> euler_transition(const DiffusionSpec& spec, int n,
                                     std::span<const double> x,
                                     std::span<const double> eps);

// Simulates `batch` paths of the stopped Euler scheme. With a null policy no
// component is ever stopped. Policy decisions must satisfy i' <= i.
PathBatch simulate_paths(const DiffusionSpec& spec, const Policy* policy,
                         long batch, std::uint64_t seed);

// Number of (path, step, coordinate) entries whose state moved after the
// coordinate's survival bit fell. Zero on every correctly generated batch.
long count_freezing_violations(const PathBatch& paths);

// Draws the training sample: mu_I uniform over {0,1}^N, mu_eps the problem's
// noise law and mu_X the given state law. Same seed, same bytes.
TrainingSet draw_training_set(const ProblemSpec& spec, long sample_count,
                              const StateLaw& state_law, std::uint64_t seed);

// Versioned binary dump for cross-run reuse (native little-endian layout).
void save_training_set(const TrainingSet& set, const std::filesystem::path& path);
TrainingSet load_training_set(const std::filesystem::path& path);

// Draws one shock vector from `law` into out, using draws
// base_index .. base_index + d - 1 of the stream.
void sample_noise(const NoiseLaw& law, const RandomStream& stream,
                  std::uint32_t base_index, std::span<double> out);

}  // namespace mstop
