#include "mstop/simgen.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "mstop/parallel.hpp"

namespace mstop {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace

StateLaw StateLaw::uniform_box(std::vector<double> lo, std::vector<double> hi) {
  require(!lo.empty() && lo.size() == hi.size(),
          "uniform box needs matching lo/hi vectors");
  for (std::size_t k = 0; k < lo.size(); ++k) {
    require(lo[k] < hi[k], "degenerate sampling box: lo >= hi in coordinate " +
                               std::to_string(k + 1));
  }
  StateLaw law;
  law.kind = Kind::uniform_box;
  law.lo = std::move(lo);
  law.hi = std::move(hi);
  return law;
}

StateLaw StateLaw::lognormal(std::vector<double> anchor, double spread) {
  require(!anchor.empty(), "lognormal law needs an anchor point");
  require(spread > 0.0, "lognormal spread must be positive");
  StateLaw law;
  law.kind = Kind::lognormal;
  law.anchor = std::move(anchor);
  law.spread = spread;
  return law;
}

void sample_noise(const NoiseLaw& law, const RandomStream& stream,
                  std::uint32_t base_index, std::span<double> out) {
  if (law.kind == NoiseLaw::Kind::gaussian) {
    for (int j = 0; j < law.dim; ++j) {
      out[j] = law.stddev * stream.normal(base_index + static_cast<std::uint32_t>(j));
    }
    return;
  }
  const double u = stream.uniform(base_index);
  double cum = 0.0;
  std::size_t pick = law.atoms.size() - 1;
  for (std::size_t a = 0; a < law.probs.size(); ++a) {
    cum += law.probs[a];
    if (u < cum) {
      pick = a;
      break;
    }
  }
  const auto& atom = law.atoms[pick];
  for (int j = 0; j < law.dim; ++j) out[j] = atom[j];
}

std::vector<double> euler_transition(const DiffusionSpec& spec, int n,
                                     std::span<const double> x,
                                     std::span<const double> eps) {
  const int dim = spec.num_components;
  const double t = n * spec.step_size();
  const double common = spec.common_vol(t, x);
  std::vector<double> out(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) {
    out[k] = spec.drift(k, t, x) * spec.step_size() +
             spec.idio_vol(k, t, x) * eps[k + 1] + common * eps[0];
    if (!std::isfinite(out[k])) {
      throw NumericError("non-finite Euler increment at step " + std::to_string(n) +
                         ", coordinate " + std::to_string(k + 1));
    }
  }
  return out;
}

PathBatch simulate_paths(const DiffusionSpec& spec, const Policy* policy,
                         long batch, std::uint64_t seed) {
  require(batch >= 1, "batch must be >= 1");
  require(static_cast<int>(spec.initial_state.size()) == spec.num_components,
          "diffusion initial state has wrong dimension");
  const int n_comp = spec.num_components;
  const int p = spec.num_steps;
  const int noise_dim = n_comp + 1;
  const double h = spec.step_size();
  const NoiseLaw law = NoiseLaw::standard_gaussian(noise_dim, std::sqrt(h));

  PathBatch out;
  out.num_components = n_comp;
  out.num_steps = p;
  out.batch = batch;
  out.states.resize(static_cast<std::size_t>(batch) * (p + 1) * n_comp);
  out.masks.resize(static_cast<std::size_t>(batch) * (p + 1));
  out.shocks.resize(static_cast<std::size_t>(batch) * p * noise_dim);

  parallel_for(static_cast<std::size_t>(batch), 64, [&](std::size_t b0, std::size_t b1) {
    std::vector<double> x(static_cast<std::size_t>(n_comp));
    std::vector<double> eps(static_cast<std::size_t>(noise_dim));
    for (std::size_t b = b0; b < b1; ++b) {
      std::copy(spec.initial_state.begin(), spec.initial_state.end(), x.begin());
      SurvivalVector alive = full_mask(n_comp);
      double* states = out.states.data() + b * (p + 1) * n_comp;
      std::uint32_t* masks = out.masks.data() + b * (p + 1);
      double* shocks = out.shocks.data() + b * p * noise_dim;
      std::copy(x.begin(), x.end(), states);
      masks[0] = alive.bits;
      for (int n = 0; n < p; ++n) {
        SurvivalVector next = alive;
        if (policy != nullptr) {
          next = policy->decide(n, x, alive);
          if (!next.subset_of(alive)) {
            throw ContractViolation("policy revived a stopped component at step " +
                                    std::to_string(n));
          }
        }
        const RandomStream rs = make_stream(seed, StreamTag::path_sim,
                                            static_cast<std::uint32_t>(b),
                                            static_cast<std::uint32_t>(n));
        sample_noise(law, rs, 0, eps);
        std::copy(eps.begin(), eps.end(), shocks + static_cast<std::size_t>(n) * noise_dim);
        const std::vector<double> incr = euler_transition(spec, n, x, eps);
        for (int k = 0; k < n_comp; ++k) {
          if (next.alive(k)) x[static_cast<std::size_t>(k)] += incr[static_cast<std::size_t>(k)];
        }
        alive = next;
        std::copy(x.begin(), x.end(), states + static_cast<std::size_t>(n + 1) * n_comp);
        masks[n + 1] = alive.bits;
      }
    }
  });
  return out;
}

long count_freezing_violations(const PathBatch& paths) {
  long violations = 0;
  for (long b = 0; b < paths.batch; ++b) {
    for (int n = 0; n < paths.num_steps; ++n) {
      const auto before = paths.state(b, n);
      const auto after = paths.state(b, n + 1);
      const SurvivalVector next = paths.mask(b, n + 1);
      for (int k = 0; k < paths.num_components; ++k) {
        if (!next.alive(k) && after[k] != before[k]) ++violations;
      }
    }
  }
  return violations;
}

TrainingSet draw_training_set(const ProblemSpec& spec, long sample_count,
                              const StateLaw& state_law, std::uint64_t seed) {
  require(sample_count >= 1, "training sample count must be >= 1");
  const int n_comp = spec.num_components;
  if (state_law.kind == StateLaw::Kind::uniform_box) {
    require(static_cast<int>(state_law.lo.size()) == n_comp,
            "state law dimension does not match the problem");
  } else {
    require(static_cast<int>(state_law.anchor.size()) == n_comp,
            "state law dimension does not match the problem");
  }

  TrainingSet set;
  set.num_components = n_comp;
  set.num_steps = spec.num_steps;
  set.noise_dim = spec.noise_dim;
  set.sample_count = sample_count;
  set.seed = seed;
  set.state_law = state_law;
  set.noise_law = spec.noise;
  set.states.resize(static_cast<std::size_t>(spec.num_steps) * sample_count * n_comp);
  set.masks.resize(static_cast<std::size_t>(spec.num_steps) * sample_count);
  set.shocks.resize(static_cast<std::size_t>(spec.num_steps) * sample_count *
                    spec.noise_dim);

  const std::uint32_t mask_bits = full_mask(n_comp).bits;
  for (int n = 0; n < spec.num_steps; ++n) {
    parallel_for(static_cast<std::size_t>(sample_count), 512,
                 [&, n](std::size_t m0, std::size_t m1) {
      for (std::size_t m = m0; m < m1; ++m) {
        const RandomStream rs = make_stream(seed, StreamTag::training_set,
                                            static_cast<std::uint32_t>(n),
                                            static_cast<std::uint32_t>(m));
        double* x = set.states.data() +
                    (static_cast<std::size_t>(n) * sample_count + m) * n_comp;
        for (int k = 0; k < n_comp; ++k) {
          if (state_law.kind == StateLaw::Kind::uniform_box) {
            x[k] = state_law.lo[k] +
                   (state_law.hi[k] - state_law.lo[k]) * rs.uniform(static_cast<std::uint32_t>(k));
          } else {
            x[k] = state_law.anchor[k] *
                   std::exp(state_law.spread * rs.normal(static_cast<std::uint32_t>(k)) -
                            0.5 * state_law.spread * state_law.spread);
          }
        }
        set.masks[static_cast<std::size_t>(n) * sample_count + m] =
            rs.bits32(static_cast<std::uint32_t>(n_comp)) & mask_bits;
        double* eps = set.shocks.data() +
                      (static_cast<std::size_t>(n) * sample_count + m) * spec.noise_dim;
        sample_noise(spec.noise, rs, static_cast<std::uint32_t>(n_comp + 1),
                     {eps, static_cast<std::size_t>(spec.noise_dim)});
      }
    });
  }
  return set;
}

namespace {

constexpr std::uint32_t kTrainingSetMagic = 0x5354534Du;  // "MSTS"
constexpr std::uint32_t kTrainingSetVersion = 1;

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

void write_doubles(std::ostream& os, const std::vector<double>& v) {
  write_pod<std::uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::istream& is) {
  const auto size = read_pod<std::uint64_t>(is);
  std::vector<double> v(size);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(size * sizeof(double)));
  return v;
}

}  // namespace

void save_training_set(const TrainingSet& set, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  write_pod(os, kTrainingSetMagic);
  write_pod(os, kTrainingSetVersion);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(set.num_components));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(set.num_steps));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(set.noise_dim));
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(set.sample_count));
  write_pod<std::uint64_t>(os, set.seed);

  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(set.state_law.kind));
  write_doubles(os, set.state_law.lo);
  write_doubles(os, set.state_law.hi);
  write_doubles(os, set.state_law.anchor);
  write_pod(os, set.state_law.spread);

  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(set.noise_law.kind));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(set.noise_law.dim));
  write_pod(os, set.noise_law.stddev);
  write_pod<std::uint64_t>(os, set.noise_law.atoms.size());
  for (std::size_t a = 0; a < set.noise_law.atoms.size(); ++a) {
    write_doubles(os, set.noise_law.atoms[a]);
  }
  write_doubles(os, set.noise_law.probs);

  write_doubles(os, set.states);
  write_pod<std::uint64_t>(os, set.masks.size());
  os.write(reinterpret_cast<const char*>(set.masks.data()),
           static_cast<std::streamsize>(set.masks.size() * sizeof(std::uint32_t)));
  write_doubles(os, set.shocks);
  if (!os) throw ConfigError("write failed for " + path.string());
}

TrainingSet load_training_set(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path.string());
  if (read_pod<std::uint32_t>(is) != kTrainingSetMagic) {
    throw ConfigError(path.string() + " is not a training-set dump");
  }
  if (read_pod<std::uint32_t>(is) != kTrainingSetVersion) {
    throw ConfigError(path.string() + " has an unsupported dump version");
  }
  TrainingSet set;
  set.num_components = static_cast<int>(read_pod<std::uint32_t>(is));
  set.num_steps = static_cast<int>(read_pod<std::uint32_t>(is));
  set.noise_dim = static_cast<int>(read_pod<std::uint32_t>(is));
  set.sample_count = static_cast<long>(read_pod<std::uint64_t>(is));
  set.seed = read_pod<std::uint64_t>(is);

  set.state_law.kind = static_cast<StateLaw::Kind>(read_pod<std::uint32_t>(is));
  set.state_law.lo = read_doubles(is);
  set.state_law.hi = read_doubles(is);
  set.state_law.anchor = read_doubles(is);
  set.state_law.spread = read_pod<double>(is);

  set.noise_law.kind = static_cast<NoiseLaw::Kind>(read_pod<std::uint32_t>(is));
  set.noise_law.dim = static_cast<int>(read_pod<std::uint32_t>(is));
  set.noise_law.stddev = read_pod<double>(is);
  set.noise_law.atoms.resize(read_pod<std::uint64_t>(is));
  for (auto& atom : set.noise_law.atoms) atom = read_doubles(is);
  set.noise_law.probs = read_doubles(is);

  set.states = read_doubles(is);
  set.masks.resize(read_pod<std::uint64_t>(is));
  is.read(reinterpret_cast<char*>(set.masks.data()),
          static_cast<std::streamsize>(set.masks.size() * sizeof(std::uint32_t)));
  set.shocks = read_doubles(is);
  if (!is) throw ConfigError("truncated training-set dump: " + path.string());
  return set;
}

}  // namespace mstop
