#pragma once

// Counter-based random number generation (Philox4x32-10). Every draw is a
// pure function of (seed, purpose tag, stream coordinates, draw index), so
// simulation output is reproducible and independent of thread scheduling.

#include <array>
#include <cmath>
#include <cstdint>

namespace mstop {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::uint64_t key,
                                            std::array<std::uint32_t, 4> ctr) {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return ctr;
  }
};

// Purpose tags keep draws made for different reasons statistically
// independent even when they share (seed, stream coordinates, index).
enum class StreamTag : std::uint32_t {
  training_set = 1,
  rollout = 2,
  audit = 3,
  net_init = 4,
  shuffle = 5,
  instance_gen = 6,
  eval_points = 7,
  path_sim = 8,
};

// One logical stream of i.i.d. draws, addressed by draw index. uniform(),
// normal() and bits32() at the same index are decorrelated via the counter's
// kind word, but by convention each index is used for exactly one draw.
struct RandomStream {
  std::uint64_t key = 0;
  std::uint32_t hi = 0;
  std::uint32_t lo = 0;

  std::array<std::uint32_t, 4> raw(std::uint32_t index, std::uint32_t kind) const {
    return Philox4x32::block(key, {hi, lo, index, kind});
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform(std::uint32_t index) const {
    const auto w = raw(index, 0);
    const std::uint64_t u =
        (static_cast<std::uint64_t>(w[0]) << 32 | w[1]) >> 11;
    return static_cast<double>(u) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; one block supplies both uniforms.
  double normal(std::uint32_t index) const {
    const auto w = raw(index, 1);
    const std::uint64_t a =
        (static_cast<std::uint64_t>(w[0]) << 32 | w[1]) >> 11;
    const std::uint64_t b =
        (static_cast<std::uint64_t>(w[2]) << 32 | w[3]) >> 11;
    const double u1 = (static_cast<double>(a) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(b) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  std::uint32_t bits32(std::uint32_t index) const { return raw(index, 2)[0]; }
};

inline RandomStream make_stream(std::uint64_t seed, StreamTag tag,
                                std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t key =
      detail::mix64(seed ^ (static_cast<std::uint64_t>(tag) * 0x9E3779B97F4A7C15ULL));
  return RandomStream{key, hi, lo};
}

}  // namespace mstop
