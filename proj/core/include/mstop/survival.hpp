#pragma once

// Survival vectors i in {0,1}^N as bitmasks: bit k set means component k is
// still alive. Feasible stopping decisions from i are the submasks i' <= i.

#include <bit>
#include <cstdint>
#include <vector>

#include "mstop/errors.hpp"

namespace mstop {

inline constexpr int kMaxComponents = 16;

struct SurvivalVector {
  std::uint32_t bits = 0;

  constexpr bool alive(int k) const { return (bits >> k) & 1u; }
  constexpr int count() const { return std::popcount(bits); }
  constexpr bool none() const { return bits == 0; }
  constexpr bool subset_of(SurvivalVector other) const {
    return (bits & ~other.bits) == 0;
  }
  friend constexpr bool operator==(SurvivalVector, SurvivalVector) = default;
};

constexpr SurvivalVector full_mask(int n) {
  return SurvivalVector{n >= 32 ? ~0u : ((1u << n) - 1u)};
}

// Visits every i' <= i in descending mask order, i itself first and the empty
// mask last. Car(d) = 2^{|i|_1} visits.
template <class Fn>
constexpr void for_each_submask(SurvivalVector i, Fn&& fn) {
  std::uint32_t sub = i.bits;
  for (;;) {
    fn(SurvivalVector{sub});
    if (sub == 0) break;
    sub = (sub - 1) & i.bits;
  }
}

inline std::vector<SurvivalVector> enumerate_submasks(SurvivalVector i) {
  std::vector<SurvivalVector> out;
  out.reserve(std::size_t{1} << i.count());
  for_each_submask(i, [&](SurvivalVector s) { out.push_back(s); });
  return out;
}

// Clears the survival bit of component `ell` (1-based); ell = 0 is the
// identity (no component stopped). Clearing an already-dead component is a
// no-op.
inline SurvivalVector drop_one(SurvivalVector i, int ell, int num_components) {
  if (ell < 0 || ell > num_components) {
    throw ConfigError("drop_one: component index " + std::to_string(ell) +
                      " outside [0, " + std::to_string(num_components) + "]");
  }
  if (ell == 0) return i;
  return SurvivalVector{i.bits & ~(1u << (ell - 1))};
}

}  // namespace mstop
