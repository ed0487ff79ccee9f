#include <doctest.h>

#include "mstop/rng.hpp"
#include "mstop/survival.hpp"

using namespace mstop;

TEST_CASE("submask enumeration: definition cases") {
  // i = (1,0,1): components 1 and 3 alive.
  const SurvivalVector i{0b101};
  const auto subs = enumerate_submasks(i);
  REQUIRE(subs.size() == 4);
  CHECK(subs.front() == i);
  CHECK(subs.back().bits == 0);
  for (const auto s : subs) CHECK(s.subset_of(i));

  CHECK(enumerate_submasks(SurvivalVector{0}).size() == 1);
  CHECK(enumerate_submasks(full_mask(10)).size() == 1024);
}

TEST_CASE("submask enumeration: descending order with i first, 0 last") {
  const RandomStream rs = make_stream(9, StreamTag::instance_gen, 0, 0);
  for (std::uint32_t t = 0; t < 64; ++t) {
    const SurvivalVector i{rs.bits32(t) & full_mask(8).bits};
    const auto subs = enumerate_submasks(i);
    REQUIRE(subs.size() == (std::size_t{1} << i.count()));
    CHECK(subs.front() == i);
    CHECK(subs.back().bits == 0);
    for (std::size_t a = 0; a < subs.size(); ++a) {
      CHECK(subs[a].subset_of(i));
      if (a > 0) CHECK(subs[a].bits < subs[a - 1].bits);
    }
  }
}

TEST_CASE("drop_one: clears one component, 0 is the identity") {
  const SurvivalVector i{0b011};  // (1,1,0)
  CHECK(drop_one(i, 1, 3).bits == 0b010);
  CHECK(drop_one(i, 0, 3) == i);
  CHECK(drop_one(i, 3, 3) == i);  // already dead: idempotent
  CHECK(drop_one(drop_one(i, 2, 3), 2, 3).bits == 0b001);
  CHECK_THROWS_AS(drop_one(i, 4, 3), ConfigError);
  CHECK_THROWS_AS(drop_one(i, -1, 3), ConfigError);
}

TEST_CASE("survival vector basics") {
  CHECK(full_mask(5).bits == 0b11111);
  CHECK(full_mask(5).count() == 5);
  CHECK(SurvivalVector{0}.none());
  CHECK(SurvivalVector{0b100}.alive(2));
  CHECK(!SurvivalVector{0b100}.alive(0));
}
