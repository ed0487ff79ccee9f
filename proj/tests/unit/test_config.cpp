#include <doctest.h>

#include "mstop/config.hpp"
#include "mstop/csvio.hpp"

using namespace mstop;

namespace {

constexpr const char* kSample = R"(# a comment
[alpha]
count = 12
rate = 0.25   # trailing comment
name = hello
flag = true
ps = 1, 2, 3
xs = 0.5, 1.5

[beta]
answer = 42
)";

}  // namespace

TEST_CASE("config: typed reads") {
  ParsedConfig cfg = ParsedConfig::from_text(kSample, "sample.cfg");
  CHECK(cfg.get_int("alpha", "count") == 12);
  CHECK(cfg.get_double("alpha", "rate") == 0.25);
  CHECK(cfg.get_string("alpha", "name") == "hello");
  CHECK(cfg.get_bool("alpha", "flag", false));
  CHECK(cfg.get_int_list("alpha", "ps") == std::vector<long>{1, 2, 3});
  CHECK(cfg.get_double_list("alpha", "xs") == std::vector<double>{0.5, 1.5});
  CHECK(cfg.get_int("beta", "answer") == 42);
  CHECK(cfg.get_int("beta", "missing", 7) == 7);
  cfg.reject_unknown();
}

TEST_CASE("config: unknown keys are rejected with line numbers") {
  ParsedConfig cfg = ParsedConfig::from_text(kSample, "sample.cfg");
  cfg.get_int("alpha", "count");
  CHECK_THROWS_WITH_AS(cfg.reject_unknown(), doctest::Contains("sample.cfg:4"),
                       ConfigError);
}

TEST_CASE("config: parse failures carry file and line") {
  CHECK_THROWS_WITH_AS(ParsedConfig::from_text("key = 1\n", "x.cfg"),
                       doctest::Contains("x.cfg:1"), ConfigError);
  CHECK_THROWS_WITH_AS(ParsedConfig::from_text("[s]\nbroken line\n", "x.cfg"),
                       doctest::Contains("x.cfg:2"), ConfigError);
  CHECK_THROWS_WITH_AS(ParsedConfig::from_text("[s]\na = 1\na = 2\n", "x.cfg"),
                       doctest::Contains("duplicate"), ConfigError);
  ParsedConfig bad_type = ParsedConfig::from_text("[s]\nn = abc\n", "x.cfg");
  CHECK_THROWS_WITH_AS(bad_type.get_int("s", "n"), doctest::Contains("s.n"),
                       ConfigError);
  CHECK_THROWS_AS(ParsedConfig::from_text("[s]\nmissing\n", "x.cfg"), ConfigError);
}

TEST_CASE("config: missing required key names the key") {
  ParsedConfig cfg = ParsedConfig::from_text("[s]\na = 1\n", "x.cfg");
  CHECK_THROWS_WITH_AS(cfg.get_int("s", "b"), doctest::Contains("s.b"), ConfigError);
}

TEST_CASE("format_double: shortest round-trip representations") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-3.25) == "-3.25");
  CHECK(format_double(0.1) == "0.1");
  const double awkward = 1.0 / 3.0;
  CHECK(std::stod(format_double(awkward)) == awkward);
}
