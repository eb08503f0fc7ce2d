// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "bfi/fault.hpp"
#include "bfi/scenario.hpp"

using namespace bfi;

namespace {

// Pearson statistic against a uniform expectation.
double chi_square(const std::vector<std::size_t>& counts) {
  double n = 0;
  for (auto c : counts) n += static_cast<double>(c);
  const double e = n / static_cast<double>(counts.size());
  double x = 0;
  for (auto c : counts) x += (static_cast<double>(c) - e) * (static_cast<double>(c) - e) / e;
  return x;
}

}  // namespace

TEST_CASE("catalog holds every fixed corruption once") {
  const auto& c = fault_catalog();
  CHECK(c.size() == 53);
  std::set<std::string> names;
  std::size_t expected = 0;
  for (const auto& s : registry()) {
    if (!s.injectable) continue;
    expected += s.kind == VarKind::categorical ? s.categories.size() : 2;
  }
  CHECK(c.size() == expected);
  for (const auto& f : c) {
    CHECK(names.insert(f.name()).second);
    CHECK(spec(f.var).injectable);
  }
}

TEST_CASE("fault names round trip") {
  for (const auto& f : fault_catalog()) CHECK(parse_fault_type(f.name()) == f);
  for (const char* n : {"control.brake:bit=62", "control.brake:bit=3+40", "planning.obstacle_pos:value=2"}) {
    CHECK(parse_fault_type(n).name() == n);
  }
  const FaultType two = parse_fault_type("control.brake:bit=3+40");
  CHECK(two.bit == 3);
  CHECK(two.bit2 == 40);
}

TEST_CASE("malformed fault names are rejected") {
  for (const char* n : {"control.brake", "nope.var:max", "control.brake:bit=5+5", "control.brake:bit=64",
                        "control.brake:sideways", "perception.lane_type:cat=zigzag",
                        "perception.lane_type:max", "control.brake:double"}) {
    CHECK_THROWS_AS((void)parse_fault_type(n), std::invalid_argument);
  }
}

TEST_CASE("bit flips are involutions and bit 63 is the sign") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 500; ++i) {
    const double x = u(rng);
    const int b = i % 64;
    CHECK(std::bit_cast<std::uint64_t>(flip_bit(flip_bit(x, b), b)) == std::bit_cast<std::uint64_t>(x));
    CHECK(flip_bit(x, 63) == -x);
    const auto diff = std::bit_cast<std::uint64_t>(flip_bit(x, b)) ^ std::bit_cast<std::uint64_t>(x);
    CHECK(std::popcount(diff) == 1);
  }
}

TEST_CASE("double flips change exactly two distinct bits") {
  for (std::uint64_t seed = 1; seed < 400; ++seed) {
    const double x = 3.25;
    const auto d1 = std::bit_cast<std::uint64_t>(flip_random_bits(x, 1, seed)) ^ std::bit_cast<std::uint64_t>(x);
    const auto d2 = std::bit_cast<std::uint64_t>(flip_random_bits(x, 2, seed)) ^ std::bit_cast<std::uint64_t>(x);
    CHECK(std::popcount(d1) == 1);
    CHECK(std::popcount(d2) == 2);
  }
  CHECK_THROWS_AS((void)flip_random_bits(1.0, 3, 1), std::invalid_argument);
  FaultType f = parse_fault_type("control.brake:bit=0+63");
  CHECK(apply_rule(f, 0.5) == -std::bit_cast<double>(std::bit_cast<std::uint64_t>(0.5) ^ 1u));
}

TEST_CASE("random bit positions are uniform over 64 bits") {
  // 63 degrees of freedom; 103.4 is the 0.999 quantile
  std::vector<std::size_t> first(64), random(64);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 64000; ++i) {
    const FaultPlan p = random_plan(FaultModel::BitFlip, 500, rng);
    ++first[static_cast<std::size_t>(p.types[0].bit)];
    const auto d = std::bit_cast<std::uint64_t>(flip_random_bits(1.0, 1, static_cast<std::uint64_t>(i)))
                   ^ std::bit_cast<std::uint64_t>(1.0);
    ++random[static_cast<std::size_t>(std::countr_zero(d))];
  }
  CHECK(chi_square(first) < 103.4);
  CHECK(chi_square(random) < 103.4);
}

TEST_CASE("multi-scene durations are uniform on [10, 100]") {
  // 90 degrees of freedom; 137.2 is the 0.999 quantile
  std::vector<std::size_t> counts(91);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 45500; ++i) {
    const FaultPlan p = random_plan(i % 2 ? FaultModel::MRandom : FaultModel::MFixed, 1000, rng);
    REQUIRE(p.duration >= 10);
    REQUIRE(p.duration <= 100);
    ++counts[p.duration - 10];
  }
  CHECK(chi_square(counts) < 137.2);
}

TEST_CASE("random plans satisfy their invariants") {
  std::mt19937_64 rng(3);
  for (auto m : {FaultModel::OneFixed, FaultModel::MFixed, FaultModel::OneRandom, FaultModel::MRandom,
                 FaultModel::BitFlip}) {
    for (int i = 0; i < 300; ++i) {
      const std::size_t scenes = 101 + static_cast<std::size_t>(i);
      const FaultPlan p = random_plan(m, scenes, rng);
      CHECK_NOTHROW(p.validate(scenes));
      CHECK(p.start + p.duration < scenes);
      REQUIRE(p.types.size() == 1);
      CHECK(spec(p.types[0].var).injectable);
      if (m == FaultModel::BitFlip) CHECK(p.types[0].bit != p.types[0].bit2);
    }
    CHECK(fault_model_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS((void)random_plan(FaultModel::MFixed, 10, rng), std::invalid_argument);
}

TEST_CASE("plan validation rejects broken plans") {
  FaultPlan p;
  p.types = {fault_catalog()[0]};
  p.duration = 2;
  CHECK_THROWS(p.validate(100));
  p.model = FaultModel::MFixed;
  p.duration = 9;
  CHECK_THROWS(p.validate(100));
  p.duration = 10;
  p.start = 91;
  CHECK_THROWS(p.validate(100));
  p.start = 90;
  CHECK_NOTHROW(p.validate(100));
  p.types.clear();
  CHECK_THROWS(p.validate(100));
}

TEST_CASE("injector corrupts exactly the planned window") {
  const Scenario sc = builtin_scenario("A1");
  for (auto [model, start, duration] : {std::tuple{FaultModel::OneFixed, 40ul, 1ul},
                                        std::tuple{FaultModel::MFixed, 100ul, 37ul},
                                        std::tuple{FaultModel::MRandom, 7ul, 10ul}}) {
    FaultPlan p;
    p.model = model;
    p.start = start;
    p.duration = duration;
    p.types = {parse_fault_type("control.throttle:max")};
    p.seed = 99;
    Injector inj(p);
    RunOptions o;
    o.seed = 2;
    o.hook = &inj;
    (void)simulate(sc, o);
    REQUIRE(inj.log().size() == duration);
    for (std::size_t i = 0; i < duration; ++i) {
      CHECK(inj.log()[i].scene == start + i);
      CHECK(inj.log()[i].var == VarId::throttle);
      if (model != FaultModel::MRandom) CHECK(inj.log()[i].new_value == 1.0);
    }
  }
}

TEST_CASE("non-finite corruptions do not break the simulation") {
  const Scenario sc = builtin_scenario("A5");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (VarId v : injectable_variables()) {
    FaultPlan p;
    p.model = FaultModel::MFixed;
    p.start = 700;
    p.duration = 20;
    FaultType f;
    f.var = v;
    f.rule = Rule::set_value;
    f.value = nan;
    p.types = {f};
    Injector inj(p);
    RunOptions o;
    o.hook = &inj;
    o.keep_frames = false;
    const RunResult r = simulate(sc, o);
    CHECK(r.scenes_run > 700);
    CHECK_FALSE(std::isnan(r.metrics.min_cipo));
    CHECK_FALSE(std::isnan(r.metrics.max_lk));
  }
}
