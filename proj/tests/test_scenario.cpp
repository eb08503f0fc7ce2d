// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "bfi/csv.hpp"
#include "bfi/scenario.hpp"

using namespace bfi;

TEST_CASE("six built-in scenarios validate") {
  const auto ids = builtin_scenario_ids();
  CHECK(ids == std::vector<std::string>{"A1", "A2", "A3", "A4", "A5", "A6"});
  for (const auto& id : ids) {
    const Scenario s = builtin_scenario(id);
    CHECK(s.id == id);
    CHECK_NOTHROW(s.validate());
    CHECK(s.lane().length() > 0);
  }
  CHECK_THROWS_AS((void)resolve_scenario("A9"), ScenarioError);
}

TEST_CASE("scenario JSON round trips") {
  for (const auto& id : builtin_scenario_ids()) {
    const std::string text = scenario_to_json(builtin_scenario(id));
    const Scenario back = parse_scenario(text);
    CHECK(scenario_to_json(back) == text);
  }
}

TEST_CASE("malformed scenario files are config errors") {
  CHECK_THROWS_AS((void)parse_scenario("{"), ScenarioError);
  CHECK_THROWS_AS((void)parse_scenario(R"({"id":"x"})"), ScenarioError);
  std::string text = scenario_to_json(builtin_scenario("A1"));
  const auto at = text.find("\"scenes\"");
  REQUIRE(at != std::string::npos);
  text.insert(at, "\"bogus_field\":1,");
  CHECK_THROWS_AS((void)parse_scenario(text), ScenarioError);
}

TEST_CASE("simulation is a pure function of scenario and seed") {
  const Scenario sc = builtin_scenario("A2");
  RunOptions o;
  o.seed = 4;
  const RunResult a = simulate(sc, o);
  const RunResult b = simulate(sc, o);
  CHECK(a.digest == b.digest);
  CHECK(a.scenes_run == b.scenes_run);
  o.seed = 5;
  CHECK(simulate(sc, o).digest != a.digest);
  o.keep_frames = false;
  o.seed = 4;
  CHECK(simulate(sc, o).digest == a.digest);
}

TEST_CASE("traces round trip through CSV") {
  const Scenario sc = builtin_scenario("A6");
  RunOptions o;
  o.seed = 3;
  o.stop_after = 200;
  o.assess = true;
  RunResult r = simulate(sc, o);
  // corrupted variables can hold anything a bit flip produces
  r.frames[10].vars[index(VarId::brake)] = std::numeric_limits<double>::denorm_min();
  r.frames[11].vars[index(VarId::obstacle_pos)] = -std::numeric_limits<double>::infinity();
  r.frames[12].vars[index(VarId::lane_width)] = 1.5e-310;
  r.frames[13].vars[index(VarId::vehicle_a)] = -std::numeric_limits<double>::max();
  const auto path = std::filesystem::temp_directory_path() / "bfi_trace_roundtrip.csv";
  write_trace(path, r, 0xabcdefULL);
  const TraceFile t = read_trace(path);
  std::filesystem::remove(path);
  CHECK(t.scenario == "A6");
  CHECK(t.seed == 3);
  CHECK(t.plan_digest == 0xabcdefULL);
  REQUIRE(t.frames.size() == r.frames.size());
  for (std::size_t i = 0; i < r.frames.size(); ++i) {
    CHECK(t.frames[i].scene == r.frames[i].scene);
    CHECK(t.frames[i].vars == r.frames[i].vars);
    CHECK(t.frames[i].ego.x == r.frames[i].ego.x);
    CHECK(t.frames[i].hazard.cipo == r.frames[i].hazard.cipo);
    CHECK(t.frames[i].hazard.lk == r.frames[i].hazard.lk);
  }
}

TEST_CASE("golden seed 1 is hazard free everywhere") {
  for (const auto& id : builtin_scenario_ids()) {
    RunOptions o;
    o.keep_frames = false;
    const RunResult r = simulate(builtin_scenario(id), o);
    CHECK_MESSAGE(!r.metrics.hazard, id);
    CHECK(r.scenes_run == builtin_scenario(id).scenes);
  }
}

TEST_CASE("number text round trips for arbitrary bit patterns") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 20000; ++i) {
    const double x = std::bit_cast<double>(rng());
    const double y = parse_number(format_number(x));
    if (std::isnan(x))
      CHECK(std::isnan(y));
    else
      CHECK(std::bit_cast<std::uint64_t>(y) == std::bit_cast<std::uint64_t>(x));
  }
  CHECK_THROWS_AS((void)parse_number("1.5x"), std::invalid_argument);
  CHECK_THROWS_AS((void)parse_number(""), std::invalid_argument);
}
