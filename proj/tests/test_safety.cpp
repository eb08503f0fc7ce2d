// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "bfi/safety.hpp"

using namespace bfi;

namespace {

Lane straight_lane() { return Lane({{-100.0, 0.0}, {1000.0, 0.0}}, 1.8); }

WorldObject car(double x, double y, double r = 1.0) {
  WorldObject o;
  o.kind = ObjectKind::vehicle;
  o.position = {x, y};
  o.radius = r;
  return o;
}

}  // namespace

TEST_CASE("in-path gap is the surface distance of the nearest corridor object") {
  SafetyParams p;
  VehicleState ego;
  std::vector<WorldObject> w{car(50, 0), car(30, 0.5), car(20, 5.0), car(-10, 0)};
  const double expected = std::hypot(30.0, 0.5) - 1.0;
  CHECK(closest_in_path_gap(ego, w, p) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("empty corridor reports the horizon") {
  SafetyParams p;
  VehicleState ego;
  std::vector<WorldObject> w{car(20, 5.0), car(-30, 0)};
  CHECK(closest_in_path_gap(ego, w, p) == p.horizon);
}

TEST_CASE("corridor follows the heading") {
  SafetyParams p;
  VehicleState ego;
  ego.theta = std::acos(-1.0) / 2;  // facing +y
  std::vector<WorldObject> w{car(0, 40), car(40, 0)};
  CHECK(closest_in_path_gap(ego, w, p) == doctest::Approx(39.0));
}

TEST_CASE("lateral envelope shrinks with lane offset and side objects") {
  SafetyParams p;
  const Lane lane = straight_lane();
  VehicleState ego;
  ego.y = 0.3;
  SafetyEnvelope e = compute_d_safe(ego, {}, lane, p);
  CHECK(e.lateral == doctest::Approx(1.8 - 0.9 - 0.3));
  std::vector<WorldObject> w{car(0.0, 2.0, 0.5)};
  e = compute_d_safe(ego, w, lane, p);
  CHECK(e.lateral == doctest::Approx(std::min(0.6, 1.7 - 0.9 - 0.5)));
}

TEST_CASE("assessment is safe only when both margins are positive") {
  const SafetyEnvelope env{10.0, 0.5};
  CHECK(make_assessment(env, 9.0, 0.1, 1.0).safe);
  CHECK_FALSE(make_assessment(env, 10.0, 0.1, 1.0).safe);
  CHECK_FALSE(make_assessment(env, 1.0, 0.5, 1.0).safe);
  const SafetyAssessment a = make_assessment(env, 4.0, 0.2, 1.0);
  CHECK(a.delta_long == doctest::Approx(6.0));
  CHECK(a.delta_lat == doctest::Approx(0.3));
}

TEST_CASE("stop displacement on a straight lane matches the closed form") {
  const Lane lane = straight_lane();
  KinematicParams kin;
  VehicleState ego;
  ego.v = 20.0;
  const StopDisplacement d = stop_displacement(ego, lane, kin);
  CHECK(d.longitudinal == doctest::Approx(40.0).epsilon(1e-9));
  CHECK(d.lateral == doctest::Approx(0.0));
}

TEST_CASE("critical pairs need a safe golden frame") {
  const SafetyAssessment safe = make_assessment({10, 1}, 1, 0.1, 1);
  const SafetyAssessment unsafe = make_assessment({1, 1}, 5, 0.1, 1);
  CHECK(is_critical(safe, -0.1, 0.5));
  CHECK(is_critical(safe, 0.5, 0.0));
  CHECK_FALSE(is_critical(safe, 0.5, 0.5));
  CHECK_FALSE(is_critical(unsafe, -1.0, -1.0));
}

TEST_CASE("run metrics flag the first hazardous frame") {
  std::vector<HazardSample> t{{50, 0.1}, {20, 0.2}, {0.5, 0.3}, {30, 0.9}};
  const RunMetrics m = run_metrics(t);
  CHECK(m.min_cipo == 0.5);
  CHECK(m.max_lk == 0.9);
  CHECK(m.hazard);
  REQUIRE(m.hazard_frame.has_value());
  CHECK(*m.hazard_frame == 2);

  std::vector<HazardSample> ok{{50, 0.1}, {1.0, 0.8}};
  const RunMetrics n = run_metrics(ok);
  CHECK_FALSE(n.hazard);  // both thresholds are strict
  CHECK_FALSE(n.hazard_frame.has_value());
  CHECK_THROWS_AS((void)run_metrics(std::vector<HazardSample>{}), std::invalid_argument);
}

TEST_CASE("lane keeping distance is the absolute offset") {
  const Lane lane = straight_lane();
  for (double y : {-1.2, -0.1, 0.0, 0.4, 2.5}) {
    VehicleState ego;
    ego.x = 37.0;
    ego.y = y;
    CHECK(lane_keeping_distance(ego, lane) == doctest::Approx(std::abs(y)));
  }
}
