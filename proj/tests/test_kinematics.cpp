// SPDX-License-Identifier: Apache-2.0
//
// Stopping maneuver against closed-form kinematics.

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "bfi/kinematics.hpp"

using namespace bfi;

namespace {

// Constant deceleration on a circle of radius L / tan(phi): arc length
// v0^2 / (2a), end point on the chord of that arc.
struct ArcOracle {
  double along;
  double left;
};

ArcOracle arc_end(double v0, double a, double phi, double wheelbase) {
  const double s = v0 * v0 / (2.0 * a);
  if (phi == 0.0) return {s, 0.0};
  const double r = wheelbase / std::tan(phi);
  return {r * std::sin(s / r), r * (1.0 - std::cos(s / r))};
}

}  // namespace

TEST_CASE("straight stop matches v0^2/(2a) over a speed grid") {
  KinematicParams p;
  for (int i = 0; i < 40; ++i) {
    const double v0 = 0.5 + 1.0 * i;  // 0.5 .. 39.5 m/s
    VehicleState s;
    s.v = v0;
    s.theta = 0.3;
    const StopResult r = emergency_stop(s, p);
    const double oracle = v0 * v0 / (2.0 * p.a_max);
    CHECK(std::abs(r.d_stop_long - oracle) / oracle < 1e-6);
    CHECK(std::abs(r.d_stop_lat) < 1e-9 * oracle);
    CHECK(r.t_stop == v0 / p.a_max);
  }
}

TEST_CASE("turning stop ends on the arc") {
  KinematicParams p;
  for (double phi : {-0.4, -0.1, 0.05, 0.2, 0.6}) {
    for (double v0 : {3.0, 12.0, 25.0}) {
      VehicleState s;
      s.x = 10.0;
      s.y = -4.0;
      s.theta = 1.1;
      s.v = v0;
      s.phi = phi;
      const StopResult r = emergency_stop(s, p);
      const ArcOracle o = arc_end(v0, p.a_max, phi, p.wheelbase);
      CHECK(std::abs(r.d_stop_long - o.along) < 1e-4);
      CHECK(std::abs(r.d_stop_lat - o.left) < 1e-4);
      CHECK(r.t_stop == v0 / p.a_max);
    }
  }
}

TEST_CASE("stop path is monotone in time and ends at t_stop") {
  KinematicParams p;
  VehicleState s;
  s.v = 17.0;
  s.phi = 0.1;
  const StopResult r = emergency_stop(s, p);
  REQUIRE(r.path.size() > 2);
  for (std::size_t i = 1; i < r.path.size(); ++i) CHECK(r.path[i].t > r.path[i - 1].t);
  CHECK(r.path.back().t == doctest::Approx(r.t_stop).epsilon(1e-15));
}

TEST_CASE("halving the step does not move the stop point") {
  KinematicParams p;
  VehicleState s;
  s.v = 30.0;
  s.phi = 0.3;
  const StopResult a = emergency_stop_with_step(s, p, p.dt / 10);
  const StopResult b = emergency_stop_with_step(s, p, p.dt / 20);
  CHECK(std::abs(a.d_stop_long - b.d_stop_long) < 1e-6);
  CHECK(std::abs(a.d_stop_lat - b.d_stop_lat) < 1e-6);
}

TEST_CASE("standing vehicle stops in place") {
  const StopResult r = emergency_stop(VehicleState{}, KinematicParams{});
  CHECK(r.t_stop == 0.0);
  CHECK(r.d_stop_long == 0.0);
  CHECK(r.d_stop_lat == 0.0);
}

TEST_CASE("invalid inputs are rejected") {
  KinematicParams p;
  VehicleState s;
  s.v = -1.0;
  CHECK_THROWS_AS((void)emergency_stop(s, p), KinematicsDomainError);
  s.v = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)emergency_stop(s, p), KinematicsDomainError);
  s.v = 5.0;
  p.a_max = 0.0;
  CHECK_THROWS_AS((void)emergency_stop(s, p), KinematicsDomainError);
  CHECK_THROWS_AS((void)emergency_stop_with_step(s, KinematicParams{}, 0.0), KinematicsDomainError);
}

TEST_CASE("rk4 step never reverses and respects the steering limit") {
  KinematicParams p;
  for (int i = 0; i < 200; ++i) {
    VehicleState s;
    s.v = 0.1 * i;
    s.phi = -0.7 + 0.007 * i;
    s.theta = 3.1;
    const VehicleState n = rk4_step(s, -6.0, 2.0, p, p.dt);
    CHECK(n.v >= 0.0);
    CHECK(std::abs(n.phi) <= p.phi_max);
    CHECK(n.theta > -std::numbers::pi);
    CHECK(n.theta <= std::numbers::pi);
  }
}

TEST_CASE("rk4 straight-line cruise is exact") {
  KinematicParams p;
  VehicleState s;
  s.v = 10.0;
  s.theta = 0.0;
  const VehicleState n = rk4_step(s, 0.0, 0.0, p, 0.5);
  CHECK(n.x == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(n.y == 0.0);
  CHECK(n.v == 10.0);
}

TEST_CASE("normalize_angle maps into (-pi, pi]") {
  CHECK(normalize_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(normalize_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(normalize_angle(3 * std::numbers::pi / 2) == doctest::Approx(-std::numbers::pi / 2));
  for (int k = -50; k <= 50; ++k) {
    const double a = normalize_angle(0.37 * k);
    CHECK(a > -std::numbers::pi);
    CHECK(a <= std::numbers::pi);
    CHECK(std::abs(std::remainder(a - 0.37 * k, 2 * std::numbers::pi)) < 1e-12);
  }
}
