// SPDX-License-Identifier: Apache-2.0
//
// Built-in scenarios. A1-A3 are freeway scenes at 27-33.5 m/s, A4-A6 urban
// scenes at about 10 m/s.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bfi/scenario.hpp"

namespace bfi {

namespace {

struct SpeedKnot {
  double t;
  double v;
};

double speed_at(const std::vector<SpeedKnot>& knots, double t) {
  if (t <= knots.front().t) return knots.front().v;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (t <= knots[i].t) {
      const double u = (t - knots[i - 1].t) / (knots[i].t - knots[i - 1].t);
      return knots[i - 1].v + u * (knots[i].v - knots[i - 1].v);
    }
  }
  return knots.back().v;
}

/// Actor driving along the lane at a fixed lateral offset with a speed profile.
/// `lateral_knots` (time, offset) lets it change lanes.
Actor lane_actor(int id, ObjectKind kind, double radius, const Lane& lane, double s0,
                 const std::vector<SpeedKnot>& speed, const std::vector<SpeedKnot>& lateral,
                 double duration) {
  Actor a;
  a.id = id;
  a.kind = kind;
  a.radius = radius;
  const double h = 0.05;
  const int sample_every = 10;  // waypoint each 0.5 s
  double s = s0;
  for (int i = 0;; ++i) {
    const double t = i * h;
    if (i % sample_every == 0) {
      const Vec2 c = lane.point_at(s);
      const double hd = lane.heading_at(s);
      const double off = speed_at(lateral, t);
      a.waypoints.push_back({t, c.x - off * std::sin(hd), c.y + off * std::cos(hd)});
    }
    if (t > duration) break;
    s += 0.5 * (speed_at(speed, t) + speed_at(speed, t + h)) * h;
  }
  return a;
}

Scenario base(std::string id, std::string setting, std::size_t scenes, double cruise) {
  Scenario s;
  s.id = std::move(id);
  s.setting = std::move(setting);
  s.scenes = scenes;
  s.cruise_speed = cruise;
  s.ego = {0.0, 0.0, cruise, 0.0, 0.0};
  return s;
}

double duration(const Scenario& s) { return static_cast<double>(s.scenes) * s.dt + 1.0; }

Scenario a1() {
  Scenario s = base("A1", "freeway", 500, 30.0);
  s.lane_segments = {{3000, 0, 0}};
  const Lane lane = s.lane();
  s.actors.push_back(lane_actor(1, ObjectKind::vehicle, 1.0, lane, 150.0,
                                {{0, 27}, {20, 27}, {25, 22}, {40, 22}, {45, 28}},
                                {{0, 0}}, duration(s)));
  return s;
}

Scenario a2() {
  // a vehicle in the left lane cuts in front of the ego
  Scenario s = base("A2", "freeway", 300, 33.5);
  s.lane_segments = {{2000, 0, 0}};
  const Lane lane = s.lane();
  s.actors.push_back(lane_actor(1, ObjectKind::vehicle, 1.0, lane, 70.0, {{0, 30}},
                                {{0, 3.6}, {8, 3.6}, {11, 0}}, duration(s)));
  return s;
}

Scenario a3() {
  Scenario s = base("A3", "freeway", 600, 30.0);
  s.lane_segments = {{3500, 0, 0}};
  const Lane lane = s.lane();
  std::vector<SpeedKnot> wave;
  for (int i = 0; i <= 90; ++i) {
    wave.push_back({double(i), 27.0 + 2.0 * std::sin(2 * std::numbers::pi * i / 20.0)});
  }
  for (int j = 0; j < 3; ++j) {
    s.actors.push_back(lane_actor(j + 1, ObjectKind::vehicle, 1.0, lane, 140.0 + 40.0 * j, wave,
                                  {{0, 0}}, duration(s)));
  }
  return s;
}

Scenario a4() {
  // two-lane road, traffic only in the opposite lane
  Scenario s = base("A4", "urban", 2400, 10.0);
  s.lane_segments = {{3400, 0, 0}};
  const Lane lane = s.lane();
  const double T = duration(s);
  for (int j = 0; j < 64; ++j) {
    const double s0 = 60.0 + 100.0 * j;
    Actor a;
    a.id = j + 1;
    a.kind = ObjectKind::vehicle;
    a.radius = 1.0;
    const Vec2 p0 = lane.point_at(s0);
    a.waypoints = {{0.0, p0.x, 3.6}, {T, p0.x - 10.0 * T, 3.6}};
    s.actors.push_back(a);
  }
  return s;
}

// Pedestrian at lane station `station`, `from` metres left of the centre line
// (negative: right). Starts walking when the ego comes within `trigger`
// metres, stands on the centre line for `pause` seconds, then walks on to `to`.
Actor crossing(int id, const Lane& lane, double station, double trigger, double speed, double from,
               double to, double pause) {
  Actor a;
  a.id = id;
  a.kind = ObjectKind::pedestrian;
  a.radius = 0.3;
  a.trigger_distance = trigger;
  const Vec2 c = lane.point_at(station);
  const double h = lane.heading_at(station);
  auto at = [&](double t, double off) {
    return Waypoint{t, c.x - off * std::sin(h), c.y + off * std::cos(h)};
  };
  const double t1 = std::abs(from) / speed;
  const double t2 = t1 + pause;
  a.waypoints = {at(0.0, from), at(t1, 0.0), at(t2, 0.0), at(t2 + std::abs(to) / speed, to)};
  return a;
}

Scenario a5() {
  // pedestrians step into the ego lane twice
  Scenario s = base("A5", "urban", 2400, 10.0);
  s.lane_segments = {{3500, 0, 0}};
  const Lane lane = s.lane();
  s.actors.push_back(crossing(1, lane, 1000, 20, 2.0, -3.0, 6.0, 3.0));
  s.actors.push_back(crossing(2, lane, 2000, 20, 2.0, 3.0, -6.0, 3.0));
  return s;
}

Scenario a6() {
  // S-bend behind a lead vehicle that brakes in the turns, then a pedestrian
  // crossing on the long straight
  Scenario s = base("A6", "urban", 2400, 10.0);
  const double q = std::numbers::pi / 2;
  s.lane_segments = {{100, 0, 0}, {0, 40, q}, {100, 0, 0}, {0, 40, -q}, {3000, 0, 0}};
  const Lane lane = s.lane();
  s.actors.push_back(lane_actor(1, ObjectKind::vehicle, 1.0, lane, 45.0,
                                {{0, 8}, {12, 8}, {14, 4}, {20, 4}, {23, 8}, {40, 8}, {42, 3},
                                 {48, 3}, {51, 11}},
                                {{0, 0}}, duration(s)));
  s.actors.push_back(crossing(2, lane, 1500, 20, 2.0, -3.1, 6.0, 3.0));
  return s;
}

}  // namespace

std::vector<std::string> builtin_scenario_ids() { return {"A1", "A2", "A3", "A4", "A5", "A6"}; }

Scenario builtin_scenario(const std::string& id) {
  Scenario s;
  if (id == "A1") s = a1();
  else if (id == "A2") s = a2();
  else if (id == "A3") s = a3();
  else if (id == "A4") s = a4();
  else if (id == "A5") s = a5();
  else if (id == "A6") s = a6();
  else throw ScenarioError("unknown scenario " + id);
  s.validate();
  return s;
}

}  // namespace bfi
