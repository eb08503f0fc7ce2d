// SPDX-License-Identifier: Apache-2.0

#include "bfi/safety.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bfi {

namespace {
constexpr double kEgoLength = 4.5;  // body extends this far behind the reference point
}

std::string_view to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::vehicle: return "vehicle";
    case ObjectKind::pedestrian: return "pedestrian";
    case ObjectKind::cyclist: return "cyclist";
    case ObjectKind::lane_boundary: return "lane_boundary";
  }
  return "vehicle";
}

ObjectKind object_kind_from_string(std::string_view s) {
  if (s == "vehicle") return ObjectKind::vehicle;
  if (s == "pedestrian") return ObjectKind::pedestrian;
  if (s == "cyclist") return ObjectKind::cyclist;
  if (s == "lane_boundary") return ObjectKind::lane_boundary;
  throw std::invalid_argument("unknown object kind: " + std::string(s));
}

double closest_in_path_gap(const VehicleState& ego, std::span<const WorldObject> world,
                           const SafetyParams& params) {
  const Vec2 heading{std::cos(ego.theta), std::sin(ego.theta)};
  const Vec2 left{-heading.y, heading.x};
  const double half = params.vehicle_width / 2;
  double gap = params.horizon;
  for (const auto& obj : world) {
    if (obj.kind == ObjectKind::lane_boundary) continue;
    const Vec2 r = obj.position - Vec2{ego.x, ego.y};
    const double along = dot(r, heading);
    const double perp = dot(r, left);
    if (along + obj.radius <= 0 || std::abs(perp) >= half + obj.radius) continue;
    gap = std::min(gap, norm(r) - obj.radius);
  }
  return gap;
}

SafetyEnvelope compute_d_safe(const VehicleState& ego, std::span<const WorldObject> world,
                              const Lane& lane, const SafetyParams& params) {
  SafetyEnvelope env;
  env.longitudinal = closest_in_path_gap(ego, world, params);

  const double half = params.vehicle_width / 2;
  const LaneProjection proj = lane.project({ego.x, ego.y});
  env.lateral = lane.half_width() - half - std::abs(proj.offset);

  const Vec2 heading{std::cos(ego.theta), std::sin(ego.theta)};
  const Vec2 left{-heading.y, heading.x};
  for (const auto& obj : world) {
    if (obj.kind == ObjectKind::lane_boundary) continue;
    const Vec2 r = obj.position - Vec2{ego.x, ego.y};
    const double along = dot(r, heading);
    const double perp = dot(r, left);
    if (along > obj.radius || along < -kEgoLength - obj.radius) continue;
    if (std::abs(perp) < half + obj.radius) continue;  // in the corridor, longitudinal case
    env.lateral = std::min(env.lateral, std::abs(perp) - half - obj.radius);
  }
  return env;
}

SafetyAssessment make_assessment(const SafetyEnvelope& envelope, double d_stop_long,
                                 double d_stop_lat, double d_safe_min) {
  SafetyAssessment a;
  a.d_safe_long = envelope.longitudinal;
  a.d_safe_lat = envelope.lateral;
  a.d_stop_long = d_stop_long;
  a.d_stop_lat = d_stop_lat;
  a.delta_long = a.d_safe_long - a.d_stop_long;
  a.delta_lat = a.d_safe_lat - a.d_stop_lat;
  a.safe = a.delta_long > 0 && a.delta_lat > 0;
  a.d_safe_min = d_safe_min;
  return a;
}

StopDisplacement stop_displacement(const VehicleState& ego, const Lane& lane,
                                   const KinematicParams& kin) {
  const StopResult stop = emergency_stop(ego, kin, /*record_path=*/false);
  if (stop.t_stop == 0.0) return {};
  const double off0 = lane.project({ego.x, ego.y}).offset;
  const double off1 = lane.project({stop.end_x(), stop.end_y()}).offset;
  return {stop.d_stop_long, std::abs(off1 - off0)};
}

SafetyAssessment assess(const VehicleState& ego, std::span<const WorldObject> world,
                        const Lane& lane, const SafetyParams& params) {
  const SafetyEnvelope env = compute_d_safe(ego, world, lane, params);
  const StopDisplacement d = stop_displacement(ego, lane, params.kinematics);
  return make_assessment(env, d.longitudinal, d.lateral, params.d_safe_min);
}

double lane_keeping_distance(const VehicleState& ego, const Lane& lane) {
  return std::abs(lane.project({ego.x, ego.y}).offset);
}

RunMetrics run_metrics(std::span<const HazardSample> trace, const SafetyParams& params) {
  if (trace.empty()) throw std::invalid_argument("run_metrics: empty trace");
  RunMetrics m;
  m.min_cipo = trace.front().cipo;
  m.max_lk = trace.front().lk;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    m.min_cipo = std::min(m.min_cipo, trace[i].cipo);
    m.max_lk = std::max(m.max_lk, trace[i].lk);
    const bool bad = trace[i].cipo < params.cipo_hazard || trace[i].lk > params.lk_hazard;
    if (bad && !m.hazard_frame) m.hazard_frame = i;
  }
  m.hazard = m.min_cipo < params.cipo_hazard || m.max_lk > params.lk_hazard;
  return m;
}

bool is_critical(const SafetyAssessment& golden, double delta_hat_long, double delta_hat_lat) {
  return golden.safe && !(delta_hat_long > 0 && delta_hat_lat > 0);
}

}  // namespace bfi
