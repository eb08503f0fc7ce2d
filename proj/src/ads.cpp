// SPDX-License-Identifier: Apache-2.0

#include "bfi/ads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bfi {

namespace {

double& at(VarFrame& f, VarId id) { return f[index(id)]; }
double at(const VarFrame& f, VarId id) { return f[index(id)]; }

ObjectClass class_of(ObjectKind k) {
  switch (k) {
    case ObjectKind::pedestrian: return ObjectClass::pedestrian;
    case ObjectKind::cyclist: return ObjectClass::cyclist;
    default: return ObjectClass::vehicle;
  }
}

double margin_for(ObjectClass c, const PlannerConfig& cfg) {
  switch (c) {
    case ObjectClass::pedestrian: return cfg.margin_pedestrian;
    case ObjectClass::cyclist: return cfg.margin_cyclist;
    default: return cfg.margin_vehicle;
  }
}

double path_lateral(double range, double lateral, double curvature) {
  return lateral - 0.5 * curvature * range * range;
}

}  // namespace

double effective_steer_limit(double v, const AdsConfig& cfg) {
  const double phi_max = cfg.kinematics.phi_max;
  if (!std::isfinite(v) || v * v < 1e-9) return phi_max;
  return std::min(phi_max, std::atan(cfg.kinematics.wheelbase * cfg.lateral_accel_max / (v * v)));
}

SensorFrame sense(std::span<const WorldObject> world, const VehicleState& ego, const Lane& lane,
                  const InertialMeasurement& imu, const SensorConfig& cfg, std::mt19937_64& rng) {
  SensorFrame f;
  f.imu = imu;
  std::normal_distribution<double> unit(0.0, 1.0);
  const Vec2 heading{std::cos(ego.theta), std::sin(ego.theta)};
  const Vec2 left{-heading.y, heading.x};
  for (const auto& obj : world) {
    if (obj.kind == ObjectKind::lane_boundary) continue;
    const Vec2 r = obj.position - Vec2{ego.x, ego.y};
    const double along = dot(r, heading);
    const double perp = dot(r, left);
    // draw unconditionally so the noise stream does not depend on visibility
    const double n[4] = {unit(rng), unit(rng), unit(rng), unit(rng)};
    const double dist = norm(r) - obj.radius;
    const double bearing = std::atan2(perp, along);
    if (along <= 0 || dist > cfg.range || std::abs(bearing) > cfg.field_of_view) continue;
    const ObjectClass cls = class_of(obj.kind);
    f.camera.push_back({std::max(0.0, dist + cfg.sigma_camera * n[0]),
                        bearing + cfg.sigma_bearing * n[1], cls, cfg.camera_confidence});
    f.lidar.push_back({std::max(0.0, dist + cfg.sigma_lidar * n[2]),
                       bearing + cfg.sigma_bearing * n[3], cls, cfg.lidar_confidence});
  }

  const LaneProjection p = lane.project({ego.x, ego.y});
  f.lane.detected = true;
  f.lane.type = LaneType::dashed;
  f.lane.width = 2 * lane.half_width();
  f.lane.left_distance = lane.half_width() - p.offset;
  f.lane.heading_error = normalize_angle(ego.theta - p.heading);
  f.lane.curvature = lane.curvature_at(p.station + std::max(0.0, ego.v) * cfg.curvature_preview);
  return f;
}

std::optional<std::size_t> primary_observation(std::span<const Observation> obs, double curvature,
                                               const PlannerConfig& cfg) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double d = obs[i].distance;
    const double lat = path_lateral(d * std::cos(obs[i].bearing), d * std::sin(obs[i].bearing),
                                    curvature);
    if (!(std::abs(lat) < cfg.corridor_half_width)) continue;
    if (!best || d < obs[*best].distance) best = i;
  }
  return best;
}

double fuse_ranges(double camera, double sigma_camera, double lidar, double sigma_lidar) {
  const double wc = 1.0 / (sigma_camera * sigma_camera);
  const double wl = 1.0 / (sigma_lidar * sigma_lidar);
  return (wc * camera + wl * lidar) / (wc + wl);
}

std::vector<FusedDetection> fuse(const SensorFrame& frame, const AdsConfig& cfg) {
  const auto& sc = cfg.sensors;
  auto xy = [](const Observation& o) {
    return Vec2{o.distance * std::cos(o.bearing), o.distance * std::sin(o.bearing)};
  };
  std::vector<bool> camera_used(frame.camera.size(), false);
  std::vector<FusedDetection> out;
  for (const auto& l : frame.lidar) {
    if (l.cls == ObjectClass::disappear) continue;
    std::optional<std::size_t> match;
    double best = cfg.association_gate;
    for (std::size_t j = 0; j < frame.camera.size(); ++j) {
      const auto& c = frame.camera[j];
      if (camera_used[j] || c.cls == ObjectClass::disappear) continue;
      const double d = norm(xy(c) - xy(l));
      if (d < best) {
        best = d;
        match = j;
      }
    }
    if (!match) {
      out.push_back({l.distance, l.bearing, l.cls});
      continue;
    }
    camera_used[*match] = true;
    const auto& c = frame.camera[*match];
    out.push_back({fuse_ranges(c.distance, sc.sigma_camera, l.distance, sc.sigma_lidar),
                   0.5 * (c.bearing + l.bearing),
                   c.confidence > l.confidence ? c.cls : l.cls});
  }
  for (std::size_t j = 0; j < frame.camera.size(); ++j) {
    const auto& c = frame.camera[j];
    if (camera_used[j] || c.cls == ObjectClass::disappear) continue;
    out.push_back({c.distance, c.bearing, c.cls});
  }
  return out;
}

void update_tracks(AdsState& state, std::span<const FusedDetection> detections, double ego_v,
                   const AdsConfig& cfg) {
  const double dt = cfg.kinematics.dt;
  for (auto& t : state.tracks) {
    t.range += t.range_rate * dt;
    t.lateral += t.lateral_rate * dt;
  }
  std::vector<std::size_t> order(detections.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].distance < detections[b].distance;
  });

  std::vector<bool> updated(state.tracks.size(), false);
  std::vector<Track> born;
  for (std::size_t i : order) {
    const auto& d = detections[i];
    const double range = d.distance * std::cos(d.bearing);
    const double lateral = d.distance * std::sin(d.bearing);
    std::optional<std::size_t> match;
    double best = cfg.association_gate;
    for (std::size_t j = 0; j < state.tracks.size(); ++j) {
      if (updated[j]) continue;
      const auto& t = state.tracks[j];
      const double dist = std::hypot(t.range - range, t.lateral - lateral);
      if (dist < best) {
        best = dist;
        match = j;
      }
    }
    if (match) {
      auto& t = state.tracks[*match];
      const double rr = range - t.range;
      const double rl = lateral - t.lateral;
      t.range += cfg.track_alpha * rr;
      t.lateral += cfg.track_alpha * rl;
      t.range_rate += cfg.track_beta / dt * rr;
      t.lateral_rate += cfg.track_beta / dt * rl;
      t.cls = d.cls;
      t.misses = 0;
      updated[*match] = true;
    } else if (std::isfinite(range) && std::isfinite(lateral)) {
      Track t;
      t.id = state.next_track_id++;
      t.range = range;
      t.lateral = lateral;
      t.range_rate = -ego_v;  // unknown motion: assume the object is static
      t.cls = d.cls;
      born.push_back(t);
    }
  }
  std::vector<Track> kept;
  for (std::size_t j = 0; j < state.tracks.size(); ++j) {
    auto t = state.tracks[j];
    if (!updated[j] && ++t.misses > cfg.track_coast_frames) continue;
    kept.push_back(t);
  }
  kept.insert(kept.end(), born.begin(), born.end());
  state.tracks = std::move(kept);
}

void update_lane(LaneEstimate& lane, const LaneObservation& obs, const AdsConfig& cfg) {
  if (!obs.detected || obs.type == LaneType::disappear) {
    lane.valid = false;
    lane.detections = 0;
    return;
  }
  ++lane.detections;
  if (!lane.valid && lane.detections >= cfg.lane_reacquire_frames) lane.valid = true;
  lane.type = obs.type;
  lane.width = obs.width;
  lane.offset = obs.width / 2 - obs.left_distance;
  lane.heading_error = obs.heading_error;
  lane.curvature = obs.curvature;
}

const Track* closest_in_path_track(const AdsState& state, const AdsConfig& cfg) {
  const double kappa = state.lane.valid ? state.lane.curvature : 0.0;
  const double c = cfg.planner.corridor_half_width;
  const double tau = cfg.planner.prediction_horizon;
  const Track* best = nullptr;
  for (const auto& t : state.tracks) {
    if (!(t.range > -1.0)) continue;
    const double now = path_lateral(t.range, t.lateral, kappa);
    const double later = now + t.lateral_rate * tau;
    const bool in_path = std::abs(now) < c || std::abs(later) < c || now * later < 0;
    if (!in_path) continue;
    if (!best || t.range < best->range) best = &t;
  }
  return best;
}

double allowed_speed(double gap, const PlannerConfig& cfg) {
  if (std::isnan(gap)) return gap;
  if (gap <= 0) return 0.0;
  // v * latency + v^2 / (2 a) = gap
  const double a = cfg.a_plan;
  const double t = cfg.latency;
  return a * (-t + std::sqrt(t * t + 2 * gap / a));
}

RawActuation plan(const VarFrame& vars, const AdsState& state, const AdsConfig& cfg) {
  const auto& pc = cfg.planner;
  RawActuation u;
  const double v = at(vars, VarId::vehicle_v);

  double v_target = pc.cruise_speed;
  const auto cls = static_cast<ObjectClass>(decode_category(at(vars, VarId::fused_obstacle_class), 4));
  if (cls != ObjectClass::disappear) {
    const double tau = pc.prediction_horizon;
    const double closing = std::min(0.0, at(vars, VarId::obstacle_v) - v);
    const double decel = std::min(0.0, at(vars, VarId::obstacle_a));
    const double gap = at(vars, VarId::obstacle_pos) + closing * tau + 0.5 * decel * tau * tau -
                       pc.d_safe_min - margin_for(cls, pc);
    v_target = std::min(v_target, allowed_speed(gap, pc));
  }
  const double a_des = std::clamp(pc.speed_gain * (v_target - v), -pc.a_brake_max, pc.a_accel_max);
  u.u_throttle = std::max(a_des, 0.0) / pc.a_accel_max;
  u.u_brake = std::max(-a_des, 0.0) / pc.a_brake_max;
  if (std::isnan(a_des)) u.u_throttle = u.u_brake = a_des;

  double kappa = 0.0;
  if (decode_category(at(vars, VarId::lane_type), 3) != 0) {
    const double lookahead = std::max(pc.min_lookahead, pc.lookahead_time * std::abs(v));
    const double err = -at(vars, VarId::lane_offset) - lookahead * std::sin(state.lane.heading_error);
    kappa = state.lane.curvature + 2 * err / (lookahead * lookahead);
  } else {
    // no lane: follow the lead vehicle if there is one, otherwise hold straight
    for (const auto& t : state.tracks) {
      if (t.id == state.cipo_id && t.cls == ObjectClass::vehicle && t.range > 1.0) {
        kappa = 2 * t.lateral / (t.range * t.range);
      }
    }
  }
  const double phi = std::atan(cfg.kinematics.wheelbase * kappa);
  u.u_steer = std::clamp(phi / effective_steer_limit(v, cfg), -1.0, 1.0);
  return u;
}

double sanitize(double value, double lo, double hi, double fallback) {
  if (!std::isfinite(value)) value = fallback;
  return std::clamp(value, lo, hi);
}

int decode_category(double value, int count) {
  if (!std::isfinite(value)) return 0;
  const double r = std::round(value);
  if (r < 0 || r >= count) return 0;
  return static_cast<int>(r);
}

double pid_update(PidChannel& ch, double setpoint, double measured, const PidGains& g, double lo,
                  double hi) {
  const double sp = std::isfinite(setpoint) ? setpoint : 0.0;
  const double meas = std::isfinite(measured) ? std::clamp(measured, lo, hi) : 0.0;
  const double e = sp - meas;
  const double raw = g.kp * e + g.ki * (ch.integral + e) + g.kd * (e - ch.prev_error);
  const double step = std::clamp(raw, -g.slew, g.slew);
  if (std::abs(raw) <= g.slew) {
    ch.integral = std::clamp(ch.integral + e, -g.integral_limit, g.integral_limit);
  }
  ch.prev_error = e;
  ch.output = std::clamp(meas + step, lo, hi);
  return ch.output;
}

Ads::Ads(AdsConfig cfg) : cfg_(std::move(cfg)) { cfg_.kinematics.validate(); }

AdsFrame Ads::step(std::size_t scene, const SensorFrame& sensors, StageHook& hook) {
  AdsFrame out;
  out.scene = scene;
  VarFrame& v = out.vars;
  const auto& pc = cfg_.planner;
  SensorFrame s = sensors;

  // sensors and inertial measurements
  const double kappa0 = state_.lane.valid ? state_.lane.curvature : 0.0;
  const auto cam = primary_observation(s.camera, kappa0, pc);
  const auto lid = primary_observation(s.lidar, kappa0, pc);
  at(v, VarId::camera_object_distance) = cam ? s.camera[*cam].distance : pc.horizon;
  at(v, VarId::camera_object_class) = cam ? static_cast<double>(s.camera[*cam].cls) : 0.0;
  at(v, VarId::lidar_object_distance) = lid ? s.lidar[*lid].distance : pc.horizon;
  at(v, VarId::lidar_object_class) = lid ? static_cast<double>(s.lidar[*lid].cls) : 0.0;
  at(v, VarId::ego_speed) = s.imu.v;
  at(v, VarId::ego_heading) = s.imu.theta;
  at(v, VarId::ego_steer_angle) = s.imu.steer;
  at(v, VarId::vehicle_pos) = s.imu.pos;
  at(v, VarId::vehicle_v) = s.imu.v;
  at(v, VarId::vehicle_a) = s.imu.a;
  hook.on_stage(Stage::sense, scene, v);
  if (cam) {
    s.camera[*cam].distance = at(v, VarId::camera_object_distance);
    s.camera[*cam].cls =
        static_cast<ObjectClass>(decode_category(at(v, VarId::camera_object_class), 4));
  }
  if (lid) {
    s.lidar[*lid].distance = at(v, VarId::lidar_object_distance);
    s.lidar[*lid].cls =
        static_cast<ObjectClass>(decode_category(at(v, VarId::lidar_object_class), 4));
  }
  const double ego_v = at(v, VarId::vehicle_v);

  // perception: fusion, tracking, lane estimation
  const auto detections = fuse(s, cfg_);
  update_tracks(state_, detections, std::isfinite(ego_v) ? ego_v : 0.0, cfg_);
  update_lane(state_.lane, s.lane, cfg_);
  const Track* cipo = closest_in_path_track(state_, cfg_);
  state_.cipo_id = cipo ? cipo->id : 0;
  at(v, VarId::fused_obstacle_distance) = cipo ? cipo->range : pc.horizon;
  at(v, VarId::fused_obstacle_class) = cipo ? static_cast<double>(cipo->cls) : 0.0;
  at(v, VarId::lane_type) = state_.lane.valid ? static_cast<double>(state_.lane.type) : 0.0;
  at(v, VarId::lane_width) = state_.lane.width;
  at(v, VarId::lane_offset) = state_.lane.offset;
  const double width0 = at(v, VarId::lane_width);
  const double offset0 = at(v, VarId::lane_offset);
  hook.on_stage(Stage::perception, scene, v);
  auto find_cipo = [&]() -> Track* {
    for (auto& t : state_.tracks) {
      if (t.id == state_.cipo_id) return &t;
    }
    return nullptr;
  };
  if (Track* t = find_cipo()) {
    const int c = decode_category(at(v, VarId::fused_obstacle_class), 4);
    if (c == 0) {
      std::erase_if(state_.tracks, [&](const Track& x) { return x.id == state_.cipo_id; });
      state_.cipo_id = 0;
    } else {
      t->cls = static_cast<ObjectClass>(c);
      t->range = at(v, VarId::fused_obstacle_distance);
    }
  }
  {
    const int lt = decode_category(at(v, VarId::lane_type), 3);
    if (lt == 0 && state_.lane.valid) {
      state_.lane.valid = false;
      state_.lane.detections = 0;
    } else if (lt != 0) {
      state_.lane.valid = true;
      state_.lane.type = static_cast<LaneType>(lt);
    }
    // the offset is derived from the width estimate
    const double w = at(v, VarId::lane_width);
    if (w != width0 && at(v, VarId::lane_offset) == offset0) {
      at(v, VarId::lane_offset) = offset0 + (w - width0) / 2;
    }
  }

  // prediction
  const Track* obstacle = find_cipo();
  if (obstacle) {
    at(v, VarId::obstacle_pos) = at(v, VarId::fused_obstacle_distance);
    const double ov = ego_v + obstacle->range_rate;
    double oa = 0.0;
    if (obstacle->id == state_.prev_cipo_id) {
      const double raw = (ov - state_.prev_obstacle_v) / cfg_.kinematics.dt;
      oa = (1 - cfg_.accel_filter) * state_.prev_obstacle_a + cfg_.accel_filter * raw;
    }
    at(v, VarId::obstacle_v) = ov;
    at(v, VarId::obstacle_a) = oa;
  } else {
    at(v, VarId::obstacle_pos) = pc.horizon;
    at(v, VarId::obstacle_v) = ego_v;
    at(v, VarId::obstacle_a) = 0.0;
  }
  hook.on_stage(Stage::prediction, scene, v);
  if (Track* t = find_cipo()) {
    t->range_rate = at(v, VarId::obstacle_v) - ego_v;
    state_.prev_obstacle_v = at(v, VarId::obstacle_v);
    state_.prev_obstacle_a = at(v, VarId::obstacle_a);
  } else {
    state_.prev_obstacle_v = 0.0;
    state_.prev_obstacle_a = 0.0;
  }
  state_.prev_cipo_id = state_.cipo_id;

  // planning
  const RawActuation u = plan(v, state_, cfg_);
  at(v, VarId::u_throttle) = u.u_throttle;
  at(v, VarId::u_brake) = u.u_brake;
  at(v, VarId::u_steer) = u.u_steer;
  hook.on_stage(Stage::planning, scene, v);

  // control
  at(v, VarId::pid_measured_value) = longitudinal_.output;
  hook.on_stage(Stage::control_in, scene, v);
  const double setpoint = sanitize(at(v, VarId::u_throttle), 0, 1) - sanitize(at(v, VarId::u_brake), 0, 1);
  at(v, VarId::pid_output) = pid_update(longitudinal_, setpoint, at(v, VarId::pid_measured_value),
                                        cfg_.longitudinal_pid, -1, 1);
  const double steer = pid_update(steering_, sanitize(at(v, VarId::u_steer), -1, 1),
                                  steering_.output, cfg_.steer_pid, -1, 1);
  hook.on_stage(Stage::control_pid, scene, v);
  longitudinal_.output = sanitize(at(v, VarId::pid_output), -1, 1);

  // actuation
  at(v, VarId::throttle) = std::max(longitudinal_.output, 0.0);
  at(v, VarId::brake) = std::max(-longitudinal_.output, 0.0);
  at(v, VarId::steer) = steer;
  hook.on_stage(Stage::actuation, scene, v);
  out.a.throttle = sanitize(at(v, VarId::throttle), 0, 1);
  out.a.brake = sanitize(at(v, VarId::brake), 0, 1);
  out.a.steer = sanitize(at(v, VarId::steer), -1, 1);
  return out;
}

}  // namespace bfi
