// SPDX-License-Identifier: Apache-2.0

#include "bfi/registry.hpp"

#include <stdexcept>

namespace bfi {

namespace {

std::vector<VariableSpec> build_registry() {
  using V = VarId;
  const std::vector<std::string> object_classes{"disappear", "pedestrian", "vehicle", "cyclist"};
  const std::vector<std::string> lane_types{"disappear", "dashed", "solid"};
  auto unbounded = [](V id, std::string name, Stage st, std::vector<V> in, std::vector<V> prev) {
    return VariableSpec{id, std::move(name), st, VarKind::unbounded, 0, 0, {}, std::move(in),
                        std::move(prev)};
  };
  auto bounded = [](V id, std::string name, Stage st, double lo, double hi, std::vector<V> in,
                    std::vector<V> prev) {
    return VariableSpec{id, std::move(name), st, VarKind::bounded, lo, hi, {}, std::move(in),
                        std::move(prev)};
  };
  auto categorical = [](V id, std::string name, Stage st, std::vector<std::string> cats,
                        std::vector<V> in, std::vector<V> prev) {
    return VariableSpec{id, std::move(name), st, VarKind::categorical, 0,
                        static_cast<double>(cats.size() - 1), std::move(cats), std::move(in),
                        std::move(prev)};
  };

  std::vector<VariableSpec> r;
  r.push_back(unbounded(V::camera_object_distance, "perception.camera_object_distance",
                        Stage::sense, {}, {V::camera_object_distance}));
  r.push_back(categorical(V::camera_object_class, "perception.camera_object_class", Stage::sense,
                          object_classes, {}, {V::camera_object_class}));
  r.push_back(unbounded(V::lidar_object_distance, "perception.lidar_object_distance",
                        Stage::sense, {}, {V::lidar_object_distance}));
  r.push_back(categorical(V::lidar_object_class, "perception.lidar_object_class", Stage::sense,
                          object_classes, {}, {V::lidar_object_class}));
  auto physical = [&](V id, std::string name, std::vector<V> prev) {
    auto v = unbounded(id, std::move(name), Stage::sense, {}, std::move(prev));
    v.injectable = false;
    return v;
  };
  r.push_back(physical(V::ego_speed, "vehicle.speed", {V::ego_speed, V::throttle, V::brake}));
  r.push_back(physical(V::ego_heading, "vehicle.heading",
                       {V::ego_heading, V::ego_speed, V::ego_steer_angle}));
  r.push_back(physical(V::ego_steer_angle, "vehicle.steer_angle",
                       {V::ego_steer_angle, V::steer}));
  r.push_back(unbounded(V::vehicle_pos, "planning.vehicle_pos", Stage::sense, {},
                        {V::vehicle_pos, V::ego_speed}));
  r.push_back(unbounded(V::vehicle_v, "planning.vehicle_v", Stage::sense, {V::ego_speed}, {}));
  r.push_back(unbounded(V::vehicle_a, "planning.vehicle_a", Stage::sense, {},
                        {V::throttle, V::brake}));
  r.push_back(unbounded(V::fused_obstacle_distance, "perception.sensor_fused_obstacle_distance",
                        Stage::perception, {V::camera_object_distance, V::lidar_object_distance},
                        {V::fused_obstacle_distance}));
  r.push_back(categorical(V::fused_obstacle_class, "perception.sensor_fused_obstacle_class",
                          Stage::perception, object_classes,
                          {V::camera_object_class, V::lidar_object_class},
                          {V::fused_obstacle_class}));
  r.push_back(categorical(V::lane_type, "perception.lane_type", Stage::perception, lane_types, {},
                          {V::lane_type}));
  r.push_back(bounded(V::lane_width, "perception.lane_width", Stage::perception, 2.0, 5.0, {},
                      {V::lane_width}));
  r.push_back(unbounded(V::lane_offset, "perception.lane_offset", Stage::perception,
                        {V::lane_width}, {V::lane_offset}));
  r.push_back(unbounded(V::obstacle_pos, "planning.obstacle_pos", Stage::prediction,
                        {V::fused_obstacle_distance}, {}));
  r.push_back(unbounded(V::obstacle_v, "planning.obstacle_v", Stage::prediction,
                        {V::fused_obstacle_distance, V::vehicle_v},
                        {V::fused_obstacle_distance, V::obstacle_v}));
  r.push_back(unbounded(V::obstacle_a, "planning.obstacle_a", Stage::prediction,
                        {V::fused_obstacle_distance, V::vehicle_v},
                        {V::obstacle_v, V::obstacle_a}));
  const std::vector<V> longitudinal_inputs{V::obstacle_pos, V::obstacle_v, V::obstacle_a,
                                           V::fused_obstacle_class, V::vehicle_v};
  r.push_back(bounded(V::u_throttle, "planning.u_throttle", Stage::planning, 0, 1,
                      longitudinal_inputs, {}));
  r.push_back(bounded(V::u_brake, "planning.u_brake", Stage::planning, 0, 1, longitudinal_inputs,
                      {}));
  r.push_back(bounded(V::u_steer, "planning.u_steer", Stage::planning, -1, 1,
                      {V::lane_offset, V::lane_type, V::vehicle_v}, {}));
  r.push_back(bounded(V::pid_measured_value, "control.pid_measured_value", Stage::control_in, -1,
                      1, {}, {V::pid_output}));
  r.push_back(bounded(V::pid_output, "control.pid_output", Stage::control_pid, -1, 1,
                      {V::u_throttle, V::u_brake, V::pid_measured_value}, {}));
  r.push_back(bounded(V::throttle, "control.throttle", Stage::actuation, 0, 1, {V::pid_output},
                      {}));
  r.push_back(bounded(V::brake, "control.brake", Stage::actuation, 0, 1, {V::pid_output}, {}));
  r.push_back(bounded(V::steer, "control.steer", Stage::actuation, -1, 1, {V::u_steer},
                      {V::steer}));

  for (std::size_t i = 0; i < r.size(); ++i) {
    if (index(r[i].id) != i) throw std::logic_error("registry order mismatch");
  }
  return r;
}

}  // namespace

const std::vector<VariableSpec>& registry() {
  static const std::vector<VariableSpec> r = build_registry();
  return r;
}

const VariableSpec& spec(VarId id) { return registry().at(index(id)); }

std::optional<VarId> find_variable(std::string_view name) {
  for (const auto& s : registry()) {
    if (s.name == name) return s.id;
  }
  return std::nullopt;
}

std::string module_of(VarId id) {
  const std::string& n = spec(id).name;
  return n.substr(0, n.find('.'));
}

std::vector<VarId> injectable_variables() {
  std::vector<VarId> out;
  for (const auto& s : registry()) {
    if (s.injectable) out.push_back(s.id);
  }
  return out;
}

std::vector<VarId> variables_at(Stage stage) {
  std::vector<VarId> out;
  for (const auto& s : registry()) {
    if (s.stage == stage) out.push_back(s.id);
  }
  return out;
}

}  // namespace bfi
