// SPDX-License-Identifier: Apache-2.0
//
// Registry of ADS variables. Every module output that the fault engine can
// corrupt, the trace logger records, and the Bayesian network models is
// declared here with a stable name, its kind and its data-flow inputs (same
// scene and previous scene). The physical vehicle state (speed, heading,
// steering angle) is recorded and modelled but cannot be corrupted; the
// inertial measurements derived from it can.

#ifndef BFI_REGISTRY_HPP
#define BFI_REGISTRY_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bfi {

enum class VarId : std::size_t {
  camera_object_distance,
  camera_object_class,
  lidar_object_distance,
  lidar_object_class,
  ego_speed,
  ego_heading,
  ego_steer_angle,
  vehicle_pos,
  vehicle_v,
  vehicle_a,
  fused_obstacle_distance,
  fused_obstacle_class,
  lane_type,
  lane_width,
  lane_offset,
  obstacle_pos,
  obstacle_v,
  obstacle_a,
  u_throttle,
  u_brake,
  u_steer,
  pid_measured_value,
  pid_output,
  throttle,
  brake,
  steer,
  count_
};

inline constexpr std::size_t kVarCount = static_cast<std::size_t>(VarId::count_);

constexpr std::size_t index(VarId v) { return static_cast<std::size_t>(v); }

/// Pipeline stage after which a variable becomes visible to its consumers.
enum class Stage { sense, perception, prediction, planning, control_in, control_pid, actuation };

enum class VarKind { bounded, unbounded, categorical };

struct VariableSpec {
  VarId id;
  std::string name;  // "<module>.<variable>"
  Stage stage;
  VarKind kind;
  double lo = 0.0;  // bounds for bounded variables
  double hi = 0.0;
  std::vector<std::string> categories;  // categorical only; code = position
  std::vector<VarId> inputs;            // same-scene producers
  std::vector<VarId> prev_inputs;       // previous-scene producers (state, dynamics)
  bool injectable = true;  // false for the physical vehicle state
};

/// Object class codes shared by all object-class variables. Code 0 means the
/// object is absent ("do not care / disappear").
enum class ObjectClass { disappear = 0, pedestrian = 1, vehicle = 2, cyclist = 3 };
enum class LaneType { disappear = 0, dashed = 1, solid = 2 };

using VarFrame = std::array<double, kVarCount>;

const std::vector<VariableSpec>& registry();
const VariableSpec& spec(VarId id);
std::optional<VarId> find_variable(std::string_view name);
/// Module part of a registry name ("perception", "planning", "control").
std::string module_of(VarId id);
std::vector<VarId> variables_at(Stage stage);
std::vector<VarId> injectable_variables();

}  // namespace bfi

#endif  // BFI_REGISTRY_HPP
