// SPDX-License-Identifier: Apache-2.0
//
// Safety envelope, safety potential and per-run hazard metrics.

#ifndef BFI_SAFETY_HPP
#define BFI_SAFETY_HPP

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bfi/geometry.hpp"
#include "bfi/kinematics.hpp"

namespace bfi {

enum class ObjectKind { vehicle, pedestrian, cyclist, lane_boundary };

std::string_view to_string(ObjectKind k);
ObjectKind object_kind_from_string(std::string_view s);

struct WorldObject {
  int id = 0;
  ObjectKind kind = ObjectKind::vehicle;
  Vec2 position;
  Vec2 velocity;
  double radius = 1.0;
};

struct SafetyParams {
  KinematicParams kinematics;
  double vehicle_width = 1.8;
  double horizon = 200.0;
  double d_safe_min = 1.0;
  double cipo_hazard = 1.0;  // hazard when min-CIPO drops below this
  double lk_hazard = 0.80;   // hazard when max-LK exceeds this
};

struct SafetyEnvelope {
  double longitudinal = 0.0;
  double lateral = 0.0;
};

struct SafetyAssessment {
  double d_safe_long = 0.0;
  double d_safe_lat = 0.0;
  double d_stop_long = 0.0;
  double d_stop_lat = 0.0;
  double delta_long = 0.0;
  double delta_lat = 0.0;
  bool safe = false;
  double d_safe_min = 1.0;
};

/// Per-frame hazard sample: gap to the closest in-path obstacle and lateral
/// displacement from the lane center.
struct HazardSample {
  double cipo = 0.0;
  double lk = 0.0;
};

struct RunMetrics {
  double min_cipo = 0.0;
  double max_lk = 0.0;
  bool hazard = false;
  std::optional<std::size_t> hazard_frame;
};

/// Gap from the ego reference point to the nearest object whose bounding
/// circle intersects the ego corridor ahead; the horizon when none does.
[[nodiscard]] double closest_in_path_gap(const VehicleState& ego, std::span<const WorldObject> world,
                                         const SafetyParams& params);

/// Longitudinal and lateral safety envelope. Lane boundaries are half-planes
/// parallel to the centerline; other objects are bounding circles.
[[nodiscard]] SafetyEnvelope compute_d_safe(const VehicleState& ego,
                                            std::span<const WorldObject> world, const Lane& lane,
                                            const SafetyParams& params);

/// Pure combination of an envelope and stopping displacements.
[[nodiscard]] SafetyAssessment make_assessment(const SafetyEnvelope& envelope, double d_stop_long,
                                               double d_stop_lat, double d_safe_min);

/// Stopping displacement of the emergency maneuver from `ego`. The lateral
/// component is measured relative to the lane (change in lane offset), so it
/// coincides with the heading-relative value on a straight lane.
struct StopDisplacement {
  double longitudinal = 0.0;
  double lateral = 0.0;
};
[[nodiscard]] StopDisplacement stop_displacement(const VehicleState& ego, const Lane& lane,
                                                 const KinematicParams& kin);

[[nodiscard]] SafetyAssessment assess(const VehicleState& ego, std::span<const WorldObject> world,
                                      const Lane& lane, const SafetyParams& params);

/// Lateral displacement of the ego reference point from the lane center.
[[nodiscard]] double lane_keeping_distance(const VehicleState& ego, const Lane& lane);

/// Aggregates per-frame samples; throws std::invalid_argument on an empty trace.
[[nodiscard]] RunMetrics run_metrics(std::span<const HazardSample> trace,
                                     const SafetyParams& params = {});

/// A (frame, fault) pair is critical iff the fault-free frame is safe and the
/// counterfactual safety potential is not positive on some axis.
[[nodiscard]] bool is_critical(const SafetyAssessment& golden, double delta_hat_long,
                               double delta_hat_lat);

}  // namespace bfi

#endif  // BFI_SAFETY_HPP
