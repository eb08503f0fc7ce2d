// SPDX-License-Identifier: Apache-2.0
//
// Planar kinematic vehicle model and the emergency-stop procedure used to
// compute stopping distances.

#ifndef BFI_KINEMATICS_HPP
#define BFI_KINEMATICS_HPP

#include <numbers>
#include <stdexcept>
#include <vector>

namespace bfi {

/// Pose and motion of a vehicle. Position in metres, speed in m/s, angles in rad.
struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double theta = 0.0;  // heading, normalized to (-pi, pi]
  double phi = 0.0;    // steering angle
};

struct KinematicParams {
  double wheelbase = 2.7;
  double a_max = 5.0;  // maximum comfortable deceleration (m/s^2)
  double dt = 1.0 / 7.5;
  double phi_max = std::numbers::pi / 4.0;

  void validate() const;
};

struct MotionRates {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;
};

struct PathPoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct StopResult {
  double t_stop = 0.0;
  double d_stop_long = 0.0;  // along the heading at maneuver start
  double d_stop_lat = 0.0;   // perpendicular to it, left positive
  std::vector<PathPoint> path;

  [[nodiscard]] double end_x() const { return path.empty() ? 0.0 : path.back().x; }
  [[nodiscard]] double end_y() const { return path.empty() ? 0.0 : path.back().y; }
};

/// Thrown for non-finite or otherwise invalid kinematic inputs.
class KinematicsDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

double normalize_angle(double a);

[[nodiscard]] MotionRates motion_derivatives(const VehicleState& s, const KinematicParams& p);

/// Classical RK4 update of (x, y, theta, v, phi) under constant longitudinal
/// acceleration and steering rate. Speed never goes below zero: when the
/// step would reverse the vehicle, integration ends at the instant v hits 0.
[[nodiscard]] VehicleState rk4_step(const VehicleState& s, double accel, double steer_rate,
                                    const KinematicParams& p, double h);

/// Emergency stop: constant deceleration a_max with the steering angle held
/// at its initial value, integrated with step dt/10 until the vehicle halts.
[[nodiscard]] StopResult emergency_stop(const VehicleState& initial, const KinematicParams& p,
                                        bool record_path = true);

/// Same maneuver with an explicit integration step (used for convergence studies).
[[nodiscard]] StopResult emergency_stop_with_step(const VehicleState& initial,
                                                  const KinematicParams& p, double h,
                                                  bool record_path = true);

}  // namespace bfi

#endif  // BFI_KINEMATICS_HPP
