// SPDX-License-Identifier: Apache-2.0
//
// A small modular driving stack: sensor abstraction, perception (fusion and
// tracking), prediction, planning and PID smoothing. Every module output that
// appears in the variable registry is published into a VarFrame and handed to
// a StageHook before any consumer reads it; consumers read the (possibly
// modified) published values, and outputs that mirror internal state are
// written back so corrupted state persists the way it would in the real module.

#ifndef BFI_ADS_HPP
#define BFI_ADS_HPP

#include <optional>
#include <random>
#include <span>
#include <vector>

#include "bfi/geometry.hpp"
#include "bfi/kinematics.hpp"
#include "bfi/registry.hpp"
#include "bfi/safety.hpp"

namespace bfi {

struct Observation {
  double distance = 0.0;  // range to the object surface (m)
  double bearing = 0.0;   // rad, left positive
  ObjectClass cls = ObjectClass::vehicle;
  double confidence = 0.0;
};

struct LaneObservation {
  bool detected = true;
  LaneType type = LaneType::dashed;
  double width = 3.6;
  double left_distance = 1.8;  // ego reference point to the left boundary
  double heading_error = 0.0;  // ego heading minus lane tangent
  double curvature = 0.0;      // previewed ahead of the vehicle
};

struct InertialMeasurement {
  double pos = 0.0;  // odometry (m travelled)
  double v = 0.0;
  double a = 0.0;
  double theta = 0.0;
  double steer = 0.0;  // road-wheel angle
};

struct SensorFrame {
  std::vector<Observation> camera;
  std::vector<Observation> lidar;
  LaneObservation lane;
  InertialMeasurement imu;
};

struct SensorConfig {
  double sigma_camera = 0.5;
  double sigma_lidar = 0.2;
  double sigma_bearing = 0.002;
  double camera_confidence = 0.8;
  double lidar_confidence = 0.9;
  double range = 150.0;
  double field_of_view = 1.2;  // half angle, rad
  double curvature_preview = 0.5;  // s
};

struct PidGains {
  double kp = 0.8;
  double ki = 0.1;
  double kd = 0.05;
  double slew = 0.15;  // max change per frame
  double integral_limit = 2.0;
};

struct PlannerConfig {
  double cruise_speed = 10.0;
  double d_safe_min = 1.0;
  double margin_vehicle = 2.0;
  double margin_pedestrian = 3.0;
  double margin_cyclist = 2.5;
  double a_plan = 5.0;     // deceleration assumed for the gap budget
  double latency = 0.6;    // s
  double prediction_horizon = 1.0;
  double speed_gain = 1.5;  // 1/s
  double a_accel_max = 3.0;
  double a_brake_max = 6.0;
  double corridor_half_width = 1.5;
  double horizon = 200.0;
  double min_lookahead = 6.0;
  double lookahead_time = 0.8;
};

struct AdsConfig {
  SensorConfig sensors;
  PlannerConfig planner;
  PidGains longitudinal_pid;
  PidGains steer_pid{0.8, 0.1, 0.05, 0.2, 2.0};
  KinematicParams kinematics;
  double lateral_accel_max = 4.0;  // bounds the usable steering angle at speed
  double throttle_accel = 3.0;     // m/s^2 at full throttle
  double brake_decel = 6.0;        // m/s^2 at full brake
  int track_coast_frames = 8;
  int lane_reacquire_frames = 4;
  double track_alpha = 0.5;
  double track_beta = 0.15;
  double association_gate = 3.0;
  double accel_filter = 0.3;
};

/// Steering angle reached at full steering command for the given speed.
[[nodiscard]] double effective_steer_limit(double v, const AdsConfig& cfg);

struct RawActuation {
  double u_throttle = 0.0;
  double u_brake = 0.0;
  double u_steer = 0.0;
};

struct ActuationCommand {
  double throttle = 0.0;
  double brake = 0.0;
  double steer = 0.0;
};

/// One published scene: every registered variable as consumed downstream.
struct AdsFrame {
  std::size_t scene = 0;
  VarFrame vars{};
  ActuationCommand a;
};

/// Called after each pipeline stage with the frame's variables; the hook may
/// overwrite the variables of that stage.
class StageHook {
 public:
  virtual ~StageHook() = default;
  virtual void on_stage(Stage stage, std::size_t scene, VarFrame& vars) = 0;
};

class NullHook final : public StageHook {
 public:
  void on_stage(Stage, std::size_t, VarFrame&) override {}
};

/// Ground truth plus seeded Gaussian range and bearing noise. One observation
/// per object inside range and field of view, in the order of `world`.
[[nodiscard]] SensorFrame sense(std::span<const WorldObject> world, const VehicleState& ego,
                                const Lane& lane, const InertialMeasurement& imu,
                                const SensorConfig& cfg, std::mt19937_64& rng);

/// Index of the nearest observation inside the planning corridor, if any.
[[nodiscard]] std::optional<std::size_t> primary_observation(std::span<const Observation> obs,
                                                             double curvature,
                                                             const PlannerConfig& cfg);

struct Track {
  int id = 0;
  double range = 0.0;
  double lateral = 0.0;
  double range_rate = 0.0;
  double lateral_rate = 0.0;
  ObjectClass cls = ObjectClass::vehicle;
  int misses = 0;
};

struct LaneEstimate {
  bool valid = true;
  int detections = 0;
  LaneType type = LaneType::dashed;
  double width = 3.6;
  double offset = 0.0;
  double heading_error = 0.0;
  double curvature = 0.0;
};

struct AdsState {
  std::vector<Track> tracks;
  LaneEstimate lane;
  int next_track_id = 1;
  int cipo_id = 0;  // 0 when no obstacle is selected
  int prev_cipo_id = 0;
  double prev_obstacle_v = 0.0;
  double prev_obstacle_a = 0.0;
};

struct FusedDetection {
  double distance = 0.0;
  double bearing = 0.0;
  ObjectClass cls = ObjectClass::vehicle;
};

/// Inverse-variance weighted combination of two range measurements.
[[nodiscard]] double fuse_ranges(double camera, double sigma_camera, double lidar,
                                 double sigma_lidar);

/// Associates camera and lidar observations; the class comes from the more
/// confident sensor. Observations labelled "disappear" are dropped.
[[nodiscard]] std::vector<FusedDetection> fuse(const SensorFrame& frame, const AdsConfig& cfg);

/// Alpha-beta tracking with coasting for up to `track_coast_frames` misses.
/// New tracks assume a static object.
void update_tracks(AdsState& state, std::span<const FusedDetection> detections, double ego_v,
                   const AdsConfig& cfg);

void update_lane(LaneEstimate& lane, const LaneObservation& obs, const AdsConfig& cfg);

/// Closest track inside the planning corridor now or within the prediction
/// horizon; nullptr when the path is clear.
[[nodiscard]] const Track* closest_in_path_track(const AdsState& state, const AdsConfig& cfg);

/// Speed the vehicle may hold with `gap` metres of usable space ahead.
[[nodiscard]] double allowed_speed(double gap, const PlannerConfig& cfg);

/// Longitudinal and lateral plan from the published variables.
[[nodiscard]] RawActuation plan(const VarFrame& vars, const AdsState& state, const AdsConfig& cfg);

struct PidChannel {
  double integral = 0.0;
  double prev_error = 0.0;
  double output = 0.0;
};

/// Discrete PID step. The output moves at most `slew` away from `measured`
/// and is clamped to [lo, hi]; the integral only accumulates while the step
/// is not slew-limited. Non-finite inputs are treated as zero.
double pid_update(PidChannel& ch, double setpoint, double measured, const PidGains& g, double lo,
                  double hi);

/// Decodes a published categorical value; invalid codes map to 0.
[[nodiscard]] int decode_category(double value, int count);

/// Replaces non-finite values by `fallback` and clamps to [lo, hi].
[[nodiscard]] double sanitize(double value, double lo, double hi, double fallback = 0.0);

class Ads {
 public:
  explicit Ads(AdsConfig cfg);

  AdsFrame step(std::size_t scene, const SensorFrame& sensors, StageHook& hook);

  [[nodiscard]] const AdsState& state() const { return state_; }
  [[nodiscard]] const AdsConfig& config() const { return cfg_; }

 private:
  AdsConfig cfg_;
  AdsState state_;
  PidChannel longitudinal_;
  PidChannel steering_;
};

}  // namespace bfi

#endif  // BFI_ADS_HPP
