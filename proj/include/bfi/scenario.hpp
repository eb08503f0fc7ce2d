// SPDX-License-Identifier: Apache-2.0
//
// Built-in 2D scenario engine: a lane, scripted actors and the closed loop
// between the driving stack and the kinematic vehicle.

#ifndef BFI_SCENARIO_HPP
#define BFI_SCENARIO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bfi/ads.hpp"
#include "bfi/digest.hpp"
#include "bfi/geometry.hpp"
#include "bfi/kinematics.hpp"
#include "bfi/safety.hpp"

namespace bfi {

struct Waypoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// Scripted actor following piecewise-linear waypoints; it holds the first
/// waypoint before its time and the last one after it. With a positive
/// trigger distance the waypoint clock starts at the first scene in which the
/// ego is within that distance of the first waypoint.
struct Actor {
  int id = 0;
  ObjectKind kind = ObjectKind::vehicle;
  double radius = 1.0;
  std::vector<Waypoint> waypoints;
  double trigger_distance = 0.0;

  [[nodiscard]] Vec2 position_at(double t) const;
  [[nodiscard]] Vec2 velocity_at(double t) const;
};

/// One lane piece: a straight of `length` metres, or an arc when radius > 0.
struct LaneSegment {
  double length = 0.0;
  double radius = 0.0;
  double angle = 0.0;  // arc only; positive turns left
};

struct Scenario {
  std::string id;
  std::string setting = "urban";  // "freeway" or "urban"
  std::size_t scenes = 0;
  double dt = 1.0 / 7.5;
  double cruise_speed = 10.0;
  VehicleState ego;
  double lane_half_width = 1.8;
  Vec2 lane_start;
  double lane_heading = 0.0;
  std::vector<LaneSegment> lane_segments;  // used to build the centerline
  std::vector<Vec2> centerline;            // explicit polyline, overrides segments
  std::vector<Actor> actors;

  [[nodiscard]] Lane lane() const;
  /// World at time t. `trigger_times` holds, per actor, the time its trigger
  /// fired (NaN when it has not); ignored for untriggered actors.
  [[nodiscard]] std::vector<WorldObject> world_at(double t,
                                                  std::span<const double> trigger_times) const;
  [[nodiscard]] AdsConfig ads_config() const;
  void validate() const;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text);
std::string scenario_to_json(const Scenario& s);

/// Built-in library (A1..A6).
[[nodiscard]] std::vector<std::string> builtin_scenario_ids();
[[nodiscard]] Scenario builtin_scenario(const std::string& id);
/// Built-in id or a path to a scenario file.
[[nodiscard]] Scenario resolve_scenario(const std::string& id_or_path);

struct FrameRecord {
  std::size_t scene = 0;
  double t = 0.0;
  VehicleState ego;
  VarFrame vars{};
  ActuationCommand a;
  HazardSample hazard;
  std::optional<SafetyAssessment> safety;
};

struct RunOptions {
  std::uint64_t seed = 1;
  bool assess = false;                    // compute the safety assessment per frame
  std::optional<std::size_t> stop_after;  // end the run after this many scenes
  bool keep_frames = true;
  bool stop_on_collision = true;
  StageHook* hook = nullptr;
};

struct RunResult {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<FrameRecord> frames;
  std::vector<HazardSample> samples;
  RunMetrics metrics;
  bool collided = false;
  std::size_t scenes_run = 0;
  std::uint64_t digest = 0;
  std::vector<double> trigger_times;  // per actor, NaN if never triggered
};

/// Closed-loop simulation. Deterministic in (scenario, seed, hook behaviour).
[[nodiscard]] RunResult simulate(const Scenario& scenario, const RunOptions& options);

/// Vehicle response to an actuation command over one period.
[[nodiscard]] VehicleState apply_actuation(const VehicleState& s, const ActuationCommand& a,
                                           const AdsConfig& cfg, double dt);

/// Trace file: "# scenario=<id> seed=<n> plan=<digest hex>" followed by a CSV
/// header and one row per scene with the ground-truth state and every
/// registered variable by name.
void write_trace(const std::filesystem::path& path, const RunResult& run,
                 std::uint64_t plan_digest = 0);

struct TraceFile {
  std::string scenario;
  std::uint64_t seed = 0;
  std::uint64_t plan_digest = 0;
  std::vector<FrameRecord> frames;
};

TraceFile read_trace(const std::filesystem::path& path);

}  // namespace bfi

#endif  // BFI_SCENARIO_HPP
