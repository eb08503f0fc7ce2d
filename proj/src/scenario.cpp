// SPDX-License-Identifier: Apache-2.0

#include "bfi/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bfi/csv.hpp"

namespace bfi {

using nlohmann::json;

Vec2 Actor::position_at(double t) const {
  if (waypoints.empty()) return {};
  if (t <= waypoints.front().t) return {waypoints.front().x, waypoints.front().y};
  if (t >= waypoints.back().t) return {waypoints.back().x, waypoints.back().y};
  const auto it = std::upper_bound(waypoints.begin(), waypoints.end(), t,
                                   [](double tt, const Waypoint& w) { return tt < w.t; });
  const Waypoint& b = *it;
  const Waypoint& a = *(it - 1);
  const double u = (t - a.t) / (b.t - a.t);
  return {a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)};
}

Vec2 Actor::velocity_at(double t) const {
  if (waypoints.size() < 2 || t < waypoints.front().t || t >= waypoints.back().t) return {};
  const auto it = std::upper_bound(waypoints.begin(), waypoints.end(), t,
                                   [](double tt, const Waypoint& w) { return tt < w.t; });
  const Waypoint& b = *it;
  const Waypoint& a = *(it - 1);
  return {(b.x - a.x) / (b.t - a.t), (b.y - a.y) / (b.t - a.t)};
}

Lane Scenario::lane() const {
  if (!centerline.empty()) return Lane(centerline, lane_half_width);
  CenterlineBuilder b(lane_start, lane_heading);
  for (const auto& seg : lane_segments) {
    if (seg.radius > 0) {
      b.arc(seg.radius, seg.angle);
    } else {
      b.straight(seg.length);
    }
  }
  return Lane(b.build(), lane_half_width);
}

std::vector<WorldObject> Scenario::world_at(double t, std::span<const double> trigger_times) const {
  std::vector<WorldObject> w;
  w.reserve(actors.size());
  for (std::size_t i = 0; i < actors.size(); ++i) {
    const Actor& a = actors[i];
    double local = t;
    if (a.trigger_distance > 0) {
      const double fired = i < trigger_times.size() ? trigger_times[i] : std::nan("");
      local = std::isnan(fired) ? -1.0 : t - fired;
    }
    w.push_back({a.id, a.kind, a.position_at(local), a.velocity_at(local), a.radius});
  }
  return w;
}

AdsConfig Scenario::ads_config() const {
  AdsConfig c;
  c.kinematics.dt = dt;
  c.planner.cruise_speed = cruise_speed;
  return c;
}

void Scenario::validate() const {
  if (id.empty()) throw ScenarioError("scenario without id");
  if (scenes == 0) throw ScenarioError(id + ": scenes must be positive");
  if (!(dt > 0)) throw ScenarioError(id + ": dt must be positive");
  if (!(cruise_speed >= 0)) throw ScenarioError(id + ": cruise_speed must be non-negative");
  if (!(lane_half_width > 0)) throw ScenarioError(id + ": lane half_width must be positive");
  if (centerline.size() < 2 && lane_segments.empty()) throw ScenarioError(id + ": empty lane");
  if (!(ego.v >= 0) || !std::isfinite(ego.x) || !std::isfinite(ego.y))
    throw ScenarioError(id + ": invalid ego state");
  for (const auto& a : actors) {
    if (a.waypoints.empty()) throw ScenarioError(id + ": actor without waypoints");
    for (std::size_t i = 1; i < a.waypoints.size(); ++i) {
      if (!(a.waypoints[i].t > a.waypoints[i - 1].t))
        throw ScenarioError(id + ": waypoint times must increase");
    }
    if (!(a.radius > 0)) throw ScenarioError(id + ": actor radius must be positive");
    if (!(a.trigger_distance >= 0)) throw ScenarioError(id + ": negative trigger distance");
  }
}

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ScenarioError("malformed scenario: expected an object");
    static const std::set<std::string> known{"id",  "setting", "scenes", "dt",
                                             "cruise_speed", "ego", "lane", "actors"};
    for (const auto& [key, value] : j.items()) {
      if (!known.contains(key)) throw ScenarioError("unknown scenario field: " + key);
    }
    s.id = j.at("id").get<std::string>();
    s.setting = j.value("setting", std::string("urban"));
    s.scenes = j.at("scenes").get<std::size_t>();
    s.dt = j.value("dt", 1.0 / 7.5);
    s.cruise_speed = j.at("cruise_speed").get<double>();
    const auto& e = j.at("ego");
    s.ego.x = e.at("x").get<double>();
    s.ego.y = e.at("y").get<double>();
    s.ego.v = e.at("v").get<double>();
    s.ego.theta = e.at("theta").get<double>();
    const auto& l = j.at("lane");
    s.lane_half_width = l.at("half_width").get<double>();
    if (l.contains("centerline")) {
      for (const auto& p : l.at("centerline"))
        s.centerline.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    } else {
      const auto& st = l.at("start");
      s.lane_start = {st.at(0).get<double>(), st.at(1).get<double>()};
      s.lane_heading = l.value("heading", 0.0);
      for (const auto& seg : l.at("segments")) {
        if (seg.contains("straight")) {
          s.lane_segments.push_back({seg.at("straight").get<double>(), 0, 0});
        } else {
          const auto& arc = seg.at("arc");
          s.lane_segments.push_back({0, arc.at("radius").get<double>(), arc.at("angle").get<double>()});
        }
      }
    }
    for (const auto& a : j.value("actors", json::array())) {
      Actor act;
      act.id = a.value("id", static_cast<int>(s.actors.size()) + 1);
      act.kind = object_kind_from_string(a.at("kind").get<std::string>());
      act.radius = a.value("radius", 1.0);
      act.trigger_distance = a.value("trigger_distance", 0.0);
      for (const auto& w : a.at("waypoints"))
        act.waypoints.push_back({w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>()});
      s.actors.push_back(std::move(act));
    }
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("malformed scenario: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("malformed scenario: ") + e.what());
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["id"] = s.id;
  j["setting"] = s.setting;
  j["scenes"] = s.scenes;
  j["dt"] = s.dt;
  j["cruise_speed"] = s.cruise_speed;
  j["ego"] = {{"x", s.ego.x}, {"y", s.ego.y}, {"v", s.ego.v}, {"theta", s.ego.theta}};
  json cl = json::array();
  const Lane lane = s.lane();
  for (const auto& p : lane.centerline()) cl.push_back({p.x, p.y});
  j["lane"] = {{"half_width", s.lane_half_width}, {"centerline", cl}};
  json actors = json::array();
  for (const auto& a : s.actors) {
    json w = json::array();
    for (const auto& p : a.waypoints) w.push_back({p.t, p.x, p.y});
    json ja = {{"id", a.id}, {"kind", std::string(to_string(a.kind))}, {"radius", a.radius},
               {"waypoints", w}};
    if (a.trigger_distance > 0) ja["trigger_distance"] = a.trigger_distance;
    actors.push_back(ja);
  }
  j["actors"] = actors;
  return j.dump(1);
}

Scenario resolve_scenario(const std::string& id_or_path) {
  for (const auto& id : builtin_scenario_ids()) {
    if (id == id_or_path) return builtin_scenario(id);
  }
  return load_scenario(id_or_path);
}

VehicleState apply_actuation(const VehicleState& s, const ActuationCommand& a,
                             const AdsConfig& cfg, double dt) {
  const double throttle = sanitize(a.throttle, 0, 1);
  const double brake = sanitize(a.brake, 0, 1);
  const double steer = sanitize(a.steer, -1, 1);
  const double accel = cfg.throttle_accel * throttle - cfg.brake_decel * brake;
  const double limit = effective_steer_limit(s.v, cfg);
  const double max_rate = 2.0 * limit;
  const double rate = std::clamp((steer * limit - s.phi) / dt, -max_rate, max_rate);
  return rk4_step(s, accel, rate, cfg.kinematics, dt);
}

RunResult simulate(const Scenario& sc, const RunOptions& opt) {
  const Lane lane = sc.lane();
  const AdsConfig cfg = sc.ads_config();
  Ads ads(cfg);
  std::mt19937_64 rng(opt.seed);
  NullHook null_hook;
  StageHook& hook = opt.hook ? *opt.hook : null_hook;
  SafetyParams sp;
  sp.kinematics = cfg.kinematics;

  RunResult r;
  r.scenario = sc.id;
  r.seed = opt.seed;
  Fnv1a digest;
  VehicleState ego = sc.ego;
  double odometry = 0.0;
  double last_accel = 0.0;
  const std::size_t n = opt.stop_after ? std::min(*opt.stop_after, sc.scenes) : sc.scenes;
  if (opt.keep_frames) r.frames.reserve(n);
  r.samples.reserve(n);
  r.trigger_times.assign(sc.actors.size(), std::nan(""));
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * sc.dt;
    for (std::size_t i = 0; i < sc.actors.size(); ++i) {
      const Actor& a = sc.actors[i];
      if (a.trigger_distance <= 0 || !std::isnan(r.trigger_times[i])) continue;
      const Vec2 p0{a.waypoints.front().x, a.waypoints.front().y};
      if (norm(p0 - Vec2{ego.x, ego.y}) <= a.trigger_distance) r.trigger_times[i] = t;
    }
    const auto world = sc.world_at(t, r.trigger_times);
    FrameRecord f;
    f.scene = k;
    f.t = t;
    f.ego = ego;
    f.hazard = {closest_in_path_gap(ego, world, sp), lane_keeping_distance(ego, lane)};
    if (opt.assess) f.safety = assess(ego, world, lane, sp);
    const InertialMeasurement imu{odometry, ego.v, last_accel, ego.theta, ego.phi};
    const SensorFrame sensors = sense(world, ego, lane, imu, cfg.sensors, rng);
    const AdsFrame out = ads.step(k, sensors, hook);
    f.vars = out.vars;
    f.a = out.a;

    for (double x : {ego.x, ego.y, ego.v, ego.theta, ego.phi}) digest.add(x);
    for (double x : out.vars) digest.add(x);
    r.samples.push_back(f.hazard);
    ++r.scenes_run;
    const bool collision = f.hazard.cipo <= 0;
    if (opt.keep_frames) r.frames.push_back(std::move(f));
    if (collision) {
      r.collided = true;
      if (opt.stop_on_collision) break;
    }
    const VehicleState next = apply_actuation(ego, out.a, cfg, sc.dt);
    last_accel = (next.v - ego.v) / sc.dt;
    odometry += 0.5 * (ego.v + next.v) * sc.dt;
    ego = next;
  }
  r.metrics = run_metrics(r.samples, sp);
  r.digest = digest.value();
  return r;
}

namespace {

const std::vector<std::string> kStateColumns{"scene", "t", "x", "y", "v", "theta", "phi", "cipo",
                                             "lk"};
const std::vector<std::string> kSafetyColumns{"d_safe_long", "d_safe_lat", "d_stop_long",
                                              "d_stop_lat", "delta_long", "delta_lat", "safe"};

}  // namespace

void write_trace(const std::filesystem::path& path, const RunResult& run, std::uint64_t plan) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace " + path.string());
  out << "# scenario=" << run.scenario << " seed=" << run.seed << " plan=" << std::hex << plan
      << std::dec << "\n";
  const bool safety = !run.frames.empty() && run.frames.front().safety.has_value();
  std::vector<std::string> cols = kStateColumns;
  for (const auto& s : registry()) cols.push_back(s.name);
  if (safety) cols.insert(cols.end(), kSafetyColumns.begin(), kSafetyColumns.end());
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n" << std::setprecision(17);
  for (const auto& f : run.frames) {
    out << f.scene << ',' << f.t << ',' << f.ego.x << ',' << f.ego.y << ',' << f.ego.v << ','
        << f.ego.theta << ',' << f.ego.phi << ',' << f.hazard.cipo << ',' << f.hazard.lk;
    for (double x : f.vars) out << ',' << x;
    if (safety) {
      const auto& a = *f.safety;
      out << ',' << a.d_safe_long << ',' << a.d_safe_lat << ',' << a.d_stop_long << ','
          << a.d_stop_lat << ',' << a.delta_long << ',' << a.delta_lat << ',' << (a.safe ? 1 : 0);
    }
    out << "\n";
  }
}

TraceFile read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace " + path.string());
  TraceFile tf;
  std::string line;
  std::getline(in, line);
  {
    std::istringstream hs(line.substr(line.find_first_not_of("# ")));
    std::string tok;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "scenario") tf.scenario = val;
      if (key == "seed") tf.seed = std::stoull(val);
      if (key == "plan") tf.plan_digest = std::stoull(val, nullptr, 16);
    }
  }
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string c;
    while (std::getline(hs, c, ',')) header.push_back(c);
  }
  const std::size_t nvars = kVarCount;
  const bool safety = header.size() == kStateColumns.size() + nvars + kSafetyColumns.size();
  if (header.size() != kStateColumns.size() + nvars && !safety)
    throw std::runtime_error("trace header does not match the variable registry");
  for (std::size_t i = 0; i < nvars; ++i) {
    if (header[kStateColumns.size() + i] != registry()[i].name)
      throw std::runtime_error("trace column mismatch: " + header[kStateColumns.size() + i]);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) v.push_back(parse_number(c));
    if (v.size() != header.size()) throw std::runtime_error("short trace row");
    FrameRecord f;
    f.scene = static_cast<std::size_t>(v[0]);
    f.t = v[1];
    f.ego = {v[2], v[3], v[4], v[5], v[6]};
    f.hazard = {v[7], v[8]};
    for (std::size_t i = 0; i < nvars; ++i) f.vars[i] = v[kStateColumns.size() + i];
    if (safety) {
      const std::size_t o = kStateColumns.size() + nvars;
      SafetyAssessment a;
      a.d_safe_long = v[o];
      a.d_safe_lat = v[o + 1];
      a.d_stop_long = v[o + 2];
      a.d_stop_lat = v[o + 3];
      a.delta_long = v[o + 4];
      a.delta_lat = v[o + 5];
      a.safe = v[o + 6] != 0;
      f.safety = a;
    }
    tf.frames.push_back(f);
  }
  return tf;
}

}  // namespace bfi
