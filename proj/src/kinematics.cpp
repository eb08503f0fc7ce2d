// SPDX-License-Identifier: Apache-2.0

#include "bfi/kinematics.hpp"

#include <algorithm>
#include <cmath>

namespace bfi {

namespace {

struct Rates5 {
  double x, y, theta, v, phi;
};

Rates5 rates(const VehicleState& s, double accel, double steer_rate, double wheelbase) {
  return {s.v * std::cos(s.theta), s.v * std::sin(s.theta), s.v * std::tan(s.phi) / wheelbase,
          accel, steer_rate};
}

VehicleState advance(const VehicleState& s, const Rates5& r, double h) {
  return {s.x + h * r.x, s.y + h * r.y, s.v + h * r.v, s.theta + h * r.theta, s.phi + h * r.phi};
}

bool finite_state(const VehicleState& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.v) &&
         std::isfinite(s.theta) && std::isfinite(s.phi);
}

// Plain RK4 without the stop/clamp logic.
VehicleState rk4_raw(const VehicleState& s, double accel, double steer_rate, double wheelbase,
                     double h) {
  const Rates5 k1 = rates(s, accel, steer_rate, wheelbase);
  const Rates5 k2 = rates(advance(s, k1, h / 2), accel, steer_rate, wheelbase);
  const Rates5 k3 = rates(advance(s, k2, h / 2), accel, steer_rate, wheelbase);
  const Rates5 k4 = rates(advance(s, k3, h), accel, steer_rate, wheelbase);
  VehicleState out;
  out.x = s.x + h / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
  out.y = s.y + h / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y);
  out.theta = s.theta + h / 6 * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta);
  out.v = s.v + h * accel;
  out.phi = s.phi + h * steer_rate;
  return out;
}

}  // namespace

void KinematicParams::validate() const {
  if (!(wheelbase > 0) || !(a_max > 0) || !(dt > 0) || !(phi_max > 0) ||
      !std::isfinite(wheelbase) || !std::isfinite(a_max) || !std::isfinite(dt) ||
      !std::isfinite(phi_max)) {
    throw KinematicsDomainError("kinematic parameters must be finite and strictly positive");
  }
}

double normalize_angle(double a) {
  if (!std::isfinite(a)) return a;
  a = std::remainder(a, 2.0 * std::numbers::pi);  // [-pi, pi]
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

MotionRates motion_derivatives(const VehicleState& s, const KinematicParams& p) {
  return {s.v * std::cos(s.theta), s.v * std::sin(s.theta), s.v * std::tan(s.phi) / p.wheelbase};
}

VehicleState rk4_step(const VehicleState& s, double accel, double steer_rate,
                      const KinematicParams& p, double h) {
  double step = h;
  bool halts = false;
  if (accel < 0 && s.v + accel * h < 0) {
    step = s.v / -accel;
    halts = true;
  }
  VehicleState out = step > 0 ? rk4_raw(s, accel, steer_rate, p.wheelbase, step) : s;
  if (halts) {
    out.v = 0.0;
    // steering keeps moving for the remainder of the step
    out.phi = s.phi + h * steer_rate;
  }
  out.v = std::max(out.v, 0.0);
  out.phi = std::clamp(out.phi, -p.phi_max, p.phi_max);
  out.theta = normalize_angle(out.theta);
  return out;
}

StopResult emergency_stop(const VehicleState& initial, const KinematicParams& p,
                          bool record_path) {
  return emergency_stop_with_step(initial, p, p.dt / 10.0, record_path);
}

StopResult emergency_stop_with_step(const VehicleState& initial, const KinematicParams& p,
                                    double h, bool record_path) {
  p.validate();
  if (!finite_state(initial)) throw KinematicsDomainError("emergency_stop: non-finite state");
  if (initial.v < 0) throw KinematicsDomainError("emergency_stop: negative speed");
  if (!(h > 0)) throw KinematicsDomainError("emergency_stop: step must be positive");

  StopResult r;
  if (record_path) r.path.push_back({0.0, initial.x, initial.y});
  if (initial.v == 0.0) {
    if (!record_path) r.path.push_back({0.0, initial.x, initial.y});
    return r;
  }

  // The steering angle is frozen and the deceleration constant, so v(t) is
  // linear and the halt instant is known exactly; the last step is shortened
  // to land on it.
  const double t_stop = initial.v / p.a_max;
  VehicleState s = initial;
  double t = 0.0;
  const auto n_full = static_cast<long>(std::floor(t_stop / h));
  for (long i = 0; i < n_full; ++i) {
    s = rk4_raw(s, -p.a_max, 0.0, p.wheelbase, h);
    t = static_cast<double>(i + 1) * h;
    if (record_path) r.path.push_back({t, s.x, s.y});
  }
  const double rest = t_stop - t;
  if (rest > 0) {
    s = rk4_raw(s, -p.a_max, 0.0, p.wheelbase, rest);
  }
  if (record_path) {
    if (rest > 0) r.path.push_back({t_stop, s.x, s.y});
  } else {
    r.path.push_back({t_stop, s.x, s.y});
  }

  const double dx = s.x - initial.x;
  const double dy = s.y - initial.y;
  const double c = std::cos(initial.theta);
  const double sn = std::sin(initial.theta);
  r.t_stop = t_stop;
  r.d_stop_long = dx * c + dy * sn;
  r.d_stop_lat = -dx * sn + dy * c;
  return r;
}

}  // namespace bfi
