// SPDX-License-Identifier: Apache-2.0

#include "bfi/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "bfi/kinematics.hpp"

namespace bfi {

Lane::Lane(std::vector<Vec2> centerline, double half_width)
    : centerline_(std::move(centerline)), half_width_(half_width) {
  if (centerline_.size() < 2) throw std::invalid_argument("lane centerline needs >= 2 points");
  if (!(half_width_ > 0)) throw std::invalid_argument("lane half width must be positive");
  cumulative_.assign(centerline_.size(), 0.0);
  for (std::size_t i = 1; i < centerline_.size(); ++i) {
    const double seg = norm(centerline_[i] - centerline_[i - 1]);
    if (!(seg > 0)) throw std::invalid_argument("lane centerline has repeated points");
    cumulative_[i] = cumulative_[i - 1] + seg;
  }
  // Discrete curvature at interior vertices: turning angle over mean segment length.
  vertex_curvature_.assign(centerline_.size(), 0.0);
  for (std::size_t i = 1; i + 1 < centerline_.size(); ++i) {
    const Vec2 a = centerline_[i] - centerline_[i - 1];
    const Vec2 b = centerline_[i + 1] - centerline_[i];
    const double turn = std::atan2(cross(a, b), dot(a, b));
    vertex_curvature_[i] = turn / (0.5 * (norm(a) + norm(b)));
  }
}

LaneProjection Lane::project(Vec2 p) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  LaneProjection best;
  for (std::size_t i = 0; i + 1 < centerline_.size(); ++i) {
    const Vec2 a = centerline_[i];
    const Vec2 ab = centerline_[i + 1] - a;
    const double len2 = dot(ab, ab);
    double u = dot(p - a, ab) / len2;
    // the end segments extend the lane past its ends
    if (i != 0) u = std::max(u, 0.0);
    if (i + 2 != centerline_.size()) u = std::min(u, 1.0);
    const Vec2 q = a + u * ab;
    const Vec2 d = p - q;
    const double d2 = dot(d, d);
    if (d2 < best_d2) {
      best_d2 = d2;
      const double len = std::sqrt(len2);
      best.station = cumulative_[i] + u * len;
      best.offset = cross(ab, d) / len;
      best.heading = std::atan2(ab.y, ab.x);
    }
  }
  best.curvature = curvature_at(best.station);
  return best;
}

Vec2 Lane::point_at(double station) const {
  if (station <= 0) {
    const Vec2 dir = centerline_[1] - centerline_[0];
    return centerline_[0] + (station / norm(dir)) * dir;
  }
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), station);
  std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
  if (i >= centerline_.size()) i = centerline_.size() - 1;
  const std::size_t j = i - 1;
  const Vec2 ab = centerline_[i] - centerline_[j];
  const double u = (station - cumulative_[j]) / (cumulative_[i] - cumulative_[j]);
  return centerline_[j] + u * ab;
}

double Lane::heading_at(double station) const {
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), station);
  std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
  i = std::clamp<std::size_t>(i, 1, centerline_.size() - 1);
  const Vec2 ab = centerline_[i] - centerline_[i - 1];
  return std::atan2(ab.y, ab.x);
}

double Lane::curvature_at(double station) const {
  // linear interpolation of the vertex curvature
  if (station <= 0 || station >= length()) return 0.0;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), station);
  const std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
  const std::size_t j = i - 1;
  const double u = (station - cumulative_[j]) / (cumulative_[i] - cumulative_[j]);
  return (1 - u) * vertex_curvature_[j] + u * vertex_curvature_[i];
}

CenterlineBuilder& CenterlineBuilder::straight(double length, double spacing) {
  const int n = std::max(1, static_cast<int>(std::ceil(length / spacing)));
  const double step = length / n;
  for (int i = 0; i < n; ++i) {
    pos_ = pos_ + step * Vec2{std::cos(heading_), std::sin(heading_)};
    points_.push_back(pos_);
  }
  return *this;
}

CenterlineBuilder& CenterlineBuilder::arc(double radius, double angle, double spacing) {
  const double arc_len = radius * std::abs(angle);
  const int n = std::max(1, static_cast<int>(std::ceil(arc_len / spacing)));
  const double dtheta = angle / n;
  const double chord = 2 * radius * std::sin(std::abs(dtheta) / 2);
  for (int i = 0; i < n; ++i) {
    const double mid = heading_ + dtheta / 2;
    pos_ = pos_ + chord * Vec2{std::cos(mid), std::sin(mid)};
    heading_ = normalize_angle(heading_ + dtheta);
    points_.push_back(pos_);
  }
  return *this;
}

}  // namespace bfi
