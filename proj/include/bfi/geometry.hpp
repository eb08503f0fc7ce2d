// SPDX-License-Identifier: Apache-2.0

#ifndef BFI_GEOMETRY_HPP
#define BFI_GEOMETRY_HPP

#include <cmath>
#include <vector>

namespace bfi {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Position of a point relative to the lane centerline.
struct LaneProjection {
  double station = 0.0;    // arc length along the centerline
  double offset = 0.0;     // signed lateral offset, left positive
  double heading = 0.0;    // tangent direction at the projection
  double curvature = 0.0;  // signed, left turns positive
};

/// Ego lane: a centerline polyline with constant half-width. Boundaries are
/// the two parallel curves at +-half_width.
class Lane {
 public:
  Lane() = default;
  Lane(std::vector<Vec2> centerline, double half_width);

  [[nodiscard]] const std::vector<Vec2>& centerline() const { return centerline_; }
  [[nodiscard]] double half_width() const { return half_width_; }
  [[nodiscard]] double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  [[nodiscard]] LaneProjection project(Vec2 p) const;
  /// Point on the centerline at the given station (clamped to the ends).
  [[nodiscard]] Vec2 point_at(double station) const;
  [[nodiscard]] double heading_at(double station) const;
  [[nodiscard]] double curvature_at(double station) const;

 private:
  std::vector<Vec2> centerline_;
  std::vector<double> cumulative_;
  std::vector<double> vertex_curvature_;
  double half_width_ = 1.8;
};

/// Builds a centerline made of straight segments and circular arcs.
class CenterlineBuilder {
 public:
  CenterlineBuilder(Vec2 start, double heading) : pos_(start), heading_(heading) {
    points_.push_back(start);
  }
  CenterlineBuilder& straight(double length, double spacing = 5.0);
  /// Positive angle turns left.
  CenterlineBuilder& arc(double radius, double angle, double spacing = 1.0);
  [[nodiscard]] std::vector<Vec2> build() const { return points_; }

 private:
  Vec2 pos_;
  double heading_;
  std::vector<Vec2> points_;
};

}  // namespace bfi

#endif  // BFI_GEOMETRY_HPP
