#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace lapgaze {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

/// Head or reticle orientation. Yaw grows to the right, pitch grows upward.
struct Direction {
  double yaw = 0.0;
  double pitch = 0.0;

  friend bool operator==(const Direction&, const Direction&) = default;
};

inline Direction normalized(Direction d) {
  return {wrap_angle(d.yaw), std::clamp(d.pitch, -kPi / 2.0, kPi / 2.0)};
}

// Frame: x right, y up, z forward.
inline Eigen::Vector3d to_vector(Direction d) {
  const double cp = std::cos(d.pitch);
  return {cp * std::sin(d.yaw), std::sin(d.pitch), cp * std::cos(d.yaw)};
}

inline Direction from_vector(const Eigen::Vector3d& v) {
  const Eigen::Vector3d n = v.normalized();
  return {std::atan2(n.x(), n.z()), std::asin(std::clamp(n.y(), -1.0, 1.0))};
}

/// Rotation taking the forward axis onto `d` without roll.
inline Eigen::Matrix3d rotation_of(Direction d) {
  const double cy = std::cos(d.yaw), sy = std::sin(d.yaw);
  const double cp = std::cos(d.pitch), sp = std::sin(d.pitch);
  Eigen::Matrix3d ry;
  ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
  Eigen::Matrix3d rx;
  rx << 1, 0, 0, 0, cp, sp, 0, -sp, cp;
  return ry * rx;
}

/// Great-circle angle between two directions, radians.
inline double angular_distance(Direction a, Direction b) {
  const Eigen::Vector3d va = to_vector(a);
  const Eigen::Vector3d vb = to_vector(b);
  return std::atan2(va.cross(vb).norm(), va.dot(vb));
}

/// Point in aspect-corrected video panel coordinates: x in [0, aspect], y in [0, 1], y downward.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Panel-local normalized coordinates: u rightward, v downward, both in [0, 1].
struct Uv {
  double u = 0.0;
  double v = 0.0;

  friend bool operator==(const Uv&, const Uv&) = default;
};

}  // namespace lapgaze
