#pragma once

#include <cmath>
#include <numbers>

#include "gslam/error.hpp"

namespace gslam {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  if (!std::isfinite(a)) throw InvalidArgument("normalize_angle: non-finite angle");
  double r = std::remainder(a, kTwoPi);  // [-pi, pi]
  if (r <= -kPi) r += kTwoPi;
  return r;
}

struct Point2D {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2D&, const Point2D&) = default;
};

inline double distance(const Point2D& a, const Point2D& b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double squared_distance(const Point2D& a, const Point2D& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/// Planar pose. The heading is normalized on construction and whenever it is
/// set through `with_heading`, so two poses that differ by 2*pi compare equal.
class Pose2D {
 public:
  Pose2D() = default;
  Pose2D(double x, double y, double phi) : x_(x), y_(y), phi_(normalize_angle(phi)) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw InvalidArgument("Pose2D: non-finite position");
  }

  double x() const { return x_; }
  double y() const { return y_; }
  double phi() const { return phi_; }
  Point2D position() const { return {x_, y_}; }

  friend bool operator==(const Pose2D&, const Pose2D&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double phi_ = 0.0;
};

inline Point2D to_world_frame(const Pose2D& pose, const Point2D& local) {
  const double c = std::cos(pose.phi());
  const double s = std::sin(pose.phi());
  return {pose.x() + c * local.x - s * local.y, pose.y() + s * local.x + c * local.y};
}

inline Point2D to_robot_frame(const Pose2D& pose, const Point2D& world) {
  const double c = std::cos(pose.phi());
  const double s = std::sin(pose.phi());
  const double dx = world.x - pose.x();
  const double dy = world.y - pose.y();
  return {c * dx + s * dy, -s * dx + c * dy};
}

struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool empty() const { return !(x_max > x_min && y_max > y_min); }
  bool contains(const Point2D& p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
};

}  // namespace gslam
