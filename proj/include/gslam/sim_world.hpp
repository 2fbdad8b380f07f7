#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gslam/error.hpp"
#include "gslam/gaussian.hpp"
#include "gslam/geometry.hpp"
#include "gslam/motion_model.hpp"
#include "gslam/random.hpp"
#include "gslam/sensor_model.hpp"

namespace gslam {

struct Segment {
  Point2D a;
  Point2D b;
};

struct Circle {
  Point2D center;
  double radius = 0.0;
};

struct World {
  std::vector<Segment> segments;
  std::vector<Circle> circles;
  Rect bounds;

  bool empty() const { return segments.empty() && circles.empty(); }
};

inline double distance_to_segment(const Point2D& p, const Segment& s) {
  const double vx = s.b.x - s.a.x;
  const double vy = s.b.y - s.a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - s.a.x) * vx + (p.y - s.a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (s.a.x + t * vx), p.y - (s.a.y + t * vy));
}

// Zero inside or on an obstacle.
inline double distance_to_obstacles(const World& w, const Point2D& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const Segment& s : w.segments) best = std::min(best, distance_to_segment(p, s));
  for (const Circle& c : w.circles) best = std::min(best, std::max(0.0, distance(p, c.center) - c.radius));
  return best;
}

/// Distance along the ray from the sensor at `s` with sensor-frame `bearing`
/// to the first obstacle, or max_range when nothing is hit closer.
inline double raycast(const World& w, const Pose2D& s, double bearing, double max_range) {
  const double a = s.phi() + bearing;
  const double dx = std::cos(a);
  const double dy = std::sin(a);
  const double ox = s.x();
  const double oy = s.y();
  double best = max_range;

  for (const Segment& seg : w.segments) {
    const double ex = seg.b.x - seg.a.x;
    const double ey = seg.b.y - seg.a.y;
    const double den = dx * ey - dy * ex;
    if (std::abs(den) < 1e-15) continue;  // parallel
    const double fx = seg.a.x - ox;
    const double fy = seg.a.y - oy;
    const double t = (fx * ey - fy * ex) / den;
    const double u = (fx * dy - fy * dx) / den;
    if (t >= 0.0 && u >= 0.0 && u <= 1.0 && t < best) best = t;
  }
  for (const Circle& c : w.circles) {
    const double fx = ox - c.center.x;
    const double fy = oy - c.center.y;
    const double b = fx * dx + fy * dy;
    const double cc = fx * fx + fy * fy - c.radius * c.radius;
    const double disc = b * b - cc;
    if (disc < 0.0) continue;
    const double sq = std::sqrt(disc);
    double t = -b - sq;
    if (t < 0.0) t = -b + sq;
    if (t >= 0.0 && t < best) best = t;
  }
  return best;
}

inline void add_rectangle_with_doors(World& w, double x0, double y0, double x1, double y1, double door) {
  const double ym = 0.5 * (y0 + y1);
  w.segments.push_back({{x0, y0}, {x1, y0}});
  w.segments.push_back({{x0, y1}, {x1, y1}});
  w.segments.push_back({{x0, y0}, {x0, ym - 0.5 * door}});
  w.segments.push_back({{x0, ym + 0.5 * door}, {x0, y1}});
  w.segments.push_back({{x1, y0}, {x1, ym - 0.5 * door}});
  w.segments.push_back({{x1, ym + 0.5 * door}, {x1, y1}});
}

/// 50 m x 50 m: two 8 m x 22 m buildings with a door in each long wall
/// (12 segments) and eight posts of radius 0.3 m.
inline World default_world() {
  World w;
  w.bounds = {0.0, 0.0, 50.0, 50.0};
  add_rectangle_with_doors(w, 14.0, 14.0, 22.0, 36.0, 1.5);
  add_rectangle_with_doors(w, 28.0, 14.0, 36.0, 36.0, 1.5);
  for (const Point2D c : {Point2D{3, 10}, Point2D{3, 40}, Point2D{47, 10}, Point2D{47, 40}, Point2D{25, 3},
                          Point2D{25, 47}, Point2D{25, 20}, Point2D{25, 30}})
    w.circles.push_back({c, 0.3});
  return w;
}

inline World make_world(const std::string& name) {
  if (name == "default") return default_world();
  throw InvalidArgument("unknown world '" + name + "'");
}

/// Closed polyline sampled densely enough for pursuit lookups.
struct LoopPath {
  std::vector<Point2D> points;
  std::vector<double> arc;  // cumulative length at each point
  double length = 0.0;

  Point2D at(double s) const {
    s = std::fmod(s, length);
    if (s < 0.0) s += length;
    const auto it = std::upper_bound(arc.begin(), arc.end(), s);
    const std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - arc.begin())) - 1;
    const std::size_t j = (i + 1) % points.size();
    const double seg = (i + 1 < arc.size() ? arc[i + 1] : length) - arc[i];
    const double t = seg > 0.0 ? (s - arc[i]) / seg : 0.0;
    return {points[i].x + t * (points[j].x - points[i].x), points[i].y + t * (points[j].y - points[i].y)};
  }
};

// Counter-clockwise rounded rectangle.
inline LoopPath rounded_rectangle(double x0, double y0, double x1, double y1, double r, double step = 0.1) {
  LoopPath path;
  const auto push = [&](Point2D p) {
    if (!path.points.empty()) path.length += distance(path.points.back(), p);
    path.arc.push_back(path.length);
    path.points.push_back(p);
  };
  const auto line = [&](Point2D a, Point2D b) {
    const int n = std::max(1, static_cast<int>(std::ceil(distance(a, b) / step)));
    for (int i = 0; i < n; ++i) push({a.x + (b.x - a.x) * i / n, a.y + (b.y - a.y) * i / n});
  };
  const auto arc = [&](Point2D c, double a0) {
    const int n = std::max(2, static_cast<int>(std::ceil(0.5 * kPi * r / step)));
    for (int i = 0; i < n; ++i) {
      const double a = a0 + 0.5 * kPi * i / n;
      push({c.x + r * std::cos(a), c.y + r * std::sin(a)});
    }
  };
  line({x0 + r, y0}, {x1 - r, y0});
  arc({x1 - r, y0 + r}, -0.5 * kPi);
  line({x1, y0 + r}, {x1, y1 - r});
  arc({x1 - r, y1 - r}, 0.0);
  line({x1 - r, y1}, {x0 + r, y1});
  arc({x0 + r, y1 - r}, 0.5 * kPi);
  line({x0, y1 - r}, {x0, y0 + r});
  arc({x0 + r, y0 + r}, kPi);
  path.length += distance(path.points.back(), path.points.front());
  return path;
}

struct ControlSchedule {
  Pose2D start;
  double dt = 0.25;
  std::vector<Control> controls;
};

/// Rear-axle centre of the vehicle whose laser sits at `laser`.
inline Point2D rear_axle(const Pose2D& laser, const VehicleParams& p) {
  return to_world_frame(laser, {-p.a, -p.b});
}

/// Pure-pursuit controls that drive the noiseless model around `path`.
inline ControlSchedule pursue_loop(const LoopPath& path, const VehicleParams& vp, double speed, double dt,
                                   std::size_t steps, double lookahead = 4.0, double max_steer = 0.6) {
  ControlSchedule sched;
  sched.dt = dt;
  const Point2D p0 = path.at(0.0);
  const Point2D p1 = path.at(0.5);
  const double heading = std::atan2(p1.y - p0.y, p1.x - p0.x);
  // Rear axle on the path start; the laser sits at (a, b) from it.
  const Point2D laser = to_world_frame(Pose2D(p0.x, p0.y, heading), {vp.a, vp.b});
  sched.start = Pose2D(laser.x, laser.y, heading);

  Pose2D s = sched.start;
  double progress = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const Point2D axle = rear_axle(s, vp);
    // Track progress locally so the closest-point search cannot jump across the loop.
    double best = progress;
    double bd = std::numeric_limits<double>::infinity();
    for (double ds = -1.0; ds <= 3.0; ds += 0.05) {
      const double d = squared_distance(path.at(progress + ds), axle);
      if (d < bd) {
        bd = d;
        best = progress + ds;
      }
    }
    progress = best;
    const Point2D target = path.at(progress + lookahead);
    const Point2D local = to_robot_frame(Pose2D(axle.x, axle.y, s.phi()), target);
    const double alpha = std::atan2(local.y, local.x);
    const double steer = std::clamp(std::atan(2.0 * vp.L * std::sin(alpha) / lookahead), -max_steer, max_steer);
    const Control u{speed, steer};
    sched.controls.push_back(u);
    s = propagate(s, u, dt, vp);
  }
  return sched;
}

inline ControlSchedule default_schedule(const VehicleParams& vp, std::size_t steps = 200, double dt = 0.25,
                                        double speed = 2.6) {
  return pursue_loop(rounded_rectangle(8.0, 8.0, 42.0, 42.0, 5.0), vp, speed, dt, steps);
}

struct SimNoise {
  ControlNoise control;
  Cov2 sensor;
};

// Multiplies standard deviations by `factor`.
inline Cov2 scaled(const Cov2& c, double factor) {
  const double f2 = factor * factor;
  return Cov2(c.xx() * f2, c.xy() * f2, c.yy() * f2);
}

struct SimRecord {
  double t = 0.0;
  Pose2D truth;
  Control control;  // as reported, i.e. noisy
  LaserScan scan;
};

struct GpsFix {
  double t = 0.0;
  Point2D position;
};

struct GroundTruthLog {
  Pose2D start;
  double t0 = 0.0;
  std::vector<SimRecord> records;
  std::vector<GpsFix> gps;
};

/// Integrates the true path with the noiseless controls and reports noisy
/// controls and scans. Ray bearing noise is realised by casting along the
/// perturbed bearing and reporting the nominal one.
inline GroundTruthLog simulate(const World& w, const ControlSchedule& sched, const VehicleParams& vp,
                               const SensorSpec& spec, const SimNoise& noise, std::uint64_t seed,
                               double gps_period = 1.0) {
  if (sched.controls.empty()) throw InvalidArgument("simulate: empty control schedule");
  if (!(sched.dt > 0.0)) throw InvalidArgument("simulate: dt must be > 0");
  spec.validate();
  Rng rng(seed);
  GroundTruthLog log;
  log.start = sched.start;
  log.gps.push_back({0.0, sched.start.position()});
  double next_gps = gps_period;

  Pose2D truth = sched.start;
  for (std::size_t k = 0; k < sched.controls.size(); ++k) {
    const Control& u = sched.controls[k];
    truth = propagate(truth, u, sched.dt, vp);
    if (!w.bounds.contains(truth.position()))
      throw InvalidArgument("simulate: path leaves the world bounds at step " + std::to_string(k + 1));
    const double t = static_cast<double>(k + 1) * sched.dt;

    SimRecord rec;
    rec.t = t;
    rec.truth = truth;
    rec.control = sample_control(u, noise.control, rng);
    rec.scan.timestamp = t;
    rec.scan.ranges.resize(spec.beam_count);
    for (std::size_t i = 0; i < spec.beam_count; ++i) {
      const double bearing = spec.bearing(i);
      const double d_true = raycast(w, truth, bearing, spec.max_range);
      const RangeBearing drawn = sample_measurement({d_true, bearing}, noise.sensor, rng);
      double d = d_true;
      if (d_true < spec.max_range) {
        const double along = drawn.theta == bearing ? d_true : raycast(w, truth, drawn.theta, spec.max_range);
        d = along < spec.max_range ? std::max(0.0, along + (drawn.d - d_true)) : spec.max_range;
        if (d > spec.max_range) d = spec.max_range;
      }
      rec.scan.ranges[i] = d;
    }
    log.records.push_back(std::move(rec));
    if (t + 1e-9 >= next_gps) {
      log.gps.push_back({t, truth.position()});
      next_gps += gps_period;
    }
  }
  return log;
}

}  // namespace gslam
