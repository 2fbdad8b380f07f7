#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gslam/error.hpp"
#include "gslam/gaussian.hpp"
#include "gslam/geometry.hpp"
#include "gslam/random.hpp"

namespace gslam {

struct RangeBearing {
  double d = 0.0;
  double theta = 0.0;

  friend bool operator==(const RangeBearing&, const RangeBearing&) = default;
};

struct SensorSpec {
  double max_range = 80.0;
  double fov = kPi;
  std::size_t beam_count = 361;
  Cov2 noise = Cov2::diagonal(0.05, 0.005);  // over (d, theta)

  // Bearings are spread evenly over the field of view, centred on the heading.
  double angular_spacing() const { return beam_count > 1 ? fov / static_cast<double>(beam_count - 1) : 0.0; }
  double bearing(std::size_t i) const { return -0.5 * fov + angular_spacing() * static_cast<double>(i); }

  void validate() const {
    if (!(max_range > 0.0) || !std::isfinite(max_range)) throw InvalidArgument("SensorSpec: max_range must be > 0");
    if (!(fov > 0.0) || fov > kTwoPi) throw InvalidArgument("SensorSpec: fov must lie in (0, 2pi]");
    if (beam_count == 0) throw InvalidArgument("SensorSpec: beam_count must be positive");
  }
};

/// One sweep of the laser. Ranges at or beyond max_range carry no return.
struct LaserScan {
  double timestamp = 0.0;
  std::vector<double> ranges;

  RangeBearing beam(const SensorSpec& spec, std::size_t i) const { return {ranges[i], spec.bearing(i)}; }
  bool valid_beam(const SensorSpec& spec, std::size_t i) const {
    return ranges[i] < spec.max_range && ranges[i] >= 0.0;
  }
};

inline constexpr double kMinRange = 1e-9;

inline RangeBearing predict_measurement(const Pose2D& s, const Point2D& th) {
  const double dx = th.x - s.x();
  const double dy = th.y - s.y();
  const double d = std::sqrt(dx * dx + dy * dy);
  if (!(d > kMinRange)) throw DegenerateGeometry("predict_measurement: point coincides with the sensor");
  return {d, normalize_angle(std::atan2(dy, dx) - s.phi())};
}

inline Point2D inverse_measurement(const Pose2D& s, const RangeBearing& z) {
  if (z.d < 0.0) throw InvalidArgument("inverse_measurement: negative range");
  const double a = s.phi() + z.theta;
  return {s.x() + z.d * std::cos(a), s.y() + z.d * std::sin(a)};
}

/// Measurement-noise density d_z evaluated on the residual observed - predicted.
class MeasurementLikelihood {
 public:
  explicit MeasurementLikelihood(const Cov2& noise) : density_(noise) {}

  double operator()(const RangeBearing& observed, const RangeBearing& predicted) const {
    return density_(observed.d - predicted.d, normalize_angle(observed.theta - predicted.theta));
  }

  double peak() const { return density_.peak(); }

 private:
  GaussianDensity density_;
};

inline double likelihood(const RangeBearing& observed, const RangeBearing& predicted, const Cov2& noise) {
  return MeasurementLikelihood(noise)(observed, predicted);
}

inline RangeBearing sample_measurement(const RangeBearing& z, const Cov2& noise, Rng& rng) {
  if (noise.is_zero()) return z;
  const auto [dd, dt] = sample_gaussian(noise, rng);
  return {std::max(0.0, z.d + dd), normalize_angle(z.theta + dt)};
}

}  // namespace gslam
