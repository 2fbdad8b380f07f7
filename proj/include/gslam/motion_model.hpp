#pragma once

#include <cmath>

#include "gslam/error.hpp"
#include "gslam/gaussian.hpp"
#include "gslam/geometry.hpp"
#include "gslam/random.hpp"

namespace gslam {

/// Rear-wheel velocity and front-wheel steering angle.
struct Control {
  double v_e = 0.0;
  double omega = 0.0;

  friend bool operator==(const Control&, const Control&) = default;
};

/// Car geometry. The state being propagated is the laser's pose; (a, b) place
/// the laser in the vehicle frame whose origin is the rear axle centre.
struct VehicleParams {
  double L = 2.75;
  double H = 0.74;
  double a = 2.75 + 0.5;
  double b = 0.5;

  void validate() const {
    if (!(L > 0.0) || !std::isfinite(L)) throw InvalidArgument("VehicleParams: L must be positive");
    if (!(H >= 0.0) || !std::isfinite(H)) throw InvalidArgument("VehicleParams: H must be non-negative");
    if (!std::isfinite(a) || !std::isfinite(b)) throw InvalidArgument("VehicleParams: non-finite sensor offset");
  }
};

struct ControlNoise {
  Cov2 cov;  // over (v_e, omega)

  static ControlNoise from_std(double std_v, double std_omega, double correlation = 0.0) {
    return {Cov2::from_std(std_v, std_omega, correlation)};
  }
};

inline constexpr double kSingularTolerance = 1e-6;

/// Centre velocity from the rear-wheel reading.
inline double effective_velocity(const Control& c, const VehicleParams& p) {
  if (std::abs(c.omega) >= kPi / 2) throw InvalidArgument("effective_velocity: |omega| must be < pi/2");
  const double denom = 1.0 - std::tan(c.omega) * p.H / p.L;
  if (std::abs(denom) <= kSingularTolerance)
    throw SingularityError("effective_velocity: 1 - tan(omega) H / L is singular");
  return c.v_e / denom;
}

// One explicit Euler step of the rear-drive kinematics. dt == 0 returns s.
inline Pose2D propagate(const Pose2D& s, const Control& c, double dt, const VehicleParams& p) {
  if (dt < 0.0 || !std::isfinite(dt)) throw InvalidArgument("propagate: dt must be >= 0");
  const double vc = effective_velocity(c, p);
  if (dt == 0.0) return s;
  const double turn = vc / p.L * std::tan(c.omega);
  const double cphi = std::cos(s.phi());
  const double sphi = std::sin(s.phi());
  const double x = s.x() + (vc * cphi - (p.a * sphi + p.b * cphi) * turn) * dt;
  const double y = s.y() + (vc * sphi + (p.a * cphi - p.b * sphi) * turn) * dt;
  return Pose2D(x, y, s.phi() + turn * dt);
}

inline Control sample_control(const Control& c, const ControlNoise& n, Rng& rng) {
  if (n.cov.is_zero()) return c;
  const auto [dv, dw] = sample_gaussian(n.cov, rng);
  return {c.v_e + dv, c.omega + dw};
}

}  // namespace gslam
