#pragma once

#include <cmath>
#include <algorithm>
#include <random>
#include <tuple>
#include <utility>

#include "gslam/error.hpp"
#include "gslam/geometry.hpp"
#include "gslam/random.hpp"

namespace gslam {

/// Symmetric 2x2 covariance. Construction validates positive semi-definiteness.
class Cov2 {
 public:
  Cov2() = default;
  Cov2(double xx, double xy, double yy) : xx_(xx), xy_(xy), yy_(yy) {
    constexpr double kTol = 1e-15;
    if (!std::isfinite(xx) || !std::isfinite(xy) || !std::isfinite(yy))
      throw InvalidArgument("covariance: non-finite entry");
    if (xx < 0.0 || yy < 0.0 || xx * yy - xy * xy < -kTol * (1.0 + xx * yy))
      throw InvalidArgument("covariance: not positive semi-definite");
  }

  static Cov2 diagonal(double sx, double sy) { return Cov2(sx * sx, 0.0, sy * sy); }
  static Cov2 from_std(double sx, double sy, double correlation) {
    if (correlation < -1.0 || correlation > 1.0) throw InvalidArgument("covariance: correlation outside [-1, 1]");
    return Cov2(sx * sx, correlation * sx * sy, sy * sy);
  }

  double xx() const { return xx_; }
  double xy() const { return xy_; }
  double yy() const { return yy_; }
  double det() const { return xx_ * yy_ - xy_ * xy_; }
  bool is_zero() const { return xx_ == 0.0 && xy_ == 0.0 && yy_ == 0.0; }

  /// Lower Cholesky factor [l11 0; l21 l22]; semi-definite matrices get l22 = 0.
  std::tuple<double, double, double> cholesky() const {
    const double l11 = std::sqrt(xx_);
    const double l21 = l11 > 0.0 ? xy_ / l11 : 0.0;
    const double l22 = std::sqrt(std::max(0.0, yy_ - l21 * l21));
    return {l11, l21, l22};
  }

  friend bool operator==(const Cov2&, const Cov2&) = default;

 private:
  double xx_ = 0.0;
  double xy_ = 0.0;
  double yy_ = 0.0;
};

// Zero-mean draw with covariance `cov`.
inline std::pair<double, double> sample_gaussian(const Cov2& cov, Rng& rng) {
  if (cov.is_zero()) return {0.0, 0.0};
  std::normal_distribution<double> n01(0.0, 1.0);
  const double e1 = n01(rng);
  const double e2 = n01(rng);
  const auto [l11, l21, l22] = cov.cholesky();
  return {l11 * e1, l21 * e1 + l22 * e2};
}

/// Precomputed density of a zero-mean bivariate Gaussian.
class GaussianDensity {
 public:
  explicit GaussianDensity(const Cov2& cov) {
    const double det = cov.det();
    if (!(det > 0.0)) throw InvalidArgument("likelihood: singular measurement covariance");
    ixx_ = cov.yy() / det;
    ixy_ = -cov.xy() / det;
    iyy_ = cov.xx() / det;
    norm_ = 1.0 / (kTwoPi * std::sqrt(det));
  }

  double operator()(double rx, double ry) const {
    const double m = rx * rx * ixx_ + 2.0 * rx * ry * ixy_ + ry * ry * iyy_;
    return norm_ * std::exp(-0.5 * m);
  }

  double peak() const { return norm_; }

 private:
  double ixx_ = 0.0;
  double ixy_ = 0.0;
  double iyy_ = 0.0;
  double norm_ = 0.0;
};

}  // namespace gslam
