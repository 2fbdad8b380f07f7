#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "gslam/error.hpp"
#include "gslam/geometry.hpp"
#include "gslam/random.hpp"
#include "gslam/sensor_model.hpp"
#include "gslam/spatial_hash.hpp"

namespace gslam {

struct MapPoint {
  Point2D location;
  double prob = 0.0;
};

/// Gate around a beam: annulus d +- n_sigma*sigma_d intersected with the
/// wedge theta +- n_sigma*sigma_theta. Gated points whose likelihood falls
/// below floor_ratio * q_neutral are lifted to that floor.
struct GateConfig {
  double n_sigma = 1.5;
  double floor_ratio = 1e-6;
};

struct InterpConfig {
  std::size_t k = 8;
  double radius = 1.0;
  double power = 2.0;
};

/// The scattered-point probabilistic map.
///
/// Probabilities are stored as raw weights times one map-wide scale, so a
/// Bayes update that multiplies every ungated point by the same factor only
/// touches the gated points. The scale is folded back into the weights by
/// renormalize() and prune(), and whenever it drifts far from 1.
///
/// Point indices are dense and follow insertion order; prune() compacts the
/// storage but keeps the relative order of the survivors.
class ScatterMap {
 public:
  explicit ScatterMap(double cell_size = 0.25) : index_(cell_size) {}

  std::size_t size() const { return locations_.size(); }
  bool empty() const { return locations_.empty(); }
  const Point2D& location(std::size_t i) const { return locations_[i]; }
  double prob(std::size_t i) const { return raw_[i] * scale_; }
  MapPoint point(std::size_t i) const { return {locations_[i], prob(i)}; }
  double total_mass() const { return raw_sum_ * scale_; }
  double cell_size() const { return index_.cell_size(); }

  std::vector<MapPoint> points() const {
    std::vector<MapPoint> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(point(i));
    return out;
  }

  // Exact sum, independent of the incrementally maintained total.
  double recompute_mass() const {
    double s = 0.0;
    for (double w : raw_) s += w;
    return s * scale_;
  }

  std::size_t add(const Point2D& location, double prob) {
    if (!std::isfinite(location.x) || !std::isfinite(location.y)) throw InvalidArgument("ScatterMap: non-finite location");
    if (!(prob >= 0.0 && prob <= 1.0)) throw InvalidArgument("ScatterMap: probability outside [0, 1]");
    if (size() >= std::numeric_limits<std::uint32_t>::max()) throw Error("ScatterMap: too many points");
    const std::size_t i = size();
    locations_.push_back(location);
    raw_.push_back(prob / scale_);
    raw_sum_ += raw_.back();
    index_.insert(location, static_cast<std::uint32_t>(i));
    return i;
  }

  /// Applies p_k <- q_k p_k / Z to every point, where gated points use their
  /// own q (floored at floor_ratio * q_neutral) and all other points use the
  /// prior-weighted mean q_neutral of the gated set. Returns Z.
  ///
  /// `gated` must hold distinct indices. With no gated mass the beam is
  /// treated as uninformative and every point receives `q_empty`.
  double bayes_update(std::span<const std::size_t> gated, std::span<const double> q, double floor_ratio, double q_empty) {
    if (empty()) throw EmptyMapError("bayes_update: empty map");
    assert(gated.size() == q.size());

    double gated_raw = 0.0;
    double gated_qraw = 0.0;
    for (std::size_t j = 0; j < gated.size(); ++j) {
      gated_raw += raw_[gated[j]];
      gated_qraw += q[j] * raw_[gated[j]];
    }
    const double q_neutral = gated_raw > 0.0 ? gated_qraw / gated_raw : q_empty;
    const double q_floor = q_neutral * floor_ratio;

    double z_raw = q_neutral * (raw_sum_ - gated_raw);
    double new_gated_raw = 0.0;
    for (std::size_t j = 0; j < gated.size(); ++j) {
      const double qe = std::max(q[j], q_floor);
      z_raw += qe * raw_[gated[j]];
    }
    const double z = z_raw * scale_;
    if (!(z >= 1e-300) || !std::isfinite(z) || !(q_neutral > 0.0))
      throw UnderflowError("bayes_update: marginal underflow");

    for (std::size_t j = 0; j < gated.size(); ++j) {
      double& w = raw_[gated[j]];
      w *= std::max(q[j], q_floor) / q_neutral;
      new_gated_raw += w;
    }
    raw_sum_ += new_gated_raw - gated_raw;
    scale_ *= q_neutral / z;
    if (scale_ < 1e-100 || scale_ > 1e100) fold_scale();
    return z;
  }

  /// Scales all probabilities so they sum to one.
  void renormalize() {
    const double mass = recompute_mass();
    if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgument("renormalize: total mass must be positive");
    const double f = scale_ / mass;
    raw_sum_ = 0.0;
    for (double& w : raw_) {
      w *= f;
      raw_sum_ += w;
    }
    scale_ = 1.0;
  }

  /// Drops points with prob < p_thr_rel / size(), keeping at least the
  /// most probable point, then renormalizes. Returns the number removed.
  std::size_t prune(double p_thr_rel) {
    if (empty()) throw EmptyMapError("prune: empty map");
    const double mass = recompute_mass();
    if (!(mass > 0.0)) throw InvalidArgument("prune: total mass must be positive");
    const double threshold_raw = p_thr_rel / static_cast<double>(size()) / scale_;

    std::size_t best = 0;
    for (std::size_t i = 1; i < size(); ++i)
      if (raw_[i] > raw_[best]) best = i;

    std::size_t out = 0;
    for (std::size_t i = 0; i < size(); ++i) {
      if (raw_[i] < threshold_raw && i != best) continue;
      locations_[out] = locations_[i];
      raw_[out] = raw_[i];
      ++out;
    }
    const std::size_t removed = size() - out;
    locations_.resize(out);
    raw_.resize(out);
    rebuild_index();
    renormalize();
    return removed;
  }

  template <class Visitor>
  void visit_ring(const Point2D& c, std::int64_t ring, Visitor&& visit) const {
    index_.visit_ring(c, ring, std::forward<Visitor>(visit));
  }

  template <class Visitor>
  void visit_box(double x_min, double y_min, double x_max, double y_max, Visitor&& visit) const {
    index_.visit_box(x_min, y_min, x_max, y_max, std::forward<Visitor>(visit));
  }

  /// Indices of points within `radius` of `center`, sorted by index.
  std::vector<std::size_t> radius_query(const Point2D& center, double radius) const {
    std::vector<std::size_t> out;
    const double r2 = radius * radius;
    index_.visit_box(center.x - radius, center.y - radius, center.x + radius, center.y + radius, [&](std::uint32_t i) {
      if (squared_distance(locations_[i], center) <= r2) out.push_back(i);
    });
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  void fold_scale() {
    raw_sum_ = 0.0;
    for (double& w : raw_) {
      w *= scale_;
      raw_sum_ += w;
    }
    scale_ = 1.0;
  }

  void rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < size(); ++i) index_.insert(locations_[i], static_cast<std::uint32_t>(i));
  }

  std::vector<Point2D> locations_;
  std::vector<double> raw_;
  double scale_ = 1.0;
  double raw_sum_ = 0.0;
  SpatialHash index_;
};

// ---------------------------------------------------------------------------
// Beam-level operations

struct BeamGate {
  double d_lo = 0.0;
  double d_hi = 0.0;
  double half_width = 0.0;  // bearing half-width, radians
};

inline BeamGate make_gate(const RangeBearing& z, const Cov2& noise, const GateConfig& gate) {
  const double sd = std::sqrt(noise.xx());
  const double st = std::sqrt(noise.yy());
  return {std::max(0.0, z.d - gate.n_sigma * sd), z.d + gate.n_sigma * sd, gate.n_sigma * st};
}

inline bool in_gate(const Pose2D& s, const RangeBearing& z, const BeamGate& g, const Point2D& p) {
  const double dx = p.x - s.x();
  const double dy = p.y - s.y();
  const double d = std::sqrt(dx * dx + dy * dy);
  if (!(d > kMinRange)) return false;
  if (d < g.d_lo || d > g.d_hi) return false;
  if (g.half_width >= kPi) return true;
  return std::abs(normalize_angle(std::atan2(dy, dx) - s.phi() - z.theta)) <= g.half_width;
}

/// Map points inside the beam's gate, in index order.
inline std::vector<std::size_t> query_gate(const ScatterMap& m, const Pose2D& s, const RangeBearing& z, const Cov2& noise,
                                           const GateConfig& gate) {
  const BeamGate g = make_gate(z, noise, gate);
  std::vector<std::size_t> out;
  if (m.empty()) return out;

  // Bounding box of the annular sector in world coordinates.
  double x0 = s.x(), y0 = s.y(), x1 = s.x(), y1 = s.y();
  const auto extend = [&](double r, double a) {
    const double px = s.x() + r * std::cos(a);
    const double py = s.y() + r * std::sin(a);
    x0 = std::min(x0, px);
    x1 = std::max(x1, px);
    y0 = std::min(y0, py);
    y1 = std::max(y1, py);
  };
  if (g.half_width >= kPi) {
    extend(g.d_hi, 0.0);
    extend(g.d_hi, kPi / 2);
    extend(g.d_hi, kPi);
    extend(g.d_hi, -kPi / 2);
  } else {
    const double a_lo = s.phi() + z.theta - g.half_width;
    const double a_hi = s.phi() + z.theta + g.half_width;
    if (g.d_lo > 0.0) {
      x0 = x1 = s.x() + g.d_lo * std::cos(a_lo);
      y0 = y1 = s.y() + g.d_lo * std::sin(a_lo);
    }
    extend(g.d_lo, a_lo);
    extend(g.d_lo, a_hi);
    extend(g.d_hi, a_lo);
    extend(g.d_hi, a_hi);
    // Cardinal directions swept by the wedge bound the outer arc.
    for (double c = std::ceil(a_lo / (kPi / 2)) * (kPi / 2); c <= a_hi; c += kPi / 2) extend(g.d_hi, c);
  }
  const double pad = 1e-9 * (1.0 + g.d_hi);
  m.visit_box(x0 - pad, y0 - pad, x1 + pad, y1 + pad, [&](std::uint32_t i) {
    if (in_gate(s, z, g, m.location(i))) out.push_back(i);
  });
  std::sort(out.begin(), out.end());
  return out;
}

/// Prior for a new location: inverse-distance-weighted mean of the k nearest
/// points within `radius`, or 1/(|map|+1) when the neighbourhood is empty.
inline double interpolate_prior(const ScatterMap& m, const Point2D& loc, const InterpConfig& cfg) {
  const double fallback = 1.0 / static_cast<double>(m.size() + 1);
  if (m.empty() || cfg.k == 0) return fallback;
  const double r = cfg.radius;
  const double r2 = r * r;

  // (squared distance, index); ties resolve to the lower index
  thread_local std::vector<std::pair<double, std::uint32_t>> near;
  near.clear();
  const double cell = m.cell_size();
  const auto last_ring = static_cast<std::int64_t>(std::ceil(r / cell));
  for (std::int64_t ring = 0; ring <= last_ring; ++ring) {
    m.visit_ring(loc, ring, [&](std::uint32_t i) {
      const double d2 = squared_distance(m.location(i), loc);
      if (d2 <= r2) near.emplace_back(d2, i);
    });
    if (near.size() >= cfg.k) {
      std::nth_element(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(cfg.k) - 1, near.end());
      near.resize(cfg.k);
      const double reach = static_cast<double>(ring) * cell;
      if (near.back().first < reach * reach) break;
    }
  }
  if (near.empty()) return fallback;
  double num = 0.0;
  double den = 0.0;
  std::uint32_t exact = std::numeric_limits<std::uint32_t>::max();
  for (const auto& [d2, i] : near) {
    if (d2 == 0.0) {
      exact = std::min(exact, i);
      continue;
    }
    const double w = cfg.power == 2.0 ? 1.0 / d2 : std::pow(d2, -0.5 * cfg.power);
    num += w * m.prob(i);
    den += w;
  }
  if (exact != std::numeric_limits<std::uint32_t>::max()) return m.prob(exact);
  return num / den;
}

/// A candidate point drawn from the measurement noise around one beam.
struct GeneratedPoint {
  Point2D location;
  double prior = 0.0;
  RangeBearing sampled;
};

inline std::vector<GeneratedPoint> generate_points(const ScatterMap& m, const Pose2D& s, const RangeBearing& z,
                                                   std::size_t count, const Cov2& noise, const InterpConfig& interp,
                                                   Rng& rng) {
  if (count == 0) throw InvalidArgument("generate_points: count must be >= 1");
  std::vector<GeneratedPoint> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    const RangeBearing zs = sample_measurement(z, noise, rng);
    const Point2D loc = inverse_measurement(s, zs);
    out.push_back({loc, interpolate_prior(m, loc, interp), zs});
  }
  return out;
}

struct BeamResult {
  double marginal = 0.0;  // Z over the whole extended map, ungated points at q_neutral
  double evidence = 0.0;  // sum of q_k p_k over the points present before the beam
};

/// Bayes update of the map for one beam. `fresh` points join the map first
/// and share the beam's normalization, each with likelihood d_z(z - z_sampled).
///
/// The evidence scores the beam against the map as it stood: gated points
/// use their floored q, every other prior point the floor. Fresh points are
/// left out since their q does not depend on the pose. An empty prior map
/// gives q_empty.
inline BeamResult beam_update(ScatterMap& m, const Pose2D& s, const RangeBearing& z, const Cov2& noise,
                              const GateConfig& gate, std::span<const GeneratedPoint> fresh = {}) {
  if (m.empty() && fresh.empty()) throw EmptyMapError("beam_update: empty map");
  const MeasurementLikelihood lik(noise);
  // E[d_z] under d_z itself: the density of an unexplained return
  const double q_empty = 0.5 * lik.peak();

  const double prior_mass = m.total_mass();
  std::vector<std::size_t> gated = query_gate(m, s, z, noise, gate);
  const std::size_t n_prior = gated.size();
  std::vector<double> q;
  q.reserve(gated.size() + fresh.size());
  for (std::size_t i : gated) q.push_back(lik(z, predict_measurement(s, m.location(i))));
  for (const GeneratedPoint& g : fresh) {
    gated.push_back(m.add(g.location, g.prior));
    q.push_back(lik(z, g.sampled));
  }

  double gated_mass = 0.0;
  double gated_q = 0.0;
  for (std::size_t j = 0; j < gated.size(); ++j) {
    gated_mass += m.prob(gated[j]);
    gated_q += q[j] * m.prob(gated[j]);
  }
  const double q_floor = gate.floor_ratio * (gated_mass > 0.0 ? gated_q / gated_mass : q_empty);
  double evidence = q_empty;
  if (prior_mass > 0.0) {
    double seen = 0.0;
    evidence = 0.0;
    for (std::size_t j = 0; j < n_prior; ++j) {
      seen += m.prob(gated[j]);
      evidence += std::max(q[j], q_floor) * m.prob(gated[j]);
    }
    evidence = (evidence + q_floor * std::max(0.0, prior_mass - seen)) / prior_mass;
  }
  const double marginal = m.bayes_update(gated, q, gate.floor_ratio, q_empty);
  return {marginal, evidence};
}

// ---------------------------------------------------------------------------
// Density grid export

/// Row-major grid; row r spans y in [y0 + r*res, y0 + (r+1)*res).
struct DensityGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double resolution = 1.0;
  std::vector<double> cells;

  double at(std::size_t row, std::size_t col) const { return cells[row * cols + col]; }
  double total() const {
    double s = 0.0;
    for (double c : cells) s += c;
    return s;
  }
};

inline DensityGrid make_density_grid(double resolution, const Rect& bounds) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) throw InvalidArgument("density grid: resolution must be > 0");
  if (bounds.empty()) throw InvalidArgument("density grid: empty bounds");
  DensityGrid g;
  g.resolution = resolution;
  g.x0 = bounds.x_min;
  g.y0 = bounds.y_min;
  g.cols = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bounds.width() / resolution - 1e-9)));
  g.rows = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bounds.height() / resolution - 1e-9)));
  g.cells.assign(g.rows * g.cols, 0.0);
  return g;
}

// Points on the upper bounds edge fall into the last row/column.
inline void accumulate(DensityGrid& g, const Rect& bounds, const MapPoint& p) {
  if (!bounds.contains(p.location)) return;
  const auto col = std::min(g.cols - 1, static_cast<std::size_t>(std::floor((p.location.x - g.x0) / g.resolution)));
  const auto row = std::min(g.rows - 1, static_cast<std::size_t>(std::floor((p.location.y - g.y0) / g.resolution)));
  g.cells[row * g.cols + col] += p.prob;
}

inline DensityGrid export_density_grid(std::span<const MapPoint> points, double resolution, const Rect& bounds) {
  DensityGrid g = make_density_grid(resolution, bounds);
  for (const MapPoint& p : points) accumulate(g, bounds, p);
  return g;
}

inline DensityGrid export_density_grid(const ScatterMap& m, double resolution, const Rect& bounds) {
  DensityGrid g = make_density_grid(resolution, bounds);
  for (std::size_t i = 0; i < m.size(); ++i) accumulate(g, bounds, m.point(i));
  return g;
}

}  // namespace gslam
