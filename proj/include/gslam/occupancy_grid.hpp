#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "gslam/error.hpp"
#include "gslam/geometry.hpp"
#include "gslam/particle_filter.hpp"
#include "gslam/scatter_map.hpp"
#include "gslam/sensor_model.hpp"

namespace gslam {

struct GridParams {
  Rect extent{-5.0, -5.0, 55.0, 55.0};
  double resolution = 0.2;
  double l_occ = 0.85;
  double l_free = -0.4;
  double clamp = 10.0;
  double p_hit = 0.9;
  double p_rand = 0.1;
  std::size_t beam_stride = 2;

  void validate() const {
    if (!(resolution > 0.0)) throw InvalidArgument("GridParams: resolution must be > 0");
    if (extent.empty()) throw InvalidArgument("GridParams: empty extent");
    if (!(clamp > 0.0)) throw InvalidArgument("GridParams: clamp must be > 0");
    if (!(p_rand > 0.0)) throw InvalidArgument("GridParams: p_rand must be > 0");
  }
};

struct Cell {
  std::int64_t ix = 0;
  std::int64_t iy = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Log-odds occupancy grid; cell (ix, iy) covers
/// [x0 + ix*res, x0 + (ix+1)*res) x [y0 + iy*res, y0 + (iy+1)*res).
class OccGrid {
 public:
  OccGrid() = default;
  OccGrid(const Point2D& origin, double resolution, std::size_t cols, std::size_t rows)
      : origin_(origin), resolution_(resolution), cols_(cols), rows_(rows), log_odds_(cols * rows, 0.0) {
    if (!(resolution > 0.0)) throw InvalidArgument("OccGrid: resolution must be > 0");
  }

  static OccGrid covering(const Rect& extent, double resolution) {
    const auto cols = static_cast<std::size_t>(std::ceil(extent.width() / resolution - 1e-9));
    const auto rows = static_cast<std::size_t>(std::ceil(extent.height() / resolution - 1e-9));
    return OccGrid({extent.x_min, extent.y_min}, resolution, std::max<std::size_t>(cols, 1), std::max<std::size_t>(rows, 1));
  }

  const Point2D& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  std::size_t cols() const { return cols_; }
  std::size_t rows() const { return rows_; }
  std::size_t cell_count() const { return log_odds_.size(); }

  Cell cell_of(const Point2D& p) const {
    return {static_cast<std::int64_t>(std::floor((p.x - origin_.x) / resolution_)),
            static_cast<std::int64_t>(std::floor((p.y - origin_.y) / resolution_))};
  }
  bool inside(const Cell& c) const {
    return c.ix >= 0 && c.iy >= 0 && static_cast<std::size_t>(c.ix) < cols_ && static_cast<std::size_t>(c.iy) < rows_;
  }
  Point2D center(const Cell& c) const {
    return {origin_.x + (static_cast<double>(c.ix) + 0.5) * resolution_,
            origin_.y + (static_cast<double>(c.iy) + 0.5) * resolution_};
  }

  double log_odds(const Cell& c) const { return inside(c) ? log_odds_[index(c)] : 0.0; }
  double log_odds(std::size_t flat) const { return log_odds_[flat]; }
  Cell cell(std::size_t flat) const {
    return {static_cast<std::int64_t>(flat % cols_), static_cast<std::int64_t>(flat / cols_)};
  }

  void add(const Cell& c, double delta, double clamp) {
    if (!inside(c)) return;
    double& v = log_odds_[index(c)];
    v = std::clamp(v + delta, -clamp, clamp);
  }

 private:
  std::size_t index(const Cell& c) const { return static_cast<std::size_t>(c.iy) * cols_ + static_cast<std::size_t>(c.ix); }

  Point2D origin_;
  double resolution_ = 1.0;
  std::size_t cols_ = 0;
  std::size_t rows_ = 0;
  std::vector<double> log_odds_;
};

inline double occupancy_probability(double log_odds) { return 1.0 - 1.0 / (1.0 + std::exp(log_odds)); }

// Occupancy evidence above the unknown level: 0 for unknown or free, 1 for certain.
inline double occupancy_evidence(double log_odds) { return std::max(0.0, 2.0 * occupancy_probability(log_odds) - 1.0); }

/// Cells crossed by the segment a -> b on a grid with the given origin and
/// cell size, from a's cell to b's cell inclusive (Amanatides-Woo traversal).
inline std::vector<Cell> traverse_cells(const Point2D& a, const Point2D& b, const Point2D& origin, double res) {
  const double ax = (a.x - origin.x) / res;
  const double ay = (a.y - origin.y) / res;
  const double bx = (b.x - origin.x) / res;
  const double by = (b.y - origin.y) / res;
  Cell c{static_cast<std::int64_t>(std::floor(ax)), static_cast<std::int64_t>(std::floor(ay))};
  const Cell end{static_cast<std::int64_t>(std::floor(bx)), static_cast<std::int64_t>(std::floor(by))};
  const double dx = bx - ax;
  const double dy = by - ay;
  const std::int64_t sx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const std::int64_t sy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double tdx = sx != 0 ? std::abs(1.0 / dx) : kInf;
  const double tdy = sy != 0 ? std::abs(1.0 / dy) : kInf;
  double tx = sx > 0 ? (std::floor(ax) + 1.0 - ax) * tdx : (sx < 0 ? (ax - std::floor(ax)) * tdx : kInf);
  double ty = sy > 0 ? (std::floor(ay) + 1.0 - ay) * tdy : (sy < 0 ? (ay - std::floor(ay)) * tdy : kInf);

  std::vector<Cell> out;
  out.push_back(c);
  const std::int64_t max_steps = std::abs(end.ix - c.ix) + std::abs(end.iy - c.iy);
  for (std::int64_t n = 0; n < max_steps && !(c == end); ++n) {
    if (tx < ty) {
      c.ix += sx;
      tx += tdx;
    } else {
      c.iy += sy;
      ty += tdy;
    }
    out.push_back(c);
  }
  return out;
}

/// Log-odds ray update: cells before the endpoint are freed, the endpoint
/// cell is marked occupied. Returns at max range free cells only.
inline void grid_integrate(OccGrid& g, const Pose2D& s, const LaserScan& scan, const SensorSpec& spec,
                           const GridParams& params, std::size_t stride = 1) {
  for (std::size_t i = 0; i < scan.ranges.size(); i += stride) {
    const bool hit = scan.valid_beam(spec, i);
    const double d = hit ? scan.ranges[i] : spec.max_range;
    const Point2D end = inverse_measurement(s, {d, spec.bearing(i)});
    const std::vector<Cell> cells = traverse_cells(s.position(), end, g.origin(), g.resolution());
    for (std::size_t k = 0; k + 1 < cells.size(); ++k) g.add(cells[k], params.l_free, params.clamp);
    if (hit)
      g.add(cells.back(), params.l_occ, params.clamp);
    else
      g.add(cells.back(), params.l_free, params.clamp);
  }
}

/// Per-beam likelihoods p_hit * evidence(endpoint cell) + p_rand.
inline std::vector<double> grid_beam_likelihoods(const OccGrid& g, const Pose2D& s, const LaserScan& scan,
                                                 const SensorSpec& spec, const GridParams& params,
                                                 std::size_t stride = 1) {
  std::vector<double> out;
  for (std::size_t i = 0; i < scan.ranges.size(); i += stride) {
    if (!scan.valid_beam(spec, i)) continue;
    const Point2D end = inverse_measurement(s, scan.beam(spec, i));
    out.push_back(params.p_hit * occupancy_evidence(g.log_odds(g.cell_of(end))) + params.p_rand);
  }
  return out;
}

inline double grid_log_likelihood(const OccGrid& g, const Pose2D& s, const LaserScan& scan, const SensorSpec& spec,
                                  const GridParams& params, std::size_t stride = 1) {
  double acc = 0.0;
  for (double l : grid_beam_likelihoods(g, s, scan, spec, params, stride)) acc += std::log(l);
  return acc;
}

inline double grid_likelihood(const OccGrid& g, const Pose2D& s, const LaserScan& scan, const SensorSpec& spec,
                              const GridParams& params, std::size_t stride = 1) {
  return std::exp(grid_log_likelihood(g, s, scan, spec, params, stride));
}

// Occupancy evidence per cell, in the same portable layout as the point-density grid.
inline DensityGrid export_grid(const OccGrid& g) {
  DensityGrid d;
  d.rows = g.rows();
  d.cols = g.cols();
  d.x0 = g.origin().x;
  d.y0 = g.origin().y;
  d.resolution = g.resolution();
  d.cells.resize(g.cell_count());
  for (std::size_t i = 0; i < g.cell_count(); ++i) d.cells[i] = occupancy_evidence(g.log_odds(i));
  return d;
}

/// Occupancy-grid map model: score the scan against the grid, then integrate it.
class GridModel {
 public:
  using State = OccGrid;

  GridModel(SensorSpec sensor, GridParams params) : sensor_(std::move(sensor)), params_(params) {
    sensor_.validate();
    params_.validate();
  }

  const GridParams& params() const { return params_; }

  State initial_state() const { return OccGrid::covering(params_.extent, params_.resolution); }

  std::vector<double> incorporate(State& grid, const Pose2D& pose, const LaserScan& scan, Rng&) const {
    std::vector<double> marginals = grid_beam_likelihoods(grid, pose, scan, sensor_, params_, params_.beam_stride);
    grid_integrate(grid, pose, scan, sensor_, params_, params_.beam_stride);
    return marginals;
  }

 private:
  SensorSpec sensor_;
  GridParams params_;
};

static_assert(MapModel<GridModel>);

}  // namespace gslam
