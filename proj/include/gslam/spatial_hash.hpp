#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "gslam/error.hpp"
#include "gslam/geometry.hpp"

namespace gslam {

/// Uniform hash grid over point indices. Cells are keyed by packed 32-bit
/// integer coordinates; indices inside a cell keep insertion order.
class SpatialHash {
 public:
  explicit SpatialHash(double cell_size = 1.0) : cell_size_(cell_size), inv_cell_(1.0 / cell_size) {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw InvalidArgument("SpatialHash: cell size must be > 0");
  }

  double cell_size() const { return cell_size_; }

  void insert(const Point2D& p, std::uint32_t index) { cells_[key(cell_x(p.x), cell_y(p.y))].push_back(index); }

  void clear() { cells_.clear(); }

  /// Visits the cells at Chebyshev distance `ring` from the cell holding `c`.
  /// Every point outside rings 0..ring lies farther than ring * cell_size from c.
  template <class Visitor>
  void visit_ring(const Point2D& c, std::int64_t ring, Visitor&& visit) const {
    const std::int64_t cx = cell_x(c.x);
    const std::int64_t cy = cell_y(c.y);
    const auto cell = [&](std::int64_t x, std::int64_t y) {
      const auto it = cells_.find(key(x, y));
      if (it != cells_.end())
        for (std::uint32_t i : it->second) visit(i);
    };
    if (ring == 0) {
      cell(cx, cy);
      return;
    }
    for (std::int64_t x = cx - ring; x <= cx + ring; ++x) {
      cell(x, cy - ring);
      cell(x, cy + ring);
    }
    for (std::int64_t y = cy - ring + 1; y <= cy + ring - 1; ++y) {
      cell(cx - ring, y);
      cell(cx + ring, y);
    }
  }

  template <class Visitor>
  void visit_box(double x_min, double y_min, double x_max, double y_max, Visitor&& visit) const {
    const std::int64_t cx0 = cell_x(x_min);
    const std::int64_t cx1 = cell_x(x_max);
    const std::int64_t cy0 = cell_y(y_min);
    const std::int64_t cy1 = cell_y(y_max);
    // Very large boxes touch more cells than exist; fall back to scanning the table.
    if (static_cast<double>(cx1 - cx0 + 1) * static_cast<double>(cy1 - cy0 + 1) > 4.0 * static_cast<double>(cells_.size())) {
      for (const auto& [k, indices] : cells_) {
        const auto [kx, ky] = unkey(k);
        if (kx < cx0 || kx > cx1 || ky < cy0 || ky > cy1) continue;
        for (std::uint32_t i : indices) visit(i);
      }
      return;
    }
    for (std::int64_t cy = cy0; cy <= cy1; ++cy) {
      for (std::int64_t cx = cx0; cx <= cx1; ++cx) {
        const auto it = cells_.find(key(cx, cy));
        if (it == cells_.end()) continue;
        for (std::uint32_t i : it->second) visit(i);
      }
    }
  }

 private:
  static constexpr std::int64_t kLimit = (std::int64_t{1} << 30);

  std::int64_t clamp_cell(double c) const {
    if (c < -static_cast<double>(kLimit)) return -kLimit;
    if (c > static_cast<double>(kLimit)) return kLimit;
    return static_cast<std::int64_t>(std::floor(c));
  }
  std::int64_t cell_x(double x) const { return clamp_cell(x * inv_cell_); }
  std::int64_t cell_y(double y) const { return clamp_cell(y * inv_cell_); }

  static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(cy));
  }
  static std::pair<std::int64_t, std::int64_t> unkey(std::uint64_t k) {
    return {static_cast<std::int32_t>(k >> 32), static_cast<std::int32_t>(k & 0xffffffffu)};
  }

  double cell_size_;
  double inv_cell_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

}  // namespace gslam
