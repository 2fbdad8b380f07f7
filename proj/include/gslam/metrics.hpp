#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gslam/error.hpp"
#include "gslam/geometry.hpp"
#include "gslam/occupancy_grid.hpp"
#include "gslam/scatter_map.hpp"
#include "gslam/sim_world.hpp"
#include "gslam/text_format.hpp"

namespace gslam {

struct ErrorStats {
  double mean = 0.0;
  double rmse = 0.0;
  std::size_t samples = 0;
};

/// Euclidean position error of `estimate` (stamped by `times`) against GPS
/// fixes interpolated linearly to each estimate stamp. Stamps outside the
/// GPS time span are skipped.
inline ErrorStats position_error(std::span<const double> times, std::span<const Pose2D> estimate,
                                 std::span<const GpsFix> truth) {
  if (times.size() != estimate.size()) throw InvalidArgument("position_error: times and poses differ in length");
  ErrorStats out;
  if (truth.empty()) throw InvalidArgument("position_error: no overlap between estimate and truth");
  double sum = 0.0;
  double sum2 = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (t < truth.front().t || t > truth.back().t) continue;
    while (j + 1 < truth.size() && truth[j + 1].t < t) ++j;
    Point2D p = truth[j].position;
    if (j + 1 < truth.size() && truth[j + 1].t > truth[j].t && t > truth[j].t) {
      const double a = (t - truth[j].t) / (truth[j + 1].t - truth[j].t);
      p = {truth[j].position.x + a * (truth[j + 1].position.x - truth[j].position.x),
           truth[j].position.y + a * (truth[j + 1].position.y - truth[j].position.y)};
    }
    const double e = distance(estimate[i].position(), p);
    sum += e;
    sum2 += e * e;
    ++out.samples;
  }
  if (out.samples == 0) throw InvalidArgument("position_error: no overlap between estimate and truth");
  out.mean = sum / static_cast<double>(out.samples);
  out.rmse = std::sqrt(sum2 / static_cast<double>(out.samples));
  return out;
}

/// Probability-mass fraction of the map lying within `radius` of an obstacle.
inline double map_concentration(std::span<const MapPoint> points, const World& w, double radius) {
  if (w.empty()) throw InvalidArgument("map_concentration: world has no obstacles");
  double near = 0.0;
  double total = 0.0;
  for (const MapPoint& p : points) {
    total += p.prob;
    if (distance_to_obstacles(w, p.location) <= radius) near += p.prob;
  }
  return total > 0.0 ? near / total : 0.0;
}

inline double map_concentration(const ScatterMap& m, const World& w, double radius) {
  const auto pts = m.points();
  return map_concentration(pts, w, radius);
}

// Mass fraction farther than `margin` from every obstacle.
inline double free_space_mass(std::span<const MapPoint> points, const World& w, double margin) {
  double far = 0.0;
  double total = 0.0;
  for (const MapPoint& p : points) {
    total += p.prob;
    if (distance_to_obstacles(w, p.location) > margin) far += p.prob;
  }
  return total > 0.0 ? far / total : 0.0;
}

/// Occupancy-evidence mass of a grid whose cell centres lie within `radius`
/// of an obstacle, as a fraction of all evidence mass.
inline double grid_sharpness(const OccGrid& g, const World& w, double radius) {
  double near = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    const double e = occupancy_evidence(g.log_odds(i));
    if (e <= 0.0) continue;
    total += e;
    if (distance_to_obstacles(w, g.center(g.cell(i))) <= radius) near += e;
  }
  return total > 0.0 ? near / total : 0.0;
}

struct TimingStats {
  double mean_ms = 0.0;
  double p95_ms = 0.0;
};

/// Mean and nearest-rank 95th percentile of per-step wall times, skipping
/// the first `warmup` steps.
inline TimingStats step_timing(std::span<const double> step_ms, std::size_t warmup = 5) {
  if (step_ms.size() < 10) throw InvalidArgument("step_timing: need at least 10 steps");
  std::vector<double> v(step_ms.begin() + static_cast<std::ptrdiff_t>(std::min(warmup, step_ms.size() - 1)), step_ms.end());
  TimingStats out;
  for (double x : v) out.mean_ms += x;
  out.mean_ms /= static_cast<double>(v.size());
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size())));
  out.p95_ms = v[std::max<std::size_t>(rank, 1) - 1];
  return out;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LinearFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw InvalidArgument("fit_line: need two or more paired samples");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  LinearFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 && sxx > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

/// One row of the benchmark report.
struct BenchRow {
  std::string method;
  std::size_t particles = 0;
  std::size_t gen_points = 0;
  double mean_step_ms = 0.0;
  double mean_err_m = 0.0;
  double rmse_m = 0.0;
  double concentration = 0.0;
  double map_size = 0.0;  // mean final point or cell count; not part of the CSV
  std::string status = "ok";
};

inline constexpr const char* kBenchHeader = "method,N,M,mean_step_ms,mean_err_m,rmse_m,concentration";

inline std::string format_bench_row(const BenchRow& r) {
  std::string s = r.method + ',' + std::to_string(r.particles) + ',' + std::to_string(r.gen_points) + ',';
  if (r.status != "ok") return s + "nan,nan,nan,nan";
  text::append_double(s, r.mean_step_ms);
  s += ',';
  text::append_double(s, r.mean_err_m);
  s += ',';
  text::append_double(s, r.rmse_m);
  s += ',';
  text::append_double(s, r.concentration);
  return s;
}

}  // namespace gslam
