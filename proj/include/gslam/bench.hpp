#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <thread>
#include <vector>

#include "gslam/run.hpp"

namespace gslam {

struct BenchPlan {
  std::vector<std::size_t> particles{2, 8, 30};
  std::vector<std::size_t> gen_points{10};
  bool grid_baseline = false;  // one grid row per N at the matched cell budget
  std::size_t jobs = 1;
};

/// Cell size giving roughly `budget` cells over `extent`.
inline double matched_resolution(const Rect& extent, double budget) {
  if (!(budget >= 1.0)) throw InvalidArgument("matched_resolution: budget must be >= 1");
  return std::sqrt(extent.area() / budget);
}

namespace detail {

template <class Fn>
void run_indexed(std::size_t count, std::size_t jobs, Fn&& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
}

}  // namespace detail

/// Cross-product of particles x gen_points for G-SLAM, N-major.
inline std::vector<BenchRow> bench_gslam_rows(const std::vector<RunInputs>& logs, const World& world, const RunConfig& cfg,
                                              const BenchPlan& plan) {
  if (logs.empty()) throw InvalidArgument("run_bench: no logs");
  std::vector<BenchCase> cases;
  for (std::size_t n : plan.particles)
    for (std::size_t m : plan.gen_points) cases.push_back({"gslam", n, m});
  std::vector<BenchRow> rows(cases.size());
  detail::run_indexed(cases.size(), plan.jobs, [&](std::size_t i) { rows[i] = bench_case(logs, world, cfg, cases[i]); });
  return rows;
}

/// One grid row per N, sized to the final point count of that N's G-SLAM row
/// with the largest M.
inline std::vector<BenchRow> bench_grid_rows(const std::vector<RunInputs>& logs, const World& world, const RunConfig& cfg,
                                             const BenchPlan& plan, const std::vector<BenchRow>& gslam_rows) {
  if (plan.gen_points.empty()) return {};
  const std::size_t m_max = *std::max_element(plan.gen_points.begin(), plan.gen_points.end());
  std::vector<BenchRow> grid(plan.particles.size());
  detail::run_indexed(plan.particles.size(), plan.jobs, [&](std::size_t i) {
    const std::size_t n = plan.particles[i];
    const auto ref = std::find_if(gslam_rows.begin(), gslam_rows.end(), [&](const BenchRow& r) {
      return r.method == "gslam" && r.particles == n && r.gen_points == m_max;
    });
    if (ref == gslam_rows.end() || ref->status != "ok" || !(ref->map_size >= 1.0)) {
      grid[i] = {.method = "grid", .particles = n, .gen_points = m_max, .status = "no matched budget"};
      return;
    }
    RunConfig gc = cfg;
    gc.grid.resolution = matched_resolution(gc.grid.extent, ref->map_size);
    grid[i] = bench_case(logs, world, gc, {"grid", n, m_max});
  });
  return grid;
}

/// G-SLAM rows, then grid rows when grid_baseline is set. Failures stay in
/// their row. Step times are only comparable with jobs == 1.
inline std::vector<BenchRow> run_bench(const std::vector<RunInputs>& logs, const World& world, const RunConfig& cfg,
                                       const BenchPlan& plan) {
  std::vector<BenchRow> rows = bench_gslam_rows(logs, world, cfg, plan);
  if (!plan.grid_baseline) return rows;
  const std::vector<BenchRow> grid = bench_grid_rows(logs, world, cfg, plan, rows);
  rows.insert(rows.end(), grid.begin(), grid.end());
  return rows;
}

}  // namespace gslam
