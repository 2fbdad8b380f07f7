#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gslam/dataset_io.hpp"
#include "gslam/gslam_model.hpp"
#include "gslam/metrics.hpp"
#include "gslam/occupancy_grid.hpp"
#include "gslam/particle_filter.hpp"
#include "gslam/sim_world.hpp"

namespace gslam {

/// A scan together with the control in force since the previous step.
struct FilterInput {
  double t = 0.0;
  double dt = 0.0;
  Control control;
  LaserScan scan;
};

struct RunInputs {
  double t0 = 0.0;
  std::vector<FilterInput> steps;
  std::vector<GpsFix> gps;
};

/// Pairs every scan with the latest control seen before it. Scans that do
/// not advance time past the previous step are dropped.
inline RunInputs split_log(const std::vector<LogRecord>& records) {
  RunInputs in;
  if (records.empty()) return in;
  in.t0 = records.front().t;
  double last = in.t0;
  Control current;
  for (const LogRecord& r : records) {
    if (const auto* c = std::get_if<ControlRecord>(&r.payload)) {
      current = c->control;
    } else if (const auto* s = std::get_if<ScanRecord>(&r.payload)) {
      if (r.t <= last) continue;
      in.steps.push_back({r.t, r.t - last, current, LaserScan{r.t, s->ranges}});
      last = r.t;
    } else {
      in.gps.push_back({r.t, std::get<GpsRecord>(r.payload).position});
    }
  }
  return in;
}

inline ControlSchedule schedule_for(const RunConfig& cfg) {
  return default_schedule(cfg.vehicle, cfg.sim.steps, cfg.sim.dt, cfg.sim.speed);
}

inline Pose2D start_pose(const RunConfig& cfg) {
  if (cfg.initial_pose) return *cfg.initial_pose;
  return default_schedule(cfg.vehicle, 1, cfg.sim.dt, cfg.sim.speed).start;
}

inline GroundTruthLog simulate_run(const RunConfig& cfg) {
  const World world = make_world(cfg.sim.world);
  const ControlSchedule sched = schedule_for(cfg);
  const SimNoise noise{{scaled(cfg.control_noise().cov, cfg.sim.noise_scale)}, scaled(cfg.sensor_noise(), cfg.sim.noise_scale)};
  return simulate(world, sched, cfg.vehicle, cfg.sensor_spec(), noise, cfg.sim.seed, cfg.sim.gps_period);
}

inline std::vector<Pose2D> dead_reckoning(const RunInputs& in, const VehicleParams& vp, const Pose2D& start) {
  std::vector<Pose2D> out{start};
  for (const FilterInput& s : in.steps) out.push_back(propagate(out.back(), s.control, s.dt, vp));
  return out;
}

inline std::vector<double> step_times(const RunInputs& in) {
  std::vector<double> t{in.t0};
  for (const FilterInput& s : in.steps) t.push_back(s.t);
  return t;
}

template <class State>
struct RunOutput {
  std::vector<double> times;
  std::vector<Pose2D> trajectory;
  std::vector<double> step_ms;
  std::vector<double> ess;
  std::size_t resamples = 0;
  State best_map;
};

template <MapModel Model>
using StepObserver = std::function<void(const ParticleFilter<Model>&, const StepReport&, std::size_t)>;

/// Drives a particle filter over the log. Throws DivergenceError on collapse.
template <MapModel Model>
RunOutput<typename Model::State> run_filter(const RunInputs& in, Model model, const RunConfig& cfg,
                                            const StepObserver<Model>& observe = {}) {
  ParticleFilter<Model> pf(std::move(model), cfg.motion(), cfg.filter, start_pose(cfg));
  RunOutput<typename Model::State> out;
  out.times = step_times(in);
  out.step_ms.reserve(in.steps.size());
  for (std::size_t k = 0; k < in.steps.size(); ++k) {
    const FilterInput& s = in.steps[k];
    const auto t0 = std::chrono::steady_clock::now();
    const StepReport& report = pf.step(s.control, s.dt, s.scan);
    const auto t1 = std::chrono::steady_clock::now();
    out.step_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    out.ess.push_back(report.ess);
    if (observe) observe(pf, report, k);
  }
  out.trajectory = cfg.estimate == EstimateKind::mean ? pf.mean_trajectory() : pf.best_trajectory();
  out.resamples = pf.resamples();
  out.best_map = pf.best_particle().map;
  return out;
}

inline RunOutput<ScatterMap> run_gslam(const RunInputs& in, const RunConfig& cfg,
                                       const StepObserver<GSlamModel>& observe = {}) {
  return run_filter(in, GSlamModel(cfg.gslam_params()), cfg, observe);
}

inline RunOutput<OccGrid> run_grid(const RunInputs& in, const RunConfig& cfg,
                                   const StepObserver<GridModel>& observe = {}) {
  return run_filter(in, GridModel(cfg.sensor_spec(), cfg.grid_params()), cfg, observe);
}

struct BenchCase {
  std::string method;  // "gslam" or "grid"
  std::size_t particles = 8;
  std::size_t gen_points = 10;
};

/// Runs one configuration over each log (e.g. one per seed) and averages
/// error, timing and map sharpness. Grid runs report grid_sharpness in the
/// concentration column.
inline BenchRow bench_case(const std::vector<RunInputs>& logs, const World& world, RunConfig cfg, const BenchCase& c) {
  BenchRow row;
  row.method = c.method;
  row.particles = c.particles;
  row.gen_points = c.gen_points;
  cfg.filter.particles = c.particles;
  cfg.filter.gen_points = c.gen_points;
  const std::uint64_t base_seed = cfg.filter.seed;
  try {
    for (std::size_t i = 0; i < logs.size(); ++i) {
      cfg.filter.seed = base_seed + i;
      double conc = 0.0;
      std::vector<double> ms;
      std::vector<Pose2D> traj;
      if (c.method == "gslam") {
        auto out = run_gslam(logs[i], cfg);
        conc = map_concentration(out.best_map, world, cfg.metrics.radius);
        row.map_size += static_cast<double>(out.best_map.size()) / static_cast<double>(logs.size());
        ms = std::move(out.step_ms);
        traj = std::move(out.trajectory);
      } else if (c.method == "grid") {
        auto out = run_grid(logs[i], cfg);
        conc = grid_sharpness(out.best_map, world, cfg.metrics.radius);
        row.map_size += static_cast<double>(out.best_map.cell_count()) / static_cast<double>(logs.size());
        ms = std::move(out.step_ms);
        traj = std::move(out.trajectory);
      } else {
        throw InvalidArgument("unknown method '" + c.method + "'");
      }
      const auto times = step_times(logs[i]);
      const ErrorStats err = position_error(times, traj, logs[i].gps);
      const double n = static_cast<double>(logs.size());
      row.mean_err_m += err.mean / n;
      row.rmse_m += err.rmse / n;
      row.concentration += conc / n;
      row.mean_step_ms += (ms.size() >= 10 ? step_timing(ms).mean_ms : 0.0) / n;
    }
  } catch (const std::exception& e) {
    row.status = e.what();
  }
  return row;
}

}  // namespace gslam
