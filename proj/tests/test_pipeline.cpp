#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "gslam/bench.hpp"
#include "gslam/run.hpp"

using namespace gslam;

namespace {

struct DefaultRun {
  RunConfig cfg;
  GroundTruthLog log;
  RunInputs in;
  RunOutput<ScatterMap> out;
  std::vector<double> near_fraction;  // per step, by point count
  double worst_mass_error = 0.0;
  double worst_weight_error = 0.0;
};

const DefaultRun& default_run() {
  static const DefaultRun run = [] {
    DefaultRun r;
    r.log = simulate_run(r.cfg);
    r.in = split_log(to_log_records(r.log));
    const World w = make_world(r.cfg.sim.world);
    r.out = run_gslam(r.in, r.cfg, [&](const ParticleFilter<GSlamModel>& pf, const StepReport& rep, std::size_t) {
      double wsum = 0.0;
      for (double x : rep.weights) wsum += x;
      r.worst_weight_error = std::max(r.worst_weight_error, std::abs(wsum - 1.0));
      for (const auto& p : pf.particles()) r.worst_mass_error = std::max(r.worst_mass_error, std::abs(p.map.recompute_mass() - 1.0));
      const ScatterMap& m = pf.best_particle().map;
      std::size_t near = 0;
      for (std::size_t i = 0; i < m.size(); ++i) near += distance_to_obstacles(w, m.location(i)) <= 0.5;
      r.near_fraction.push_back(m.empty() ? 0.0 : static_cast<double>(near) / static_cast<double>(m.size()));
    });
    return r;
  }();
  return run;
}

World toy_world() {
  World w;
  w.bounds = {0, 0, 50, 50};
  w.segments.push_back({{2, 2}, {48, 2}});
  w.segments.push_back({{48, 2}, {48, 48}});
  w.circles.push_back({{25, 25}, 3.0});
  return w;
}

}  // namespace

TEST(SplitLog, PairsScansWithLatestControl) {
  const std::vector<LogRecord> recs{
      {0.0, GpsRecord{{0, 0}}},      {0.0, ControlRecord{{1, 0}}},   {0.1, ControlRecord{{2, 0}}},
      {0.25, ScanRecord{{1.0}}},     {0.25, ScanRecord{{2.0}}},      {0.5, ScanRecord{{3.0}}},
      {0.6, ControlRecord{{3, 0.1}}}, {0.75, ScanRecord{{4.0}}},     {1.0, GpsRecord{{1, 1}}}};
  const RunInputs in = split_log(recs);
  EXPECT_EQ(in.t0, 0.0);
  ASSERT_EQ(in.steps.size(), 3u);
  EXPECT_EQ(in.steps[0].control, (Control{2, 0}));
  EXPECT_EQ(in.steps[0].scan.ranges[0], 1.0);
  EXPECT_DOUBLE_EQ(in.steps[0].dt, 0.25);
  EXPECT_EQ(in.steps[1].control, (Control{2, 0}));
  EXPECT_EQ(in.steps[2].control, (Control{3, 0.1}));
  EXPECT_EQ(in.gps.size(), 2u);
}

TEST(Pipeline, DefaultRunBeatsDeadReckoning) {
  const DefaultRun& r = default_run();
  const auto times = step_times(r.in);
  const double slam = position_error(times, r.out.trajectory, r.in.gps).mean;
  const double dr = position_error(times, dead_reckoning(r.in, r.cfg.vehicle, start_pose(r.cfg)), r.in.gps).mean;
  EXPECT_LT(slam, dr);
  EXPECT_EQ(r.out.trajectory.size(), r.cfg.sim.steps + 1);
}

TEST(Pipeline, MapsAndWeightsStayNormalized) {
  const DefaultRun& r = default_run();
  EXPECT_LT(r.worst_mass_error, 1e-9);
  EXPECT_LT(r.worst_weight_error, 1e-9);
}

TEST(Pipeline, PointsGatherNearObstacles) {
  const DefaultRun& r = default_run();
  const std::size_t n = r.near_fraction.size();
  ASSERT_EQ(n, 200u);
  // checkpoints every 25 steps across the second half of the run
  std::size_t violations = 0;
  std::string trace;
  double prev = r.near_fraction[n / 2 - 1];
  for (std::size_t k = n / 2 - 1 + 25; k < n; k += 25) {
    violations += r.near_fraction[k] < prev;
    prev = r.near_fraction[k];
    trace += std::to_string(k) + ":" + std::to_string(prev) + " ";
  }
  EXPECT_LE(violations, 2u) << trace;
  EXPECT_GT(r.near_fraction.back(), 0.9);
}

TEST(Pipeline, ToyWorldBeatsDeadReckoning) {
  RunConfig cfg;
  cfg.filter.gen_points = 4;
  cfg.filter.particles = 8;
  const World w = toy_world();
  const auto sched = schedule_for(cfg);
  const GroundTruthLog log = simulate(w, sched, cfg.vehicle, cfg.sensor_spec(),
                                      SimNoise{cfg.control_noise(), cfg.sensor_noise()}, 3, cfg.sim.gps_period);
  const RunInputs in = split_log(to_log_records(log));
  const auto out = run_gslam(in, cfg);
  const auto times = step_times(in);
  const Point2D end_truth = log.records.back().truth.position();
  const auto dr = dead_reckoning(in, cfg.vehicle, log.start);
  EXPECT_LT(distance(out.trajectory.back().position(), end_truth), distance(dr.back().position(), end_truth));
  EXPECT_LT(position_error(times, out.trajectory, in.gps).mean, position_error(times, dr, in.gps).mean);
}

TEST(Pipeline, ZeroNoiseSingleParticleRecoversTruth) {
  RunConfig cfg;
  cfg.sim.noise_scale = 0.0;
  cfg.control_std_v = 0.0;
  cfg.control_std_omega = 0.0;
  cfg.filter.particles = 1;
  cfg.sim.steps = 60;
  const GroundTruthLog log = simulate_run(cfg);
  const auto out = run_gslam(split_log(to_log_records(log)), cfg);
  ASSERT_EQ(out.trajectory.size(), log.records.size() + 1);
  double worst = distance(out.trajectory[0].position(), log.start.position());
  for (std::size_t k = 0; k < log.records.size(); ++k)
    worst = std::max(worst, distance(out.trajectory[k + 1].position(), log.records[k].truth.position()));
  EXPECT_LT(worst, 1e-9);
}

TEST(Pipeline, NeutralWeightRuleRuns) {
  RunConfig cfg;
  cfg.weight = WeightRule::neutral;
  cfg.sim.steps = 20;
  cfg.filter.particles = 3;
  const auto out = run_gslam(split_log(to_log_records(simulate_run(cfg))), cfg);
  EXPECT_EQ(out.trajectory.size(), 21u);
}

TEST(Pipeline, GridRunProducesTrajectory) {
  RunConfig cfg;
  cfg.sim.steps = 30;
  const auto in = split_log(to_log_records(simulate_run(cfg)));
  const auto out = run_grid(in, cfg);
  EXPECT_EQ(out.trajectory.size(), 31u);
  EXPECT_GT(out.best_map.cell_count(), 0u);
}

TEST(Bench, CrossProductAndBaselineRows) {
  RunConfig cfg;
  cfg.sim.steps = 16;
  const World w = make_world(cfg.sim.world);
  std::vector<RunInputs> logs;
  for (std::uint64_t s : {1, 2}) {
    cfg.sim.seed = s;
    logs.push_back(split_log(to_log_records(simulate_run(cfg))));
  }
  BenchPlan plan;
  plan.particles = {2, 8};
  plan.gen_points = {4, 10};
  plan.grid_baseline = true;
  plan.jobs = 2;
  const auto rows = run_bench(logs, w, cfg, plan);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].particles, 2u);
  EXPECT_EQ(rows[0].gen_points, 4u);
  EXPECT_EQ(rows[3].particles, 8u);
  EXPECT_EQ(rows[3].gen_points, 10u);
  EXPECT_EQ(rows[4].method, "grid");
  for (const auto& r : rows) {
    EXPECT_EQ(r.status, "ok");
    EXPECT_GT(r.map_size, 0.0);
  }
  // matched budget: grid cell count near the G-SLAM point count
  EXPECT_NEAR(rows[5].map_size / rows[3].map_size, 1.0, 0.1);
}

TEST(Bench, FailuresStayInTheirRow) {
  RunConfig cfg;
  cfg.sim.steps = 12;
  const auto logs = std::vector<RunInputs>{split_log(to_log_records(simulate_run(cfg)))};
  const BenchRow bad = bench_case(logs, make_world("default"), cfg, {"bogus", 2, 4});
  EXPECT_NE(bad.status, "ok");
  EXPECT_EQ(format_bench_row(bad), "bogus,2,4,nan,nan,nan,nan");
}
