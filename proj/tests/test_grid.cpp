#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "gslam/occupancy_grid.hpp"
#include "gslam/particle_filter.hpp"

using namespace gslam;

namespace {

SensorSpec one_beam(double max_range = 80.0) {
  SensorSpec s;
  s.beam_count = 1;
  s.fov = 0.1;
  s.max_range = max_range;
  return s;
}

// Cells whose open square the segment crosses with positive length.
std::set<std::pair<std::int64_t, std::int64_t>> supercover(const Point2D& a, const Point2D& b, double res) {
  std::set<std::pair<std::int64_t, std::int64_t>> out;
  const auto lo_x = static_cast<std::int64_t>(std::floor(std::min(a.x, b.x) / res)) - 1;
  const auto hi_x = static_cast<std::int64_t>(std::floor(std::max(a.x, b.x) / res)) + 1;
  const auto lo_y = static_cast<std::int64_t>(std::floor(std::min(a.y, b.y) / res)) - 1;
  const auto hi_y = static_cast<std::int64_t>(std::floor(std::max(a.y, b.y) / res)) + 1;
  for (std::int64_t ix = lo_x; ix <= hi_x; ++ix)
    for (std::int64_t iy = lo_y; iy <= hi_y; ++iy) {
      double t0 = 0.0, t1 = 1.0;
      const auto clip = [&](double p0, double d, double lo, double hi) {
        if (d == 0.0) {
          if (p0 <= lo || p0 >= hi) t1 = -1.0;
          return;
        }
        double u0 = (lo - p0) / d, u1 = (hi - p0) / d;
        if (u0 > u1) std::swap(u0, u1);
        t0 = std::max(t0, u0);
        t1 = std::min(t1, u1);
      };
      clip(a.x, b.x - a.x, ix * res, (ix + 1) * res);
      clip(a.y, b.y - a.y, iy * res, (iy + 1) * res);
      if (t1 - t0 > 1e-9) out.insert({ix, iy});
    }
  return out;
}

}  // namespace

TEST(GridIntegrate, AxisAlignedBeam) {
  OccGrid g = OccGrid::covering({0, 0, 5, 1}, 1.0);
  GridParams p;
  grid_integrate(g, Pose2D(0.5, 0.5, 0), LaserScan{0, {2.0}}, one_beam(), p);
  EXPECT_EQ(g.log_odds(Cell{0, 0}), p.l_free);
  EXPECT_EQ(g.log_odds(Cell{1, 0}), p.l_free);
  EXPECT_EQ(g.log_odds(Cell{2, 0}), p.l_occ);
  EXPECT_EQ(g.log_odds(Cell{3, 0}), 0.0);
}

TEST(GridIntegrate, SaturatesAtClamp) {
  OccGrid g = OccGrid::covering({0, 0, 5, 1}, 1.0);
  GridParams p;
  p.clamp = 3.0;
  for (int i = 0; i < 50; ++i) grid_integrate(g, Pose2D(0.5, 0.5, 0), LaserScan{0, {2.0}}, one_beam(), p);
  EXPECT_EQ(g.log_odds(Cell{2, 0}), 3.0);
  EXPECT_EQ(g.log_odds(Cell{0, 0}), -3.0);
}

TEST(GridIntegrate, MaxRangeOnlyFrees) {
  OccGrid g = OccGrid::covering({0, 0, 10, 1}, 1.0);
  GridParams p;
  grid_integrate(g, Pose2D(0.5, 0.5, 0), LaserScan{0, {4.0}}, one_beam(4.0), p);
  for (int i = 0; i <= 4; ++i) EXPECT_EQ(g.log_odds(Cell{i, 0}), p.l_free) << i;
}

TEST(GridIntegrate, UntouchedCellsUnchanged) {
  OccGrid g = OccGrid::covering({0, 0, 20, 20}, 0.5);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t i = 0; i < g.cell_count(); ++i) g.add(g.cell(i), u(rng), 10.0);
  const OccGrid before = g;
  SensorSpec spec;
  spec.beam_count = 9;
  spec.fov = 1.0;
  GridParams p;
  grid_integrate(g, Pose2D(3, 3, 0.4), LaserScan{0, std::vector<double>(9, 6.0)}, spec, p);
  std::set<std::size_t> touched;
  for (std::size_t b = 0; b < 9; ++b) {
    const Point2D end = inverse_measurement(Pose2D(3, 3, 0.4), {6.0, spec.bearing(b)});
    for (const Cell& c : traverse_cells({3, 3}, end, g.origin(), g.resolution()))
      touched.insert(static_cast<std::size_t>(c.iy) * g.cols() + static_cast<std::size_t>(c.ix));
  }
  for (std::size_t i = 0; i < g.cell_count(); ++i)
    if (!touched.count(i)) {
      ASSERT_EQ(g.log_odds(i), before.log_odds(i));
    }
}

TEST(TraverseCells, MatchesSupercover) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const double res = rep % 2 ? 1.0 : 0.3;
    const Point2D a{u(rng), u(rng)}, b{u(rng), u(rng)};
    const auto cells = traverse_cells(a, b, {0, 0}, res);
    std::set<std::pair<std::int64_t, std::int64_t>> got;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      got.insert({cells[i].ix, cells[i].iy});
      if (i) {
        ASSERT_EQ(std::abs(cells[i].ix - cells[i - 1].ix) + std::abs(cells[i].iy - cells[i - 1].iy), 1);
      }
    }
    ASSERT_EQ(got.size(), cells.size());
    ASSERT_EQ(got, supercover(a, b, res)) << rep;
  }
}

TEST(GridLikelihood, UnexploredGridGivesFloor) {
  const OccGrid g = OccGrid::covering({0, 0, 10, 10}, 0.5);
  SensorSpec spec;
  spec.beam_count = 5;
  GridParams p;
  const LaserScan scan{0, {3, 3, 3, 3, 3}};
  EXPECT_NEAR(grid_likelihood(g, Pose2D(5, 5, 0), scan, spec, p), std::pow(p.p_rand, 5), 1e-12 * std::pow(p.p_rand, 5));
}

TEST(GridLikelihood, OccupiedBeatsFree) {
  OccGrid occ = OccGrid::covering({0, 0, 5, 1}, 1.0);
  OccGrid fre = occ;
  GridParams p;
  occ.add({2, 0}, 100.0, p.clamp);
  fre.add({2, 0}, -100.0, p.clamp);
  const LaserScan scan{0, {2.0}};
  EXPECT_GT(grid_likelihood(occ, Pose2D(0.5, 0.5, 0), scan, one_beam(), p),
            grid_likelihood(fre, Pose2D(0.5, 0.5, 0), scan, one_beam(), p));
}

TEST(GridLikelihood, OneKnownCell) {
  OccGrid g = OccGrid::covering({0, 0, 5, 1}, 1.0);
  GridParams p;
  g.add({2, 0}, 2.0, p.clamp);
  const auto l = grid_beam_likelihoods(g, Pose2D(0.5, 0.5, 0), LaserScan{0, {2.0}}, one_beam(), p);
  ASSERT_EQ(l.size(), 1u);
  EXPECT_NEAR(l[0], 0.7854347403601883, 1e-15);
}

TEST(GridModel, KnownCellCountNeverShrinks) {
  GridParams p;
  p.extent = {-10, -10, 10, 10};
  p.resolution = 0.25;
  SensorSpec spec;
  spec.beam_count = 31;
  const GridModel model(spec, p);
  OccGrid g = model.initial_state();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> r(1.0, 9.0), xy(-3, 3), ang(-kPi, kPi);
  std::size_t prev = 0;
  Rng unused(0);
  for (int k = 0; k < 100; ++k) {
    LaserScan scan{0, std::vector<double>(31)};
    for (double& v : scan.ranges) v = r(rng);
    model.incorporate(g, Pose2D(xy(rng), xy(rng), ang(rng)), scan, unused);
    std::size_t known = 0;
    for (std::size_t i = 0; i < g.cell_count(); ++i) known += g.log_odds(i) != 0.0;
    ASSERT_GE(known, prev);
    prev = known;
  }
}

TEST(GridModel, DropsIntoTheFilterUnchanged) {
  GridParams p;
  p.extent = {-10, -10, 10, 10};
  SensorSpec spec;
  spec.beam_count = 11;
  FilterConfig cfg;
  cfg.particles = 4;
  ParticleFilter<GridModel> pf(GridModel(spec, p), MotionSetup{VehicleParams{}, ControlNoise::from_std(0.1, 0.01)}, cfg, Pose2D());
  for (int k = 0; k < 5; ++k) pf.step({1.0, 0.0}, 0.2, LaserScan{0, std::vector<double>(11, 5.0)});
  EXPECT_EQ(pf.best_trajectory().size(), 6u);
}
