#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gslam/geometry.hpp"

using namespace gslam;

TEST(NormalizeAngle, Examples) {
  EXPECT_EQ(normalize_angle(0.0), 0.0);
  EXPECT_DOUBLE_EQ(normalize_angle(3.0 * kPi), kPi);
  EXPECT_NEAR(normalize_angle(-3.5 * kPi), 1.5707963267948966, 1e-12);
  EXPECT_DOUBLE_EQ(normalize_angle(-kPi), kPi);
  EXPECT_THROW(normalize_angle(std::nan("")), InvalidArgument);
}

TEST(NormalizeAngle, IdempotentAndPeriodic) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = u(rng);
    const double n = normalize_angle(a);
    ASSERT_GT(n, -kPi);
    ASSERT_LE(n, kPi);
    ASSERT_EQ(normalize_angle(n), n);
    ASSERT_NEAR(std::cos(normalize_angle(a + kTwoPi) - n), 1.0, 1e-12);
  }
}

TEST(Transforms, Examples) {
  const Point2D a = to_world_frame(Pose2D(0, 0, 0), {1, 0});
  EXPECT_DOUBLE_EQ(a.x, 1.0);
  EXPECT_DOUBLE_EQ(a.y, 0.0);
  const Point2D b = to_world_frame(Pose2D(0, 0, kPi / 2), {1, 0});
  EXPECT_NEAR(b.x, 0.0, 1e-15);
  EXPECT_NEAR(b.y, 1.0, 1e-15);
  const Point2D c = to_world_frame(Pose2D(2, 3, kPi / 4), {1, 1});
  EXPECT_NEAR(c.x, 2.0, 1e-15);
  EXPECT_NEAR(c.y, 4.414213562373095, 1e-14);

  const Point2D d = to_robot_frame(Pose2D(0, 0, kPi / 2), {0, 1});
  EXPECT_NEAR(d.x, 1.0, 1e-15);
  EXPECT_NEAR(d.y, 0.0, 1e-15);
  const Point2D e = to_robot_frame(Pose2D(2, 3, kPi / 4), {2.0, 3.0 + std::sqrt(2.0)});
  EXPECT_NEAR(e.x, 1.0, 1e-14);
  EXPECT_NEAR(e.y, 1.0, 1e-14);
}

TEST(Transforms, RoundTripAndIsometry) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> c(-1e4, 1e4);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 10000; ++i) {
    const Pose2D p(c(rng), c(rng), ang(rng));
    const Point2D q{c(rng), c(rng)};
    const Point2D r{c(rng), c(rng)};
    const Point2D back = to_robot_frame(p, to_world_frame(p, q));
    // doubles near 1e4 m are spaced 1.8e-12 m apart
    ASSERT_NEAR(back.x, q.x, 1e-11);
    ASSERT_NEAR(back.y, q.y, 1e-11);
    const Point2D fwd = to_world_frame(p, to_robot_frame(p, q));
    ASSERT_NEAR(fwd.x, q.x, 1e-11);
    ASSERT_NEAR(fwd.y, q.y, 1e-11);
    const double d0 = distance(q, r);
    ASSERT_NEAR(distance(to_world_frame(p, q), to_world_frame(p, r)), d0, 1e-11);
    ASSERT_NEAR(distance(to_robot_frame(p, q), to_robot_frame(p, r)), d0, 1e-11);
  }
}

TEST(Transforms, RoundTripKilometreScale) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> c(-1e3, 1e3);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 10000; ++i) {
    const Pose2D p(c(rng), c(rng), ang(rng));
    const Point2D q{c(rng), c(rng)};
    const Point2D back = to_robot_frame(p, to_world_frame(p, q));
    ASSERT_NEAR(back.x, q.x, 1e-12);
    ASSERT_NEAR(back.y, q.y, 1e-12);
  }
}

TEST(Pose2D, HeadingNormalizedOnConstruction) {
  EXPECT_EQ(Pose2D(1, 2, 3 * kPi), Pose2D(1, 2, kPi));
  EXPECT_THROW(Pose2D(std::nan(""), 0, 0), InvalidArgument);
}

TEST(Rect, Basics) {
  const Rect r{0, 0, 2, 3};
  EXPECT_DOUBLE_EQ(r.area(), 6.0);
  EXPECT_TRUE(r.contains({2, 3}));
  EXPECT_FALSE(r.contains({2.1, 0}));
  EXPECT_TRUE((Rect{1, 1, 1, 2}).empty());
}
