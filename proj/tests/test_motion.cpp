#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gslam/motion_model.hpp"

using namespace gslam;

namespace {
const VehicleParams kCar{2.75, 0.74, 3.25, 0.5};
}

TEST(EffectiveVelocity, Examples) {
  EXPECT_DOUBLE_EQ(effective_velocity({1.0, 0.0}, kCar), 1.0);
  EXPECT_DOUBLE_EQ(effective_velocity({1.0, 0.0}, VehicleParams{1.3, 9.0, 0, 0}), 1.0);
  EXPECT_NEAR(effective_velocity({2.0, 0.3}, kCar), 2.1815950386521754, 1e-14);
  EXPECT_EQ(effective_velocity({0.0, 0.4}, kCar), 0.0);
}

TEST(EffectiveVelocity, Singularity) {
  const double omega = std::atan(kCar.L / kCar.H);
  EXPECT_THROW(effective_velocity({1.0, omega}, kCar), SingularityError);
  EXPECT_THROW(effective_velocity({1.0, 1.6}, kCar), InvalidArgument);
}

TEST(EffectiveVelocity, MonotoneInWheelSpeed) {
  for (double omega : {-0.5, -0.1, 0.0, 0.2, 0.6}) {
    double prev = -1e300;
    for (double v = -5.0; v <= 5.0; v += 0.25) {
      const double vc = effective_velocity({v, omega}, kCar);
      ASSERT_GT(vc, prev);
      prev = vc;
    }
  }
}

TEST(Propagate, StraightLine) {
  const Pose2D p = propagate(Pose2D(0, 0, 0), {1.0, 0.0}, 0.1, kCar);
  EXPECT_NEAR(p.x(), 0.1, 1e-15);
  EXPECT_EQ(p.y(), 0.0);
  EXPECT_EQ(p.phi(), 0.0);
}

TEST(Propagate, TurningStep) {
  const Pose2D p = propagate(Pose2D(0, 0, 0), {1.0, 0.2}, 0.1, kCar);
  EXPECT_NEAR(p.x(), 0.10187117346373563, 1e-14);
  EXPECT_NEAR(p.y(), 0.025338807321419687, 1e-14);
  EXPECT_NEAR(p.phi(), 0.007796556098898366, 1e-14);
}

TEST(Propagate, ZeroStepIsIdentity) {
  const Pose2D s(1, 2, 0.3);
  EXPECT_EQ(propagate(s, {3.0, 0.4}, 0.0, kCar), s);
  EXPECT_THROW(propagate(s, {3.0, 0.4}, -0.1, kCar), InvalidArgument);
}

TEST(Propagate, StraightMotionKeepsHeadingAndLength) {
  for (double phi : {-2.0, 0.0, 0.7, 3.0}) {
    const Pose2D s(4, -1, phi);
    const Pose2D p = propagate(s, {1.7, 0.0}, 0.3, kCar);
    EXPECT_EQ(p.phi(), s.phi());
    EXPECT_NEAR(distance(p.position(), s.position()), 1.7 * 0.3, 1e-12);
    const Pose2D twice = propagate(propagate(s, {1.7, 0.0}, 0.3, kCar), {1.7, 0.0}, 0.3, kCar);
    const Pose2D once = propagate(s, {1.7, 0.0}, 0.6, kCar);
    EXPECT_NEAR(twice.x(), once.x(), 1e-12);
    EXPECT_NEAR(twice.y(), once.y(), 1e-12);
  }
}

TEST(Propagate, EulerStepsDoNotComposeWhileTurning) {
  const Pose2D s(0, 0, 0);
  const Pose2D twice = propagate(propagate(s, {2.0, 0.3}, 0.5, kCar), {2.0, 0.3}, 0.5, kCar);
  const Pose2D once = propagate(s, {2.0, 0.3}, 1.0, kCar);
  EXPECT_GT(distance(twice.position(), once.position()), 1e-3);
}

TEST(SampleControl, ZeroCovarianceIsExact) {
  Rng rng(1);
  const Control c{1.5, 0.2};
  EXPECT_EQ(sample_control(c, ControlNoise{Cov2()}, rng), c);
}

TEST(SampleControl, Deterministic) {
  const ControlNoise n = ControlNoise::from_std(0.1, 0.01);
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(sample_control({1, 0}, n, a), sample_control({1, 0}, n, b));
}

TEST(SampleControl, Moments) {
  const ControlNoise n = ControlNoise::from_std(0.5, 0.01);
  Rng rng(3);
  const int count = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < count; ++i) {
    const double v = sample_control({2.0, 0.0}, n, rng).v_e;
    s += v;
    s2 += v * v;
  }
  const double mean = s / count;
  const double sd = std::sqrt(s2 / count - mean * mean);
  EXPECT_NEAR(mean, 2.0, 3.0 * 0.5 / std::sqrt(static_cast<double>(count)));
  EXPECT_NEAR(sd, 0.5, 0.05 * 0.5);
}
