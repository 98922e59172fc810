#include <gtest/gtest.h>

#include <random>

#include "rapid/ibvs.hpp"

using namespace rapid;

namespace {

const HomogeneousTransform kEe = HomogeneousTransform::translate(0.0, 0.05, 0.4);

SimCamera offset_scenario(const Vec2& offset, double z = 0.4) {
  return SimCamera::scenario(CameraIntrinsics{}, kEe, Vec3(1.0, 0.0, 0.85), z, offset);
}

ServoConfig half_step() {
  ServoConfig cfg;
  cfg.gain = 10.0;
  cfg.period = 0.05;
  return cfg;
}

}  // namespace

TEST(Project, OpticalAxis) { EXPECT_EQ(project(CameraIntrinsics{}, Vec3(0, 0, 1)), Vec2(320, 240)); }

TEST(Project, Formula) { EXPECT_DOUBLE_EQ(project(CameraIntrinsics{}, Vec3(0.1, 0, 1)).x(), 380.0); }

TEST(Project, BehindCamera) {
  try {
    project(CameraIntrinsics{}, Vec3(0, 0, -1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BehindCamera);
  }
  EXPECT_THROW(project(CameraIntrinsics{}, Vec3(0.1, 0.1, 0.0)), Error);
}

TEST(Normalize, PrincipalPointAndUnit) {
  const CameraIntrinsics k;
  EXPECT_EQ(normalize(k, Vec2(k.cx, k.cy)), Vec2::Zero());
  EXPECT_DOUBLE_EQ(normalize(k, Vec2(k.cx + k.fx, k.cy)).x(), 1.0);
}

TEST(Normalize, InvertsProjection) {
  CameraIntrinsics k;
  k.fx = 612.5;
  k.fy = 598.25;
  k.cx = 318.0;
  k.cy = 244.0;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0), z(0.05, 5.0);
  for (int t = 0; t < 1000; ++t) {
    const Vec3 p(u(rng), u(rng), z(rng));
    const Vec2 s = normalize(k, project(k, p));
    EXPECT_LE(std::abs(s.x() - p.x() / p.z()), 1e-12);
    EXPECT_LE(std::abs(s.y() - p.y() / p.z()), 1e-12);
  }
}

TEST(InteractionMatrix, UnitDepthAtCentre) {
  InteractionMatrix expected;
  expected << -1, 0, 0, 0, -1, 0;
  EXPECT_EQ(interaction_matrix(Vec2::Zero(), 1.0), expected);
}

TEST(InteractionMatrix, Entries) {
  const InteractionMatrix l = interaction_matrix(Vec2(0.1, -0.2), 2.0);
  InteractionMatrix expected;
  expected << -0.5, 0, 0.05, 0, -0.5, -0.1;
  EXPECT_LT((l - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(InteractionMatrix, InverseDepthHomogeneity) {
  const Vec2 s(0.3, 0.1);
  EXPECT_LT((interaction_matrix(s, 3.0) - interaction_matrix(s, 1.0) / 3.0).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(InteractionMatrix, InvalidDepth) {
  for (double z : {0.0, -1.0, std::numeric_limits<double>::quiet_NaN()}) {
    try {
      interaction_matrix(Vec2::Zero(), z);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidDepth);
    }
  }
}

TEST(Control, ZeroErrorZeroVelocity) {
  EXPECT_EQ(control(interaction_matrix(Vec2(0.1, 0.2), 0.5), Vec2::Zero(), 1.0).velocity, Vec3::Zero());
}

TEST(Control, CentreCaseByHand) {
  // L = -I on the first two axes, so pinv(L) e = -(e, 0) and v = lambda (e_x, e_y, 0).
  const auto out = control(interaction_matrix(Vec2::Zero(), 1.0), Vec2(0.1, 0.0), 2.0);
  EXPECT_LT((out.velocity - Vec3(0.2, 0, 0)).norm(), 1e-15);
  EXPECT_FALSE(out.rank_deficient);
}

TEST(Control, PseudoInverseIdentityAndLinearity) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5), z(0.1, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const InteractionMatrix l = interaction_matrix(Vec2(u(rng), u(rng)), z(rng));
    const Vec2 e(u(rng), u(rng));
    const double lambda = 0.1 + std::abs(u(rng));
    const Vec3 v = control(l, e, lambda).velocity;
    EXPECT_LT((l * v + lambda * e).norm(), 1e-9);
    // Oracle: minimum-norm solution through Eigen's complete orthogonal decomposition.
    const Vec3 ref = -lambda * l.completeOrthogonalDecomposition().pseudoInverse() * e;
    EXPECT_LT((v - ref).norm(), 1e-9);
    EXPECT_LT((control(l, 2.5 * e, lambda).velocity - 2.5 * v).norm(), 1e-9);
  }
}

TEST(Control, RankDeficientFlagged) {
  const auto out = control(InteractionMatrix::Zero(), Vec2(0.1, 0.1), 1.0);
  EXPECT_TRUE(out.rank_deficient);
  EXPECT_EQ(out.velocity, Vec3::Zero());
}

TEST(DepthEstimate, Examples) {
  EXPECT_EQ(depth_estimate({1.0}), 1.0);
  EXPECT_EQ(depth_estimate({0.9, 1.0, 5.0}), 1.0);
  EXPECT_DOUBLE_EQ(depth_estimate({std::numeric_limits<double>::quiet_NaN(), -1.0, 0.8, 0.9}), 0.85);
}

TEST(DepthEstimate, NoValidSamples) {
  try {
    depth_estimate({0.0, -2.0, std::numeric_limits<double>::infinity()});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoDepth);
  }
}

TEST(ServoLoop, AlreadyAligned) {
  const auto r = servo_loop(offset_scenario(Vec2::Zero()), half_step(), 1);
  EXPECT_TRUE(r.converged());
  EXPECT_EQ(r.iterations, 0);
}

TEST(ServoLoop, ExactDepthContracts) {
  const ServoConfig cfg = half_step();
  const double rate = 1.0 - cfg.gain * cfg.period;
  ASSERT_DOUBLE_EQ(rate, 0.5);
  for (const Vec2& off : {Vec2(0.02, 0.0), Vec2(0.0, -0.02), Vec2(0.014, 0.014)}) {
    const auto r = servo_loop(offset_scenario(off), cfg, 3);
    ASSERT_TRUE(r.converged());
    EXPECT_LE(r.iterations, 30);
    for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
      const double prev = r.trajectory[i - 1].e.norm(), cur = r.trajectory[i].e.norm();
      EXPECT_LT(cur, prev);
      EXPECT_LE(cur, 1.05 * rate * prev);
    }
    EXPECT_EQ(r.sign_flips, 0);
    // Tool ray residual: image error scaled by depth plus the ray slope times the depth change.
    const auto& last = r.trajectory.back();
    const double bound = last.e.norm() * last.z + last.s_star.norm() * std::abs(last.z - 0.4);
    EXPECT_LE(r.lateral_offset().norm(), bound + 1e-9);
  }
}

TEST(ServoLoop, SmallGainStillContracts) {
  ServoConfig cfg;
  cfg.max_iterations = 400;
  const auto r = servo_loop(offset_scenario(Vec2(0.01, 0.005)), cfg, 4);
  ASSERT_TRUE(r.converged());
  for (std::size_t i = 1; i < r.trajectory.size(); ++i)
    EXPECT_LE(r.trajectory[i].e.norm(), 1.05 * (1 - cfg.gain * cfg.period) * r.trajectory[i - 1].e.norm());
}

TEST(ServoLoop, InflatedDepthDoesNotConverge) {
  ServoConfig cfg = half_step();
  cfg.depth_bias = 5.0;
  const auto r = servo_loop(offset_scenario(Vec2(0.02, 0.0)), cfg, 5);
  EXPECT_FALSE(r.converged());
  EXPECT_GT(r.sign_flips, 0);
  EXPECT_GT(r.trajectory.back().e.norm(), r.trajectory.front().e.norm());
}

TEST(ServoLoop, DepthNoiseSeededDeterminism) {
  ServoConfig cfg = half_step();
  cfg.depth_noise_sigma = 0.01;
  cfg.invalid_depth_fraction = 0.2;
  const auto a = servo_loop(offset_scenario(Vec2(0.02, 0.01)), cfg, 6);
  const auto b = servo_loop(offset_scenario(Vec2(0.02, 0.01)), cfg, 6);
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) EXPECT_EQ(a.trajectory[i].z, b.trajectory[i].z);
  EXPECT_TRUE(a.converged());
}

TEST(ServoLoop, MaxIterationsZero) {
  ServoConfig cfg = half_step();
  cfg.max_iterations = 0;
  const auto r = servo_loop(offset_scenario(Vec2(0.02, 0.0)), cfg, 7);
  EXPECT_EQ(r.outcome, ServoOutcome::MaxIterations);
  EXPECT_EQ(r.iterations, 0);
}

TEST(ServoConfig, Validation) {
  ServoConfig cfg;
  cfg.gain = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  CameraIntrinsics k;
  k.cx = 1000;
  EXPECT_THROW(k.validate(), Error);
}
