#pragma once
// Seeded iterative IK over the full 7-DoF chain (damped least squares).
// Used as the comparison baseline for the closed-form pipeline.

#include <optional>
#include <random>

#include "rapid/ik_select.hpp"
#include "rapid/kinematics.hpp"

namespace rapid {

struct DlsParams {
  int max_iterations = 100;
  double damping = 0.05;
  double max_step = 0.5;  // per-iteration cap on the joint update norm
  double position_tolerance = 1e-7;
  double rotation_tolerance = 1e-7;
  bool clamp_to_limits = true;  // project onto the joint box after each step
};

// Rotation vector of r_target * r_current^T (world-frame orientation error).
inline Vec3 rotation_error_vector(const Mat3& r_current, const Mat3& r_target) {
  const Eigen::AngleAxisd aa(r_target * r_current.transpose());
  return aa.angle() * aa.axis();
}

// Runs damped least squares from `seed`. Returns the converged configuration
// (arm angles wrapped to the nearest in-limit representative) or nullopt.
inline std::optional<JointConfig> dls_ik(const KinematicModel& m, const Pose& target, const JointConfig& seed,
                                         const DlsParams& p = {}) {
  JointVector q = seed.vector();
  const Mat3 r_target = target.orientation.matrix();
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  using Vec6 = Eigen::Matrix<double, 6, 1>;

  for (int it = 0; it <= p.max_iterations; ++it) {
    const JointConfig qc = JointConfig::from_vector(q);
    const auto frames = chain_frames(m, qc);
    const Vec3 ep = target.position - frames[7].translation();
    const Vec3 er = rotation_error_vector(frames[7].rotation(), r_target);
    if (ep.norm() < p.position_tolerance && er.norm() < p.rotation_tolerance) {
      JointConfig out = qc;
      if (!m.gantry_limits.contains(out.gantry)) return std::nullopt;
      ArmAngles wrapped{};
      for (int i = 0; i < kArmJoints; ++i) wrapped[i] = wrap_angle(out.arm[i]);
      const auto arm = nearest_in_limits(m, wrapped, out.arm);
      if (!arm) return std::nullopt;
      out.arm = *arm;
      return out;
    }
    if (it == p.max_iterations) break;
    Vec6 e;
    e << ep, er;
    const Jacobian j = jacobian(m, qc);
    const Mat6 jjt = j * j.transpose() + p.damping * p.damping * Mat6::Identity();
    JointVector dq = j.transpose() * jjt.ldlt().solve(e);
    const double n = dq.norm();
    if (n > p.max_step) dq *= p.max_step / n;
    q += dq;
    if (p.clamp_to_limits) {
      q(0) = std::clamp(q(0), m.gantry_limits.low, m.gantry_limits.high);
      for (int i = 0; i < kArmJoints; ++i)
        q(i + 1) = std::clamp(q(i + 1), m.arm_limits[i].low, m.arm_limits[i].high);
    }
  }
  return std::nullopt;
}

inline JointConfig random_config(const KinematicModel& m, std::mt19937_64& rng) {
  JointConfig q;
  q.gantry = std::uniform_real_distribution<double>(m.gantry_limits.low, m.gantry_limits.high)(rng);
  for (int i = 0; i < kArmJoints; ++i)
    q.arm[i] = std::uniform_real_distribution<double>(m.arm_limits[i].low, m.arm_limits[i].high)(rng);
  return q;
}

// Baseline success: converged from `seeds` random seeds (first success wins)
// and the result passes the same posture filters as the closed-form pipeline.
inline std::optional<JointConfig> numeric_ik_multi_seed(const KinematicModel& m, const Pose& target,
                                                        const SelectionConfig& cfg, int seeds,
                                                        std::mt19937_64& rng, const DlsParams& p = {}) {
  for (int s = 0; s < seeds; ++s) {
    const auto q = dls_ik(m, target, random_config(m, rng), p);
    if (q && passes_filters(posture_metrics(m, forward_kinematics(m, *q)), cfg)) return q;
  }
  return std::nullopt;
}

}  // namespace rapid
