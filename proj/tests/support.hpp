#pragma once

#include <cmath>
#include <random>
#include <string>

#include "rapid/kinematics.hpp"

namespace rapid::test {

inline std::string source_path(const std::string& rel) { return std::string(RAPID_SOURCE_DIR) + "/" + rel; }

inline const KinematicModel& model() {
  static const KinematicModel m = load_model(source_path("models/ur16e_gantry.json"));
  return m;
}

inline JointConfig home() {
  JointConfig q;
  q.gantry = 1.05;
  q.arm = {0.0, -1.2, 1.6, -0.4, 1.5708, 0.0};
  return q;
}

// Tool pointing straight down, x along world x.
inline Mat3 tool_down() {
  Mat3 r;
  r.col(0) = Vec3(1, 0, 0);
  r.col(1) = Vec3(0, -1, 0);
  r.col(2) = Vec3(0, 0, -1);
  return r;
}

// Standard DH chain written out with plain 4x4 matrices.
inline Eigen::Matrix4d dh_oracle(double a, double alpha, double d, double theta) {
  Eigen::Matrix4d t;
  t << std::cos(theta), -std::sin(theta) * std::cos(alpha), std::sin(theta) * std::sin(alpha), a * std::cos(theta),
      std::sin(theta), std::cos(theta) * std::cos(alpha), -std::cos(theta) * std::sin(alpha), a * std::sin(theta),
      0, std::sin(alpha), std::cos(alpha), d,
      0, 0, 0, 1;
  return t;
}

inline Eigen::Matrix4d fk_oracle(const KinematicModel& m, const JointConfig& q) {
  const double as[6] = {0, m.a2, m.a3, 0, 0, 0};
  const double ds[6] = {m.d1, 0, 0, m.d4, m.d5, m.d6};
  const double alphas[6] = {kPi / 2, 0, 0, kPi / 2, -kPi / 2, 0};
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.block<3, 1>(0, 3) = q.gantry * m.gantry_axis;
  t = t * m.base_mount.matrix();
  for (int i = 0; i < 6; ++i) t = t * dh_oracle(as[i], alphas[i], ds[i], q.arm[i]);
  return t * m.tool.matrix();
}

inline double angle_diff(double a, double b) { return std::abs(std::remainder(a - b, 2.0 * kPi)); }

}  // namespace rapid::test
