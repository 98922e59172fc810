#pragma once
// Kinematics of a UR-family 6R arm carried by a 1-DoF prismatic gantry.
//
// The arm uses the standard DH convention
//   A_i = Rz(theta_i) * Tz(d_i) * Tx(a_i) * Rx(alpha_i)
// with alpha = (pi/2, 0, 0, pi/2, -pi/2, 0) and a1 = a4 = a5 = a6 = 0, which
// is what makes the closed-form solution below possible. The constants
// themselves come from a model file (see docs/model_schema.md).

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "rapid/error.hpp"
#include "rapid/se3.hpp"

namespace rapid {

inline constexpr int kArmJoints = 6;
inline constexpr int kJoints = 7;

using ArmAngles = std::array<double, kArmJoints>;
using JointVector = Eigen::Matrix<double, kJoints, 1>;
using Jacobian = Eigen::Matrix<double, 6, kJoints>;

struct JointConfig {
  double gantry = 0.0;  // m
  ArmAngles arm{};      // rad

  JointVector vector() const {
    JointVector v;
    v(0) = gantry;
    for (int i = 0; i < kArmJoints; ++i) v(i + 1) = arm[i];
    return v;
  }
  static JointConfig from_vector(const JointVector& v) {
    JointConfig q;
    q.gantry = v(0);
    for (int i = 0; i < kArmJoints; ++i) q.arm[i] = v(i + 1);
    return q;
  }
  bool finite() const { return vector().allFinite(); }
  bool operator==(const JointConfig&) const = default;
};

struct JointLimit {
  double low = -2.0 * kPi;
  double high = 2.0 * kPi;
  bool contains(double v) const { return v >= low && v <= high; }
};

// Indices into FrameSet::chain: 0 = arm base (gantry plate), 1..6 = DH frame
// origins, 7 = end-effector (tool point).
inline constexpr int kChainPoints = 8;

struct FrameIndices {
  int gantry_plate = 0;
  int forearm = 2;
  int wrist = 3;
  int end_effector = 7;
};

struct KinematicModel {
  std::string name = "arm";
  double d1 = 0.0, a2 = 0.0, a3 = 0.0, d4 = 0.0, d5 = 0.0, d6 = 0.0;
  std::array<JointLimit, kArmJoints> arm_limits{};
  Vec3 gantry_axis = Vec3::UnitX();
  JointLimit gantry_limits{0.0, 1.0};
  HomogeneousTransform base_mount;  // arm base in world at gantry travel 0
  HomogeneousTransform tool;        // end-effector in flange frame
  FrameIndices frames;

  double a(int i) const { return i == 1 ? a2 : (i == 2 ? a3 : 0.0); }
  double d(int i) const {
    switch (i) {
      case 0: return d1;
      case 3: return d4;
      case 4: return d5;
      case 5: return d6;
      default: return 0.0;
    }
  }
  static double alpha(int i) {
    constexpr std::array<double, 6> al{kPi / 2, 0.0, 0.0, kPi / 2, -kPi / 2, 0.0};
    return al[i];
  }

  // Upper bound on the distance from the arm base to the tool point.
  double reach() const {
    return std::abs(d1) + std::abs(a2) + std::abs(a3) + std::abs(d4) + std::abs(d5) +
           std::abs(d6) + tool.translation().norm();
  }

  bool within_limits(const JointConfig& q) const {
    if (!gantry_limits.contains(q.gantry)) return false;
    for (int i = 0; i < kArmJoints; ++i)
      if (!arm_limits[i].contains(q.arm[i])) return false;
    return true;
  }

  void validate() const {
    if (std::abs(gantry_axis.norm() - 1.0) > 1e-9)
      throw Error(ErrorKind::Validation, "gantry axis must be unit-norm");
    if (!(gantry_limits.low < gantry_limits.high))
      throw Error(ErrorKind::Validation, "gantry limits must satisfy low < high");
    for (const auto& l : arm_limits)
      if (!(l.low < l.high)) throw Error(ErrorKind::Validation, "joint limits must satisfy low < high");
    if (a2 == 0.0 || a3 == 0.0 || d6 == 0.0)
      throw Error(ErrorKind::Validation, "a2, a3 and d6 must be non-zero");
  }
};

inline HomogeneousTransform dh_transform(double a, double alpha, double d, double theta) {
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  Mat3 r;
  r << ct, -st * ca, st * sa,
       st, ct * ca, -ct * sa,
       0.0, sa, ca;
  return {r, Vec3(a * ct, a * st, d)};
}

inline HomogeneousTransform arm_link(const KinematicModel& m, int i, double theta) {
  return dh_transform(m.a(i), KinematicModel::alpha(i), m.d(i), theta);
}

// World pose of the arm base for a given gantry travel.
inline HomogeneousTransform arm_base_in_world(const KinematicModel& m, double gantry) {
  const Vec3 t = gantry * m.gantry_axis;
  return compose(HomogeneousTransform::translate(t.x(), t.y(), t.z()), m.base_mount);
}

// Flange and tool pose of the bare arm, expressed in its own base frame.
inline HomogeneousTransform arm_flange(const KinematicModel& m, const ArmAngles& q) {
  HomogeneousTransform t;
  for (int i = 0; i < kArmJoints; ++i) t = compose(t, arm_link(m, i, q[i]));
  return t;
}
inline Pose arm_forward(const KinematicModel& m, const ArmAngles& q) {
  return compose(arm_flange(m, q), m.tool).pose();
}

struct FrameSet {
  Pose gantry_plate;
  Pose forearm;
  Pose wrist;
  Pose end_effector;
  std::array<HomogeneousTransform, kChainPoints> chain;  // world frames, see kChainPoints

  Vec3 point(int index) const { return chain[index].translation(); }
};

inline std::array<HomogeneousTransform, kChainPoints> chain_frames(const KinematicModel& m,
                                                                   const JointConfig& q) {
  std::array<HomogeneousTransform, kChainPoints> c;
  c[0] = arm_base_in_world(m, q.gantry);
  for (int i = 0; i < kArmJoints; ++i) c[i + 1] = compose(c[i], arm_link(m, i, q.arm[i]));
  c[7] = compose(c[6], m.tool);
  return c;
}

inline FrameSet forward_kinematics(const KinematicModel& m, const JointConfig& q) {
  FrameSet f;
  f.chain = chain_frames(m, q);
  f.gantry_plate = f.chain[m.frames.gantry_plate].pose();
  f.forearm = f.chain[m.frames.forearm].pose();
  f.wrist = f.chain[m.frames.wrist].pose();
  f.end_effector = f.chain[m.frames.end_effector].pose();
  return f;
}

inline Pose end_effector_pose(const KinematicModel& m, const JointConfig& q) {
  return chain_frames(m, q)[7].pose();
}
inline Vec3 end_effector_position(const KinematicModel& m, const JointConfig& q) {
  return chain_frames(m, q)[7].translation();
}

// Geometric Jacobian of the tool point in world coordinates. Rows 0-2 are
// linear velocity, rows 3-5 angular; column 0 is the gantry.
inline Jacobian jacobian(const KinematicModel& m, const JointConfig& q) {
  const auto c = chain_frames(m, q);
  const Vec3 pe = c[7].translation();
  Jacobian j = Jacobian::Zero();
  j.block<3, 1>(0, 0) = m.gantry_axis;
  for (int i = 0; i < kArmJoints; ++i) {
    const Vec3 z = c[i].rotation().col(2);
    j.block<3, 1>(0, i + 1) = z.cross(pe - c[i].translation());
    j.block<3, 1>(3, i + 1) = z;
  }
  return j;
}

// Yoshikawa index sqrt(det(J J^T)); tiny negative determinants from
// rounding are clamped to zero.
inline double manipulability(const Jacobian& j) {
  const double det = (j * j.transpose()).determinant();
  return det > 0.0 ? std::sqrt(det) : 0.0;
}

namespace detail {

inline constexpr double kDiscriminantEps = 1e-10;

// acos with the pair (+a, -a) collapsed to one value near the boundary.
inline std::vector<double> acos_pair(double c) {
  if (std::abs(c) > 1.0 + kDiscriminantEps) return {};
  c = std::clamp(c, -1.0, 1.0);
  const double a = std::acos(c);
  if (1.0 - std::abs(c) <= kDiscriminantEps) return {a};
  return {a, -a};
}

}  // namespace detail

// All closed-form arm solutions (at most 8) that place the tool at `target`
// (expressed in the arm base frame). Angles are wrapped into (-pi, pi].
// Returns an empty set if the target is unreachable. Every returned branch
// reproduces the target to 1e-6 m / 1e-6 rad.
inline std::vector<ArmAngles> analytic_ik_arm(const KinematicModel& m, const Pose& target_in_arm_base) {
  using detail::acos_pair;
  std::vector<ArmAngles> out;
  if (target_in_arm_base.position.norm() > m.reach()) return out;

  const HomogeneousTransform t06 = compose(HomogeneousTransform(target_in_arm_base), invert(m.tool));
  const Mat3& r06 = t06.rotation();
  const Vec3& p06 = t06.translation();
  const Vec3 p05 = p06 - m.d6 * r06.col(2);

  const double rxy = std::hypot(p05.x(), p05.y());
  if (rxy < 1e-12) return out;  // shoulder singularity: theta1 undetermined
  const double psi = std::atan2(p05.y(), p05.x());

  for (double phi : acos_pair(m.d4 / rxy)) {
    const double th1 = psi + phi + kPi / 2;
    const double s1 = std::sin(th1), c1 = std::cos(th1);

    for (double th5 : acos_pair((p06.x() * s1 - p06.y() * c1 - m.d4) / m.d6)) {
      const double s5 = std::sin(th5);
      double th6 = 0.0;  // free at the wrist singularity
      if (std::abs(s5) > detail::kDiscriminantEps) {
        // x and y axes of the base frame seen from the flange frame.
        const double x60x = r06(0, 0), x60y = r06(0, 1);
        const double y60x = r06(1, 0), y60y = r06(1, 1);
        th6 = std::atan2((-x60y * s1 + y60y * c1) / s5, (x60x * s1 - y60x * c1) / s5);
      }

      const HomogeneousTransform t01 = arm_link(m, 0, th1);
      const HomogeneousTransform t45 = arm_link(m, 4, th5);
      const HomogeneousTransform t56 = arm_link(m, 5, th6);
      const HomogeneousTransform t14 = compose(compose(invert(t01), t06), invert(compose(t45, t56)));
      const Vec3 p13 = t14.apply(Vec3(0.0, -m.d4, 0.0));
      const double n13 = p13.norm();
      if (n13 < 1e-12) continue;

      const double c3 = (p13.squaredNorm() - m.a2 * m.a2 - m.a3 * m.a3) / (2.0 * m.a2 * m.a3);
      for (double th3 : acos_pair(c3)) {
        const double sarg = std::clamp(m.a3 * std::sin(th3) / n13, -1.0, 1.0);
        const double th2 = -std::atan2(p13.y(), -p13.x()) + std::asin(sarg);
        const HomogeneousTransform t13 = compose(arm_link(m, 1, th2), arm_link(m, 2, th3));
        const HomogeneousTransform t34 = compose(invert(t13), t14);
        const double th4 = std::atan2(t34.rotation()(1, 0), t34.rotation()(0, 0));

        ArmAngles q{th1, th2, th3, th4, th5, th6};
        for (double& v : q) v = wrap_angle(v);

        const Pose fk = arm_forward(m, q);
        if (position_error(fk, target_in_arm_base) > 1e-6 ||
            rotation_error(fk, target_in_arm_base) > 1e-6)
          continue;

        const bool duplicate = std::any_of(out.begin(), out.end(), [&](const ArmAngles& o) {
          for (int i = 0; i < kArmJoints; ++i)
            if (std::abs(wrap_angle(o[i] - q[i])) > 1e-9) return false;
          return true;
        });
        if (!duplicate) out.push_back(q);
      }
    }
  }
  return out;
}

// Target pose of the tool in the arm base frame for a given gantry travel.
inline Pose target_in_arm_base(const KinematicModel& m, double gantry, const Pose& world_target) {
  return compose(invert(arm_base_in_world(m, gantry)), HomogeneousTransform(world_target)).pose();
}

// --- model file ------------------------------------------------------------

namespace detail {
inline JointLimit limit_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorKind::Validation, "limit must be [low, high]");
  return {j[0].get<double>(), j[1].get<double>()};
}
inline HomogeneousTransform transform_from_json(const nlohmann::json& j) {
  Pose p;
  from_json(j, p);
  return HomogeneousTransform(p);
}
}  // namespace detail

inline KinematicModel model_from_json(const nlohmann::json& j) {
  KinematicModel m;
  try {
    m.name = j.value("name", "arm");
    const auto& arm = j.at("arm");
    m.d1 = arm.at("d1").get<double>();
    m.a2 = arm.at("a2").get<double>();
    m.a3 = arm.at("a3").get<double>();
    m.d4 = arm.at("d4").get<double>();
    m.d5 = arm.at("d5").get<double>();
    m.d6 = arm.at("d6").get<double>();
    const auto& lim = j.at("joint_limits");
    if (!lim.is_array() || lim.size() != kArmJoints)
      throw Error(ErrorKind::Validation, "joint_limits needs 6 entries");
    for (int i = 0; i < kArmJoints; ++i) m.arm_limits[i] = detail::limit_from_json(lim[i]);
    const auto& g = j.at("gantry");
    m.gantry_axis = vec_from_json(g.at("axis"));
    m.gantry_limits = detail::limit_from_json(g.at("limits"));
    m.base_mount = detail::transform_from_json(j.at("base_mount"));
    m.tool = detail::transform_from_json(j.at("tool"));
    if (j.contains("frames")) {
      const auto& f = j.at("frames");
      m.frames.gantry_plate = f.value("gantry_plate", 0);
      m.frames.forearm = f.value("forearm", 2);
      m.frames.wrist = f.value("wrist", 3);
      m.frames.end_effector = f.value("end_effector", 7);
      for (int idx : {m.frames.gantry_plate, m.frames.forearm, m.frames.wrist, m.frames.end_effector})
        if (idx < 0 || idx >= kChainPoints) throw Error(ErrorKind::Validation, "frame index out of range");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("model file: ") + e.what());
  }
  m.validate();
  return m;
}

inline KinematicModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open model file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation, "model file " + path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace rapid
