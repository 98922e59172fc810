#pragma once
// Minimal rigid-body algebra: unit quaternions, poses and homogeneous
// transforms. Everything here is an immutable value type.

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numbers>

#include "rapid/error.hpp"

namespace rapid {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

class UnitQuaternion {
 public:
  UnitQuaternion() = default;

  // Rejects inputs whose norm deviates from one by more than 1e-6; the
  // stored value is canonicalised to w >= 0.
  UnitQuaternion(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-6)
      throw Error(ErrorKind::Validation, "quaternion is not unit-norm");
    // Skip the division when already unit to within rounding so that
    // load/save cycles are bit-stable.
    if (std::abs(n - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) {
      w /= n; x /= n; y /= n; z /= n;
    }
    if (w < 0.0 || (w == 0.0 && std::signbit(w))) {
      w = -w; x = -x; y = -y; z = -z;
    }
    q_ = Eigen::Quaterniond(w, x, y, z);
  }

  static UnitQuaternion identity() { return {}; }

  // From an orthonormal rotation matrix.
  static UnitQuaternion from_matrix(const Mat3& r) {
    Eigen::Quaterniond q(r);
    q.normalize();
    return {q.w(), q.x(), q.y(), q.z()};
  }

  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle) {
    Eigen::Quaterniond q(Eigen::AngleAxisd(angle, axis.normalized()));
    return {q.w(), q.x(), q.y(), q.z()};
  }

  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }

  Mat3 matrix() const { return q_.toRotationMatrix(); }
  const Eigen::Quaterniond& eigen() const { return q_; }

  UnitQuaternion operator*(const UnitQuaternion& o) const {
    Eigen::Quaterniond r = q_ * o.q_;
    r.normalize();
    return {r.w(), r.x(), r.y(), r.z()};
  }

  UnitQuaternion inverse() const { return {w(), -x(), -y(), -z()}; }

 private:
  Eigen::Quaterniond q_{1.0, 0.0, 0.0, 0.0};
};

// Geodesic angle between two rotations in [0, pi]; invariant to q vs -q.
inline double rotation_angle_between(const UnitQuaternion& a, const UnitQuaternion& b) {
  const double d = std::abs(a.w() * b.w() + a.x() * b.x() + a.y() * b.y() + a.z() * b.z());
  // atan2 form stays accurate for tiny angles where acos(d) loses digits.
  const Eigen::Quaterniond rel = a.eigen().conjugate() * b.eigen();
  const double s = rel.vec().norm();
  return 2.0 * std::atan2(s, std::min(1.0, d));
}

struct Pose {
  Vec3 position = Vec3::Zero();
  UnitQuaternion orientation;
};

class HomogeneousTransform {
 public:
  HomogeneousTransform() = default;

  HomogeneousTransform(const Mat3& rotation, const Vec3& translation)
      : r_(rotation), t_(translation) {
    const double orth = (r_ * r_.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (orth > 1e-9 || std::abs(r_.determinant() - 1.0) > 1e-9)
      throw Error(ErrorKind::Validation, "rotation is not orthonormal with det +1");
  }

  explicit HomogeneousTransform(const Pose& p) : r_(p.orientation.matrix()), t_(p.position) {}

  static HomogeneousTransform identity() { return {}; }
  static HomogeneousTransform translate(double x, double y, double z) {
    HomogeneousTransform t;
    t.t_ = Vec3(x, y, z);
    return t;
  }
  static HomogeneousTransform rotate(const Vec3& axis, double angle) {
    HomogeneousTransform t;
    t.r_ = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
    return t;
  }

  const Mat3& rotation() const { return r_; }
  const Vec3& translation() const { return t_; }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = r_;
    m.topRightCorner<3, 1>() = t_;
    return m;
  }

  Vec3 apply(const Vec3& p) const { return r_ * p + t_; }

  Pose pose() const { return {t_, UnitQuaternion::from_matrix(r_)}; }

  friend HomogeneousTransform compose(const HomogeneousTransform& a, const HomogeneousTransform& b);
  friend HomogeneousTransform invert(const HomogeneousTransform& t);

 private:
  // Unchecked construction for internal products; orthonormality is
  // preserved up to rounding by the operations that use it.
  struct Unchecked {};
  HomogeneousTransform(Unchecked, const Mat3& r, const Vec3& t) : r_(r), t_(t) {}

  Mat3 r_ = Mat3::Identity();
  Vec3 t_ = Vec3::Zero();
};

inline HomogeneousTransform compose(const HomogeneousTransform& a, const HomogeneousTransform& b) {
  return {HomogeneousTransform::Unchecked{}, a.r_ * b.r_, a.r_ * b.t_ + a.t_};
}

inline HomogeneousTransform invert(const HomogeneousTransform& t) {
  const Mat3 rt = t.r_.transpose();
  return {HomogeneousTransform::Unchecked{}, rt, -(rt * t.t_)};
}

inline HomogeneousTransform operator*(const HomogeneousTransform& a, const HomogeneousTransform& b) {
  return compose(a, b);
}

// Builds a pose whose rotation columns are x, y, z. The frame must be
// orthonormal and right-handed to within 1e-6.
inline Pose pose_from_axes(const Vec3& x, const Vec3& y, const Vec3& z, const Vec3& origin) {
  constexpr double tol = 1e-6;
  const bool unit = std::abs(x.norm() - 1.0) <= tol && std::abs(y.norm() - 1.0) <= tol &&
                    std::abs(z.norm() - 1.0) <= tol;
  const bool orthogonal =
      std::abs(x.dot(y)) <= tol && std::abs(y.dot(z)) <= tol && std::abs(z.dot(x)) <= tol;
  if (!unit || !orthogonal)
    throw Error(ErrorKind::Validation, "frame axes are not orthonormal");
  if ((x.cross(y) - z).norm() > tol)
    throw Error(ErrorKind::Validation, "frame axes are left-handed");
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return {origin, UnitQuaternion::from_matrix(r)};
}

inline double position_error(const Pose& a, const Pose& b) { return (a.position - b.position).norm(); }
inline double rotation_error(const Pose& a, const Pose& b) {
  return rotation_angle_between(a.orientation, b.orientation);
}

// JSON: {"position":[x,y,z], "quaternion":[w,x,y,z]}
inline void to_json(nlohmann::json& j, const Pose& p) {
  j = nlohmann::json{
      {"position", {p.position.x(), p.position.y(), p.position.z()}},
      {"quaternion", {p.orientation.w(), p.orientation.x(), p.orientation.y(), p.orientation.z()}}};
}

inline void from_json(const nlohmann::json& j, Pose& p) {
  const auto& pos = j.at("position");
  const auto& q = j.at("quaternion");
  if (!pos.is_array() || pos.size() != 3 || !q.is_array() || q.size() != 4)
    throw Error(ErrorKind::Validation, "pose needs position[3] and quaternion[4]");
  p.position = Vec3(pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>());
  if (!p.position.allFinite()) throw Error(ErrorKind::Validation, "pose position is not finite");
  p.orientation = UnitQuaternion(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                                 q[3].get<double>());
}

inline nlohmann::json vec_to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
inline Vec3 vec_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::Validation, "expected [x,y,z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace rapid
