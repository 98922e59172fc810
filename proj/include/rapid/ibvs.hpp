#pragma once
// Translation-only image-based visual servoing for an eye-in-hand camera.
//
// The feature is the normalised image position of the detected fastener,
// s. The reference s* is the projection of the end-effector origin, so
// driving e = s - s* to zero puts the fastener on the camera ray through
// the tool point. Control law: v_c = -lambda * pinv(L) * e with
//   L = [[-1/Z, 0, s*_x/Z], [0, -1/Z, s*_y/Z]].

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rapid/error.hpp"
#include "rapid/se3.hpp"

namespace rapid {

using Vec2 = Eigen::Vector2d;
using InteractionMatrix = Eigen::Matrix<double, 2, 3>;

struct CameraIntrinsics {
  double fx = 600.0, fy = 600.0;
  double cx = 320.0, cy = 240.0;
  int width = 640, height = 480;

  void validate() const {
    if (!(fx > 0.0 && fy > 0.0)) throw Error(ErrorKind::Validation, "focal lengths must be > 0");
    if (!(cx >= 0.0 && cx <= width && cy >= 0.0 && cy <= height))
      throw Error(ErrorKind::Validation, "principal point must lie inside the image");
  }
  bool inside(const Vec2& px) const { return px.x() >= 0.0 && px.x() < width && px.y() >= 0.0 && px.y() < height; }
};

inline Vec2 project(const CameraIntrinsics& k, const Vec3& p_cam) {
  if (!(p_cam.z() > 0.0)) throw Error(ErrorKind::BehindCamera, "point is behind the camera");
  return {k.fx * p_cam.x() / p_cam.z() + k.cx, k.fy * p_cam.y() / p_cam.z() + k.cy};
}

inline Vec2 normalize(const CameraIntrinsics& k, const Vec2& px) {
  return {(px.x() - k.cx) / k.fx, (px.y() - k.cy) / k.fy};
}

inline InteractionMatrix interaction_matrix(const Vec2& s_star, double z) {
  if (!(z > 0.0) || !std::isfinite(z)) throw Error(ErrorKind::InvalidDepth, "depth must be positive");
  InteractionMatrix l;
  l << -1.0 / z, 0.0, s_star.x() / z,
       0.0, -1.0 / z, s_star.y() / z;
  return l;
}

struct ControlOutput {
  Vec3 velocity = Vec3::Zero();  // camera frame, m/s
  bool rank_deficient = false;
};

// v_c = -lambda * pinv(L) * e. Uses pinv = L^T (L L^T)^-1 when L has full
// row rank, otherwise the minimum-norm solution.
inline ControlOutput control(const InteractionMatrix& l, const Vec2& e, double gain) {
  ControlOutput out;
  const Eigen::Matrix2d llt = l * l.transpose();
  const double scale = llt.cwiseAbs().maxCoeff();
  if (scale > 0.0 && std::abs(llt.determinant()) > 1e-12 * scale * scale) {
    out.velocity = -gain * (l.transpose() * llt.inverse() * e);
  } else {
    out.rank_deficient = true;
    const Eigen::Matrix<double, 3, 2> pinv = l.completeOrthogonalDecomposition().pseudoInverse();
    out.velocity = -gain * (pinv * e);
  }
  return out;
}

// Median of the finite, strictly positive samples.
inline double depth_estimate(std::vector<double> depths) {
  depths.erase(std::remove_if(depths.begin(), depths.end(), [](double z) { return !std::isfinite(z) || z <= 0.0; }),
               depths.end());
  if (depths.empty()) throw Error(ErrorKind::NoDepth, "no valid depth samples in the bounding box");
  const std::size_t n = depths.size();
  std::sort(depths.begin(), depths.end());
  return n % 2 == 1 ? depths[n / 2] : 0.5 * (depths[n / 2 - 1] + depths[n / 2]);
}

struct ServoConfig {
  double gain = 1.0;         // lambda, 1/s
  double period = 0.05;      // s
  double epsilon = 1e-3;     // convergence threshold on |e|
  int max_iterations = 200;
  double depth_noise_sigma = 0.0;      // m, per depth pixel
  double invalid_depth_fraction = 0.0; // pixels returning no depth
  double depth_bias = 1.0;             // multiplicative error on the depth estimate
  int depth_samples = 25;

  void validate() const {
    if (!(gain > 0.0 && period > 0.0 && epsilon > 0.0))
      throw Error(ErrorKind::Validation, "gain, period and epsilon must be > 0");
    if (max_iterations < 0 || depth_samples < 1) throw Error(ErrorKind::Validation, "bad servo iteration settings");
  }
};

struct ServoState {
  Vec2 s = Vec2::Zero();
  Vec2 s_star = Vec2::Zero();
  Vec2 e = Vec2::Zero();
  double z = 0.0;
  Vec3 v_c = Vec3::Zero();
};

// Camera with fixed orientation translating rigidly with the end-effector.
struct SimCamera {
  CameraIntrinsics intrinsics;
  HomogeneousTransform ee_in_camera;  // ^camera H_ee
  Mat3 world_from_camera = Mat3::Identity();
  Vec3 position = Vec3::Zero();       // camera origin in world
  Vec3 target = Vec3::Zero();         // fastener centre in world

  Vec3 target_in_camera() const { return world_from_camera.transpose() * (target - position); }
  Vec3 ee_in_world() const { return position + world_from_camera * ee_in_camera.translation(); }

  // Downward-looking camera: optical axis -z_world, image x along +x_world.
  static Mat3 looking_down() {
    Mat3 r;
    r.col(0) = Vec3(1, 0, 0);
    r.col(1) = Vec3(0, -1, 0);
    r.col(2) = Vec3(0, 0, -1);
    return r;
  }

  // Camera placed so that the target sits at depth `z` and the fastener is
  // displaced laterally (world xy) by `offset` from the aligned pose.
  static SimCamera scenario(const CameraIntrinsics& k, const HomogeneousTransform& ee_in_camera, const Vec3& target,
                            double z, const Vec2& offset) {
    SimCamera cam;
    cam.intrinsics = k;
    cam.ee_in_camera = ee_in_camera;
    cam.world_from_camera = looking_down();
    cam.target = target;
    const Vec3 e = ee_in_camera.translation();
    const Vec3 aligned_cam(e.x() / e.z() * z, e.y() / e.z() * z, z);  // target on the tool ray
    const Vec3 aligned_pos = target - cam.world_from_camera * aligned_cam;
    cam.position = aligned_pos - Vec3(offset.x(), offset.y(), 0.0);
    return cam;
  }
};

enum class ServoOutcome { Converged, MaxIterations, LeftFieldOfView };

struct ServoResult {
  ServoOutcome outcome = ServoOutcome::MaxIterations;
  int iterations = 0;
  std::vector<ServoState> trajectory;
  int sign_flips = 0;  // error component sign reversals, an overshoot indicator
  SimCamera final_camera;

  bool converged() const { return outcome == ServoOutcome::Converged; }
  // World xy misalignment between tool point and fastener at the end.
  Vec2 lateral_offset() const {
    const Vec3 d = final_camera.ee_in_world() - final_camera.target;
    return {d.x(), d.y()};
  }
};

inline ServoResult servo_loop(SimCamera cam, const ServoConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  cam.intrinsics.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const CameraIntrinsics& k = cam.intrinsics;
  const Vec2 s_star = normalize(k, project(k, cam.ee_in_camera.translation()));
  ServoResult res;
  Vec2 prev_e = Vec2::Zero();

  for (int it = 0;; ++it) {
    const Vec3 p = cam.target_in_camera();
    if (!(p.z() > 0.0)) {
      res.outcome = ServoOutcome::LeftFieldOfView;
      break;
    }
    const Vec2 px = project(k, p);
    if (!k.inside(px)) {
      res.outcome = ServoOutcome::LeftFieldOfView;
      break;
    }
    ServoState st;
    st.s = normalize(k, px);
    st.s_star = s_star;
    st.e = st.s - s_star;

    std::vector<double> depths(cfg.depth_samples);
    for (double& d : depths) {
      const double noise = gauss(rng);
      d = unit(rng) < cfg.invalid_depth_fraction ? 0.0 : p.z() + cfg.depth_noise_sigma * noise;
    }
    try {
      st.z = cfg.depth_bias * depth_estimate(depths);
    } catch (const Error&) {
      st.z = 0.0;
    }

    if (st.e.norm() < cfg.epsilon) {
      res.trajectory.push_back(st);
      res.outcome = ServoOutcome::Converged;
      res.iterations = it;
      break;
    }
    if (it >= cfg.max_iterations) {
      res.trajectory.push_back(st);
      res.outcome = ServoOutcome::MaxIterations;
      res.iterations = it;
      break;
    }
    if (st.z > 0.0) st.v_c = control(interaction_matrix(s_star, st.z), st.e, cfg.gain).velocity;
    if (it > 0)
      for (int a = 0; a < 2; ++a)
        if (st.e[a] * prev_e[a] < 0.0) ++res.sign_flips;
    prev_e = st.e;
    res.trajectory.push_back(st);
    cam.position += cam.world_from_camera * (st.v_c * cfg.period);
    res.iterations = it + 1;
  }
  res.final_camera = cam;
  return res;
}

}  // namespace rapid
