#pragma once
// Bidirectional RRT (RRT-Connect) in joint space with a multi-root goal
// tree built from the IK candidate set. In corridor mode every accepted
// state must keep the end-effector inside a box aligned with the
// start-to-goal direction; the sampler rejects states outside it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rapid/detection_memory.hpp"
#include "rapid/error.hpp"
#include "rapid/ik_select.hpp"
#include "rapid/kinematics.hpp"
#include "rapid/numeric_ik.hpp"

namespace rapid {

struct Obstacle {
  std::string name;
  Aabb box;
};

struct CollisionWorld {
  std::vector<Obstacle> obstacles;
  double link_radius = 0.03;  // m, radius of the spheres sampled along each link
  int samples_per_link = 4;

  void validate() const {
    for (const auto& o : obstacles)
      if (!((o.box.max - o.box.min).array() > 0.0).all())
        throw Error(ErrorKind::Validation, "obstacle '" + o.name + "' has non-positive extent");
    if (samples_per_link < 2) throw Error(ErrorKind::Validation, "need at least 2 samples per link");
  }

  // Table, battery pack and gantry arch of the reference cell.
  static CollisionWorld reference_cell() {
    CollisionWorld w;
    w.obstacles = {
        {"table", {Vec3(-0.3, -0.9, 0.0), Vec3(2.4, 0.9, 0.7)}},
        {"battery", {Vec3(0.0, -0.61, 0.7), Vec3(2.12, 0.61, 0.85)}},
        {"gantry_beam", {Vec3(-0.5, -0.15, 1.62), Vec3(2.6, 0.15, 1.8)}},
        {"upright_left", {Vec3(-0.5, -0.15, 0.0), Vec3(-0.35, 0.15, 1.8)}},
        {"upright_right", {Vec3(2.45, -0.15, 0.0), Vec3(2.6, 0.15, 1.8)}},
    };
    return w;
  }
};

inline double distance_to_box(const Aabb& b, const Vec3& p) {
  const Vec3 d = (b.min - p).cwiseMax(p - b.max).cwiseMax(0.0);
  return d.norm();
}

struct Corridor {
  Vec3 start = Vec3::Zero();
  Vec3 goal = Vec3::UnitX();
  double half_width_y = 0.10;  // m, along the first transverse axis
  double half_width_z = 0.10;  // m, along the second transverse axis
  double margin = 0.05;        // m, longitudinal slack beyond the endpoints

  void validate() const {
    if (!((goal - start).norm() > 0.0)) throw Error(ErrorKind::Validation, "corridor start and goal coincide");
    if (!(half_width_y > 0.0 && half_width_z > 0.0))
      throw Error(ErrorKind::Validation, "corridor half-widths must be > 0");
  }

  double length() const { return (goal - start).norm(); }

  // u along the corridor, v horizontal transverse (when possible), w = u x v.
  std::array<Vec3, 3> basis() const {
    const Vec3 u = (goal - start).normalized();
    Vec3 v = Vec3::UnitZ().cross(u);
    if (v.norm() < 1e-9) v = Vec3::UnitY().cross(u);
    v.normalize();
    return {u, v, u.cross(v)};
  }
};

inline bool corridor_contains(const Corridor& c, const Vec3& p) {
  const auto [u, v, w] = c.basis();
  const Vec3 d = p - c.start;
  const double along = d.dot(u);
  return along >= -c.margin && along <= c.length() + c.margin && std::abs(d.dot(v)) <= c.half_width_y &&
         std::abs(d.dot(w)) <= c.half_width_z;
}

// Limits, link spheres against obstacle boxes, and (optionally) the corridor.
inline bool state_valid(const CollisionWorld& world, const KinematicModel& m, const JointConfig& q,
                        const Corridor* corridor = nullptr) {
  if (!m.within_limits(q)) return false;
  const auto frames = chain_frames(m, q);
  if (corridor && !corridor_contains(*corridor, frames[7].translation())) return false;
  const int n = world.samples_per_link;
  for (int seg = 0; seg + 1 < kChainPoints; ++seg) {
    const Vec3 a = frames[seg].translation();
    const Vec3 b = frames[seg + 1].translation();
    for (int k = 0; k < n; ++k) {
      const Vec3 p = a + (b - a) * (static_cast<double>(k) / (n - 1));
      for (const auto& o : world.obstacles)
        if (distance_to_box(o.box, p) <= world.link_radius) return false;
    }
  }
  return true;
}

struct JointPath {
  std::vector<JointConfig> waypoints;
  double resolution_rad = 0.02;
  double resolution_m = 0.005;
  double ee_length = 0.0;  // cached end-effector travel over the densified path
};

inline int interpolation_steps(const JointConfig& a, const JointConfig& b, double res_rad, double res_m) {
  double s = std::abs(b.gantry - a.gantry) / res_m;
  for (int i = 0; i < kArmJoints; ++i) s = std::max(s, std::abs(b.arm[i] - a.arm[i]) / res_rad);
  return std::max(1, static_cast<int>(std::ceil(s - 1e-12)));
}

inline JointConfig interpolate(const JointConfig& a, const JointConfig& b, double t) {
  return JointConfig::from_vector(a.vector() + t * (b.vector() - a.vector()));
}

inline std::vector<JointConfig> densify(const std::vector<JointConfig>& wps, double res_rad, double res_m) {
  std::vector<JointConfig> out;
  if (wps.empty()) return out;
  out.push_back(wps.front());
  for (std::size_t i = 1; i < wps.size(); ++i) {
    const int n = interpolation_steps(wps[i - 1], wps[i], res_rad, res_m);
    for (int k = 1; k <= n; ++k) out.push_back(k == n ? wps[i] : interpolate(wps[i - 1], wps[i], double(k) / n));
  }
  return out;
}

inline double ee_path_length(const KinematicModel& m, const JointPath& path) {
  const auto dense = densify(path.waypoints, path.resolution_rad, path.resolution_m);
  double len = 0.0;
  for (std::size_t i = 1; i < dense.size(); ++i)
    len += (end_effector_position(m, dense[i]) - end_effector_position(m, dense[i - 1])).norm();
  return len;
}

struct PlannerConfig {
  double budget_s = 5.0;
  int max_iterations = 20000;
  double step = 0.3;                  // max joint-space extension per RRT step
  double resolution_rad = 0.02;
  double resolution_m = 0.005;
  int max_rejections_per_sample = 20000;
  SelectionConfig selection;
  CostWeights weights;
};

enum class PlanStatus { Success, Timeout };

struct PlanResult {
  PlanStatus status = PlanStatus::Timeout;
  JointPath path;
  int iterations = 0;
  double plan_time_s = 0.0;
  std::size_t goal_set_size = 0;
  bool success() const { return status == PlanStatus::Success; }
};

namespace detail {

struct RrtTree {
  std::vector<JointConfig> nodes;
  std::vector<int> parent;

  int add(const JointConfig& q, int p) {
    nodes.push_back(q);
    parent.push_back(p);
    return static_cast<int>(nodes.size()) - 1;
  }
  int nearest(const JointConfig& q) const {
    const JointVector v = q.vector();
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double d = (nodes[i].vector() - v).squaredNorm();
      if (d < bd) {
        bd = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  }
  std::vector<JointConfig> branch(int i) const {
    std::vector<JointConfig> out;
    for (; i >= 0; i = parent[i]) out.push_back(nodes[i]);
    return out;  // leaf first
  }
};

enum class Extend { Reached, Advanced, Trapped };

class Rrt {
 public:
  Rrt(const CollisionWorld& w, const KinematicModel& m, const Corridor* c, const PlannerConfig& cfg)
      : world_(w), model_(m), corridor_(c), cfg_(cfg) {}

  bool edge_valid(const JointConfig& a, const JointConfig& b) const {
    const int n = interpolation_steps(a, b, cfg_.resolution_rad, cfg_.resolution_m);
    for (int k = 1; k <= n; ++k)
      if (!state_valid(world_, model_, k == n ? b : interpolate(a, b, double(k) / n), corridor_)) return false;
    return true;
  }

  Extend extend(RrtTree& t, const JointConfig& target, int& new_index) const {
    const int near = t.nearest(target);
    const JointVector from = t.nodes[near].vector();
    const JointVector delta = target.vector() - from;
    const double dist = delta.norm();
    const bool reach = dist <= cfg_.step;
    const JointConfig q = reach ? target : JointConfig::from_vector(from + delta * (cfg_.step / dist));
    if (!edge_valid(t.nodes[near], q)) return Extend::Trapped;
    new_index = t.add(q, near);
    return reach ? Extend::Reached : Extend::Advanced;
  }

  Extend connect(RrtTree& t, const JointConfig& target, int& new_index) const {
    Extend r;
    do {
      r = extend(t, target, new_index);
    } while (r == Extend::Advanced);
    return r;
  }

 private:
  const CollisionWorld& world_;
  const KinematicModel& model_;
  const Corridor* corridor_;
  const PlannerConfig& cfg_;
};

}  // namespace detail

// Valid goal configurations for `goal`: every surviving IK candidate that
// also passes state_valid.
inline std::vector<JointConfig> goal_set(const CollisionWorld& world, const KinematicModel& m, const JointConfig& start,
                                         const Pose& goal, const Corridor* corridor, const PlannerConfig& cfg) {
  std::vector<JointConfig> out;
  for (const auto& c : enumerate_candidates(m, start, goal, cfg.selection, cfg.weights))
    if (state_valid(world, m, c.config, corridor)) out.push_back(c.config);
  return out;
}

inline PlanResult plan(const CollisionWorld& world, const KinematicModel& m, const JointConfig& q_start,
                       const Pose& goal, const std::optional<Corridor>& corridor, const PlannerConfig& cfg,
                       std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  world.validate();
  const Corridor* cor = corridor ? &*corridor : nullptr;
  if (cor) cor->validate();
  if (!state_valid(world, m, q_start, cor)) throw Error(ErrorKind::Validation, "start configuration is invalid");

  PlanResult res;
  res.path.resolution_rad = cfg.resolution_rad;
  res.path.resolution_m = cfg.resolution_m;
  const Pose here = end_effector_pose(m, q_start);
  if (position_error(here, goal) <= 1e-6 && rotation_error(here, goal) <= 1e-6) {
    res.status = PlanStatus::Success;
    res.path.waypoints = {q_start};
    res.goal_set_size = 1;
    res.plan_time_s = std::chrono::duration<double>(clock::now() - t0).count();
    return res;
  }

  const auto goals = goal_set(world, m, q_start, goal, cor, cfg);
  if (goals.empty()) throw Error(ErrorKind::GoalSetEmpty, "no valid goal configuration for the requested pose");
  res.goal_set_size = goals.size();

  detail::Rrt rrt(world, m, cor, cfg);
  detail::RrtTree start_tree, goal_tree;
  start_tree.add(q_start, -1);
  for (const auto& g : goals) goal_tree.add(g, -1);

  std::mt19937_64 rng(seed);
  auto sample = [&]() -> std::optional<JointConfig> {
    for (int r = 0; r < cfg.max_rejections_per_sample; ++r) {
      JointConfig q = random_config(m, rng);
      if (!cor || corridor_contains(*cor, end_effector_position(m, q))) return q;
    }
    return std::nullopt;
  };

  auto finish = [&](const detail::RrtTree& a, int ia, const detail::RrtTree& b, int ib, bool a_is_start) {
    auto pa = a.branch(ia);  // leaf .. root
    auto pb = b.branch(ib);
    std::vector<JointConfig> wps;
    auto& from_start = a_is_start ? pa : pb;
    auto& to_goal = a_is_start ? pb : pa;
    wps.assign(from_start.rbegin(), from_start.rend());
    // The connecting node appears at the end of one branch and the start of
    // the other.
    wps.insert(wps.end(), to_goal.begin() + 1, to_goal.end());
    res.path.waypoints = std::move(wps);
    res.path.ee_length = ee_path_length(m, res.path);
    res.status = PlanStatus::Success;
  };

  detail::RrtTree* ta = &start_tree;
  detail::RrtTree* tb = &goal_tree;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    res.iterations = it + 1;
    if (std::chrono::duration<double>(clock::now() - t0).count() > cfg.budget_s) break;
    const auto q_rand = sample();
    if (!q_rand) continue;
    int ia = -1;
    if (rrt.extend(*ta, *q_rand, ia) != detail::Extend::Trapped) {
      int ib = -1;
      if (rrt.connect(*tb, ta->nodes[ia], ib) == detail::Extend::Reached) {
        finish(*ta, ia, *tb, ib, ta == &start_tree);
        break;
      }
    }
    std::swap(ta, tb);
  }
  res.plan_time_s = std::chrono::duration<double>(clock::now() - t0).count();
  return res;
}

}  // namespace rapid
