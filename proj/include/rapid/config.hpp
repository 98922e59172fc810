#pragma once
// Plain-text experiment configuration.
//
//   # comment
//   key = value
//   key = 1 2 3        (lists are whitespace separated)
//
// Keys are unique; unknown keys are rejected so typos do not silently fall
// back to defaults.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rapid/corridor_planner.hpp"
#include "rapid/detection_memory.hpp"
#include "rapid/error.hpp"
#include "rapid/ibvs.hpp"
#include "rapid/ik_select.hpp"
#include "rapid/numeric_ik.hpp"
#include "rapid/removal_sim.hpp"
#include "rapid/sequencer.hpp"

namespace rapid {

class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<config>") {
    Config c;
    std::istringstream in(text);
    std::string line;
    for (int no = 1; std::getline(in, line); ++no) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw Error(ErrorKind::Validation, origin + ":" + std::to_string(no) + ": expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw Error(ErrorKind::Validation, origin + ":" + std::to_string(no) + ": empty key");
      if (!c.values_.emplace(key, value).second)
        throw Error(ErrorKind::Validation, origin + ":" + std::to_string(no) + ": duplicate key '" + key + "'");
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    Config c = parse(ss.str(), path);
    c.base_dir_ = std::filesystem::path(path).parent_path().string();
    return c;
  }

  // Relative paths resolve against the directory of the loaded file.
  std::string get_path(const std::string& key, const std::string& fallback) const {
    const std::filesystem::path p = get_string(key, fallback);
    if (p.empty() || p.is_absolute() || base_dir_.empty()) return p.string();
    return (std::filesystem::path(base_dir_) / p).lexically_normal().string();
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) out.push_back(k);
    return out;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return to_double(key, it->second);
  }

  int get_int(const std::string& key, int fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(it->second, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != it->second.size())
      throw Error(ErrorKind::Validation, "config key '" + key + "': expected an integer, got '" + it->second + "'");
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw Error(ErrorKind::Validation, "config key '" + key + "': expected true/false, got '" + it->second + "'");
  }

  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::istringstream in(it->second);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(to_double(key, tok));
    return out;
  }

  void require_known(const std::set<std::string>& known) const {
    for (const auto& [k, v] : values_)
      if (!known.count(k)) throw Error(ErrorKind::Validation, "unknown config key '" + k + "'");
  }

 private:
  static std::string trim(const std::string& s) {
    auto b = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
    auto e = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
    return b < e ? std::string(b, e) : std::string();
  }

  static double to_double(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size())
      throw Error(ErrorKind::Validation, "config key '" + key + "': expected a number, got '" + text + "'");
    return v;
  }

  std::map<std::string, std::string> values_;
  std::string base_dir_;
};

// --- module settings ---------------------------------------------------------

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "model.path", "home.gantry", "home.arm", "workspace.center",
      "ik.offset_range", "ik.offset_step", "ik.min_clearance", "ik.min_triangle_area", "ik.joint_weights",
      "ik.alpha", "ik.beta", "ik.gamma",
      "dls.max_iterations", "dls.damping", "dls.max_step", "dls.position_tolerance", "dls.rotation_tolerance",
      "dls.clamp_to_limits",
      "sequencer.mode",
      "planner.budget_s", "planner.max_iterations", "planner.step", "planner.resolution_rad",
      "planner.resolution_m", "planner.link_radius", "planner.samples_per_link",
      "corridor.half_width_y", "corridor.half_width_z", "corridor.margin",
      "memory.iou_threshold", "memory.query_radius",
      "detector.recall", "detector.fp_fraction", "detector.position_sigma",
      "camera.fx", "camera.fy", "camera.cx", "camera.cy", "camera.width", "camera.height",
      "servo.gain", "servo.period", "servo.epsilon", "servo.max_iterations", "servo.depth_noise_sigma",
      "servo.invalid_depth_fraction", "servo.depth_samples",
      "removal.extension", "removal.r_cap_long", "removal.r_cap_short", "removal.contact_force",
      "removal.attempt_time", "removal.move_time", "removal.scan_time", "removal.servo_setup_time",
      "removal.servo_iteration_time", "removal.sigma_taught_in", "removal.sigma_one_shot", "removal.servo_sigma",
      "removal.fp_rate", "removal.duplicate_rate", "removal.depth_corruption_rate",
      "removal.depth_corruption_factor", "removal.servo_gain", "removal.servo_depth",
      "server.strategy", "server.plan", "server.seed",
  };
  return keys;
}

inline Vec3 config_vec3(const Config& c, const std::string& key, const Vec3& fallback) {
  const auto v = c.get_doubles(key, {fallback.x(), fallback.y(), fallback.z()});
  if (v.size() != 3) throw Error(ErrorKind::Validation, "config key '" + key + "': expected 3 numbers");
  return {v[0], v[1], v[2]};
}

inline JointConfig home_config(const Config& c) {
  JointConfig q;
  q.gantry = c.get_double("home.gantry", 1.05);
  const auto arm = c.get_doubles("home.arm", {0.0, -1.2, 1.6, -0.4, 1.5708, 0.0});
  if (arm.size() != kArmJoints) throw Error(ErrorKind::Validation, "home.arm needs 6 values");
  std::copy(arm.begin(), arm.end(), q.arm.begin());
  return q;
}

inline Vec3 workspace_center(const Config& c) { return config_vec3(c, "workspace.center", Vec3(1.06, 0.0, 0.0)); }

inline SelectionConfig selection_config(const Config& c) {
  SelectionConfig s;
  s.offset_range = c.get_double("ik.offset_range", s.offset_range);
  s.offset_step = c.get_double("ik.offset_step", s.offset_step);
  s.min_clearance = c.get_double("ik.min_clearance", s.min_clearance);
  s.min_triangle_area = c.get_double("ik.min_triangle_area", s.min_triangle_area);
  s.validate();
  return s;
}

inline CostWeights cost_weights(const Config& c) {
  CostWeights w;
  const auto j = c.get_doubles("ik.joint_weights", {w.joint.begin(), w.joint.end()});
  if (j.size() != kJoints) throw Error(ErrorKind::Validation, "ik.joint_weights needs 7 values");
  std::copy(j.begin(), j.end(), w.joint.begin());
  w.alpha = c.get_double("ik.alpha", w.alpha);
  w.beta = c.get_double("ik.beta", w.beta);
  w.gamma = c.get_double("ik.gamma", w.gamma);
  w.validate();
  return w;
}

inline DlsParams dls_params(const Config& c) {
  DlsParams p;
  p.max_iterations = c.get_int("dls.max_iterations", p.max_iterations);
  p.damping = c.get_double("dls.damping", p.damping);
  p.max_step = c.get_double("dls.max_step", p.max_step);
  p.position_tolerance = c.get_double("dls.position_tolerance", p.position_tolerance);
  p.rotation_tolerance = c.get_double("dls.rotation_tolerance", p.rotation_tolerance);
  p.clamp_to_limits = c.get_bool("dls.clamp_to_limits", p.clamp_to_limits);
  return p;
}

inline SolveMode sequencer_mode(const Config& c) { return solve_mode_from_string(c.get_string("sequencer.mode", "auto")); }

inline PlannerConfig planner_config(const Config& c) {
  PlannerConfig p;
  p.budget_s = c.get_double("planner.budget_s", p.budget_s);
  p.max_iterations = c.get_int("planner.max_iterations", p.max_iterations);
  p.step = c.get_double("planner.step", p.step);
  p.resolution_rad = c.get_double("planner.resolution_rad", p.resolution_rad);
  p.resolution_m = c.get_double("planner.resolution_m", p.resolution_m);
  p.selection = selection_config(c);
  p.weights = cost_weights(c);
  if (!(p.budget_s > 0 && p.step > 0 && p.resolution_rad > 0 && p.resolution_m > 0))
    throw Error(ErrorKind::Validation, "planner budget, step and resolutions must be > 0");
  return p;
}

inline CollisionWorld collision_world(const Config& c) {
  CollisionWorld w = CollisionWorld::reference_cell();
  w.link_radius = c.get_double("planner.link_radius", w.link_radius);
  w.samples_per_link = c.get_int("planner.samples_per_link", w.samples_per_link);
  w.validate();
  return w;
}

inline Corridor corridor_between(const Config& c, const Vec3& start, const Vec3& goal) {
  Corridor k;
  k.start = start;
  k.goal = goal;
  k.half_width_y = c.get_double("corridor.half_width_y", k.half_width_y);
  k.half_width_z = c.get_double("corridor.half_width_z", k.half_width_z);
  k.margin = c.get_double("corridor.margin", k.margin);
  return k;
}

inline MemoryConfig memory_config(const Config& c) {
  MemoryConfig m;
  m.iou_threshold = c.get_double("memory.iou_threshold", m.iou_threshold);
  m.query_radius = c.get_double("memory.query_radius", m.query_radius);
  m.validate();
  return m;
}

inline DetectorRates detector_rates(const Config& c) {
  DetectorRates r;
  r.recall = c.get_double("detector.recall", r.recall);
  r.fp_fraction = c.get_double("detector.fp_fraction", r.fp_fraction);
  r.position_sigma = c.get_double("detector.position_sigma", r.position_sigma);
  r.validate();
  return r;
}

inline CameraIntrinsics camera_intrinsics(const Config& c) {
  CameraIntrinsics k;
  k.fx = c.get_double("camera.fx", k.fx);
  k.fy = c.get_double("camera.fy", k.fy);
  k.cx = c.get_double("camera.cx", k.cx);
  k.cy = c.get_double("camera.cy", k.cy);
  k.width = c.get_int("camera.width", k.width);
  k.height = c.get_int("camera.height", k.height);
  k.validate();
  return k;
}

inline ServoConfig servo_config(const Config& c) {
  ServoConfig s;
  s.gain = c.get_double("servo.gain", s.gain);
  s.period = c.get_double("servo.period", s.period);
  s.epsilon = c.get_double("servo.epsilon", s.epsilon);
  s.max_iterations = c.get_int("servo.max_iterations", s.max_iterations);
  s.depth_noise_sigma = c.get_double("servo.depth_noise_sigma", s.depth_noise_sigma);
  s.invalid_depth_fraction = c.get_double("servo.invalid_depth_fraction", s.invalid_depth_fraction);
  s.depth_samples = c.get_int("servo.depth_samples", s.depth_samples);
  s.validate();
  return s;
}

inline EngagementModel engagement_model(const Config& c) {
  EngagementModel e;
  e.extension = extension_from_string(c.get_string("removal.extension", "long"));
  e.r_cap_long = c.get_double("removal.r_cap_long", e.r_cap_long);
  e.r_cap_short = c.get_double("removal.r_cap_short", e.r_cap_short);
  e.contact_force = c.get_double("removal.contact_force", e.contact_force);
  e.attempt_time = c.get_double("removal.attempt_time", e.attempt_time);
  e.move_time = c.get_double("removal.move_time", e.move_time);
  e.scan_time = c.get_double("removal.scan_time", e.scan_time);
  e.servo_setup_time = c.get_double("removal.servo_setup_time", e.servo_setup_time);
  e.servo_iteration_time = c.get_double("removal.servo_iteration_time", e.servo_iteration_time);
  e.validate();
  return e;
}

inline StrategyNoise strategy_noise(const Config& c, Strategy s) {
  StrategyNoise n;
  n.strategy = s;
  switch (s) {
    case Strategy::TaughtIn:
      n.sigma = c.get_double("removal.sigma_taught_in", 0.001536);
      break;
    case Strategy::OneShotVision:
    case Strategy::VisualServo:
      n.sigma = c.get_double("removal.sigma_one_shot", 0.003044);
      n.fp_rate = c.get_double("removal.fp_rate", 0.08);
      n.duplicate_rate = c.get_double("removal.duplicate_rate", 0.05);
      break;
  }
  if (s == Strategy::VisualServo) {
    n.servo_sigma = c.get_double("removal.servo_sigma", 0.002065);
    n.depth_corruption_rate = c.get_double("removal.depth_corruption_rate", 0.1);
    n.depth_corruption_factor = c.get_double("removal.depth_corruption_factor", 5.0);
    n.servo_depth = c.get_double("removal.servo_depth", n.servo_depth);
    n.servo = servo_config(c);
    n.servo.gain = c.get_double("removal.servo_gain", 10.0);
  }
  n.validate();
  return n;
}

}  // namespace rapid
