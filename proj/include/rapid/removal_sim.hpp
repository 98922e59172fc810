#pragma once
// Monte-Carlo fastener removal. An attempt succeeds when the lateral
// offset between the commanded tool position and the fastener is within
// the capture radius of the nut-runner extension. Strategies differ in how
// the lateral error is generated and in how many attempts they make.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rapid/error.hpp"
#include "rapid/ibvs.hpp"
#include "rapid/se3.hpp"
#include "rapid/task_synthesis.hpp"

namespace rapid {

enum class Strategy { TaughtIn, OneShotVision, VisualServo };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::TaughtIn: return "taught-in";
    case Strategy::OneShotVision: return "one-shot";
    case Strategy::VisualServo: return "servo";
  }
  return "?";
}

inline Strategy strategy_from_string(const std::string& s) {
  if (s == "taught-in" || s == "taught") return Strategy::TaughtIn;
  if (s == "one-shot" || s == "vision") return Strategy::OneShotVision;
  if (s == "servo" || s == "visual-servo") return Strategy::VisualServo;
  throw Error(ErrorKind::Validation, "unknown strategy '" + s + "'");
}

enum class Extension { Long, Short };

inline Extension extension_from_string(const std::string& s) {
  if (s == "long") return Extension::Long;
  if (s == "short") return Extension::Short;
  throw Error(ErrorKind::Validation, "unknown extension preset '" + s + "'");
}

struct EngagementModel {
  double r_cap_long = 0.004;    // m
  double r_cap_short = 0.0015;  // m
  Extension extension = Extension::Long;
  double contact_force = 10.0;  // N, informational
  double attempt_time = 5.1;    // s, spiral search and unscrewing
  double move_time = 2.0;       // s, travel between fasteners
  double scan_time = 0.42;      // s per attempt, vision strategies
  double servo_setup_time = 0.8;
  double servo_iteration_time = 0.25;

  double r_cap() const { return extension == Extension::Long ? r_cap_long : r_cap_short; }

  void validate() const {
    if (!(r_cap_long > 0.0 && r_cap_short > 0.0)) throw Error(ErrorKind::Validation, "capture radii must be > 0");
    if (!(r_cap_long > r_cap_short))
      throw Error(ErrorKind::Validation, "long extension must capture more than the short one");
    if (attempt_time < 0 || move_time < 0 || scan_time < 0 || servo_setup_time < 0 || servo_iteration_time < 0)
      throw Error(ErrorKind::Validation, "time constants must be >= 0");
  }
};

struct StrategyNoise {
  Strategy strategy = Strategy::TaughtIn;
  double sigma = 0.0;              // m, per-axis lateral error before servoing
  Vec2 bias = Vec2::Zero();        // m
  double fp_rate = 0.0;            // spurious attempts per true fastener
  double duplicate_rate = 0.0;     // repeat attempts per true fastener
  double servo_sigma = 0.0;        // m, per-axis residual after a converged servo
  double depth_corruption_rate = 0.0;
  double depth_corruption_factor = 5.0;
  double servo_depth = 0.4;        // m, camera-to-fastener depth while servoing
  ServoConfig servo{10.0, 0.05, 1e-3, 200};
  HomogeneousTransform ee_in_camera = HomogeneousTransform::translate(0.0, 0.05, 0.4);

  void validate() const {
    if (!(sigma >= 0.0 && servo_sigma >= 0.0)) throw Error(ErrorKind::Validation, "noise sigma must be >= 0");
    for (double r : {fp_rate, duplicate_rate, depth_corruption_rate})
      if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorKind::Validation, "rates must lie in [0, 1]");
    if (!(depth_corruption_factor > 0.0 && servo_depth > 0.0))
      throw Error(ErrorKind::Validation, "depth settings must be > 0");
    if (strategy == Strategy::TaughtIn && (fp_rate > 0.0 || duplicate_rate > 0.0))
      throw Error(ErrorKind::Validation, "taught-in poses have no false positives or duplicates");
    servo.validate();
  }
};

// Lateral offset in the world xy plane; z is closed by force control.
inline bool attempt_removal(const Vec3& true_pos, const Pose& commanded, const EngagementModel& eng) {
  const Vec3 d = commanded.position - true_pos;
  return std::hypot(d.x(), d.y()) <= eng.r_cap();
}

enum class AttemptKind { True, FalsePositive, Duplicate };

inline std::string to_string(AttemptKind k) {
  switch (k) {
    case AttemptKind::True: return "true";
    case AttemptKind::FalsePositive: return "false_positive";
    case AttemptKind::Duplicate: return "duplicate";
  }
  return "?";
}

struct AttemptRecord {
  AttemptKind kind = AttemptKind::True;
  int fastener = -1;  // -1 for false positives
  Vec2 lateral = Vec2::Zero();
  bool success = false;
  double duration_s = 0.0;
  int servo_iterations = 0;
  bool servo_converged = false;
};

struct CampaignResult {
  int fasteners = 0;
  int attempts = 0;
  int successes = 0;
  int false_positive_attempts = 0;
  int duplicate_attempts = 0;
  double success_rate = 0.0;
  double duration_min = 0.0;
  std::vector<AttemptRecord> log;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B9E5ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// The same standard-normal draws are consumed regardless of the noise
// parameters, so campaigns with different sigmas stay coupled.
struct AttemptDraws {
  Vec2 base;
  Vec2 residual;
  double corrupt;
  double fp;
  double dup;
  std::uint64_t servo_seed;

  explicit AttemptDraws(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    base = Vec2(g(rng), g(rng));
    residual = Vec2(g(rng), g(rng));
    corrupt = u(rng);
    fp = u(rng);
    dup = u(rng);
    servo_seed = rng();
  }
};

}  // namespace detail

// One removal attempt on a true fastener with the given strategy.
inline AttemptRecord simulate_attempt(const StrategyNoise& noise, const EngagementModel& eng, std::uint64_t seed) {
  const detail::AttemptDraws d(seed);
  AttemptRecord rec;
  rec.lateral = noise.bias + noise.sigma * d.base;
  rec.duration_s = eng.attempt_time + eng.move_time;
  if (noise.strategy != Strategy::TaughtIn) rec.duration_s += eng.scan_time;
  if (noise.strategy == Strategy::VisualServo) {
    ServoConfig cfg = noise.servo;
    if (d.corrupt < noise.depth_corruption_rate) cfg.depth_bias *= noise.depth_corruption_factor;
    const Vec3 target(0.0, 0.0, 0.0);
    const SimCamera cam =
        SimCamera::scenario(CameraIntrinsics{}, noise.ee_in_camera, target, noise.servo_depth, rec.lateral);
    const ServoResult r = servo_loop(cam, cfg, d.servo_seed);
    rec.servo_iterations = r.iterations;
    rec.servo_converged = r.converged();
    rec.duration_s += eng.servo_setup_time + r.iterations * eng.servo_iteration_time;
    if (r.converged()) rec.lateral = r.lateral_offset() + noise.servo_sigma * d.residual;
  }
  rec.success = rec.lateral.norm() <= eng.r_cap();
  return rec;
}

inline CampaignResult run_campaign(const StrategyNoise& noise, const EngagementModel& eng, int n_fasteners,
                                   std::uint64_t seed, bool keep_log = false) {
  noise.validate();
  eng.validate();
  if (n_fasteners < 1) throw Error(ErrorKind::Validation, "need at least one fastener");
  CampaignResult res;
  res.fasteners = n_fasteners;
  double total_s = 0.0;
  auto record = [&](AttemptRecord r) {
    ++res.attempts;
    total_s += r.duration_s;
    if (keep_log) res.log.push_back(r);
  };
  for (int i = 0; i < n_fasteners; ++i) {
    const std::uint64_t s = detail::mix_seed(seed, static_cast<std::uint64_t>(i));
    AttemptRecord r = simulate_attempt(noise, eng, s);
    r.kind = AttemptKind::True;
    r.fastener = i;
    res.successes += r.success ? 1 : 0;
    record(r);

    const detail::AttemptDraws d(s);
    if (d.dup < noise.duplicate_rate) {
      // A repeat on the same fastener: time is spent, the outcome is moot.
      AttemptRecord dup = simulate_attempt(noise, eng, detail::mix_seed(s, 1));
      dup.kind = AttemptKind::Duplicate;
      dup.fastener = i;
      dup.success = false;
      ++res.duplicate_attempts;
      record(dup);
    }
    if (d.fp < noise.fp_rate) {
      AttemptRecord fp = simulate_attempt(noise, eng, detail::mix_seed(s, 2));
      fp.kind = AttemptKind::FalsePositive;
      fp.fastener = -1;
      fp.success = false;
      ++res.false_positive_attempts;
      record(fp);
    }
  }
  res.success_rate = static_cast<double>(res.successes) / n_fasteners;
  res.duration_min = total_s / 60.0;
  return res;
}

// Campaigns over a plan step: one true fastener per subtask.
inline CampaignResult run_campaign(const DisassemblyStep& step, const StrategyNoise& noise,
                                   const EngagementModel& eng, std::uint64_t seed, bool keep_log = false) {
  return run_campaign(noise, eng, static_cast<int>(step.subtasks.size()), seed, keep_log);
}

inline double mean_success_rate(const StrategyNoise& noise, const EngagementModel& eng, int n,
                                const std::vector<std::uint64_t>& seeds) {
  double acc = 0.0;
  for (auto s : seeds) acc += run_campaign(noise, eng, n, s).success_rate;
  return acc / static_cast<double>(seeds.size());
}

// The parameter tuned by calibration: the lateral sigma, except for the
// servo strategy where it is the post-convergence residual.
inline double& calibrated_parameter(StrategyNoise& n) {
  return n.strategy == Strategy::VisualServo ? n.servo_sigma : n.sigma;
}

// Bisection on the strategy's sigma until the mean Monte-Carlo success
// rate is within `tolerance` of the target.
inline double calibrate_noise(double target_rate, StrategyNoise noise, const EngagementModel& eng, int n,
                              const std::vector<std::uint64_t>& seeds, double tolerance = 0.005) {
  if (!(target_rate > 0.0 && target_rate <= 1.0)) throw Error(ErrorKind::Validation, "target rate must lie in (0, 1]");
  if (seeds.empty()) throw Error(ErrorKind::Validation, "calibration needs at least one seed");
  double& sigma = calibrated_parameter(noise);
  auto rate = [&](double s) {
    sigma = s;
    return mean_success_rate(noise, eng, n, seeds);
  };
  const double r0 = rate(0.0);
  if (r0 < target_rate - tolerance)
    throw Error(ErrorKind::Unreachable, "target success rate exceeds the noise-free rate " + std::to_string(r0));
  if (r0 <= target_rate + tolerance) return 0.0;

  double lo = 0.0, hi = eng.r_cap();
  while (rate(hi) > target_rate) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1.0) throw Error(ErrorKind::Unreachable, "target success rate not reached for sigma up to 1 m");
  }
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rate(mid) > target_rate ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Closed form for an isotropic 2D Gaussian: P(|e| <= r) = 1 - exp(-r^2 / 2 sigma^2).
inline double rayleigh_capture_probability(double r_cap, double sigma) {
  if (sigma <= 0.0) return 1.0;
  return 1.0 - std::exp(-r_cap * r_cap / (2.0 * sigma * sigma));
}

inline double rayleigh_sigma_for_rate(double r_cap, double rate) {
  if (!(rate > 0.0 && rate < 1.0)) throw Error(ErrorKind::Validation, "rate must lie in (0, 1)");
  return r_cap / std::sqrt(-2.0 * std::log(1.0 - rate));
}

}  // namespace rapid
