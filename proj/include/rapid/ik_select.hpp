#pragma once
// Gantry-offset enumeration of closed-form IK branches, filtering and
// multi-objective scoring.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <ostream>
#include <vector>

#include "rapid/error.hpp"
#include "rapid/kinematics.hpp"

namespace rapid {

struct CostWeights {
  std::array<double, kJoints> joint{0.1, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  double alpha = 1.0;  // joint distance
  double beta = 1.0;   // proximity penalty
  double gamma = 1.0;  // triangle-area penalty

  void validate() const {
    const bool nonneg = std::all_of(joint.begin(), joint.end(), [](double w) { return w >= 0.0; }) &&
                        alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0;
    const bool any = std::any_of(joint.begin(), joint.end(), [](double w) { return w > 0.0; });
    if (!nonneg || !any) throw Error(ErrorKind::Validation, "cost weights must be >= 0 with one > 0");
  }
};

struct SelectionConfig {
  double offset_range = 1.0;       // m, symmetric about the current gantry position
  double offset_step = 0.1;        // m
  double min_clearance = 0.65;     // m, end-effector to gantry plate
  double min_triangle_area = 1e-4; // m^2

  int offset_count() const { return 2 * static_cast<int>(std::llround(offset_range / offset_step)) + 1; }

  void validate() const {
    if (!(offset_step > 0.0)) throw Error(ErrorKind::Validation, "gantry step must be > 0");
    if (offset_range < 0.0) throw Error(ErrorKind::Validation, "gantry range must be >= 0");
    if (min_clearance < 0.0) throw Error(ErrorKind::Validation, "clearance must be >= 0");
  }
};

struct IkCandidate {
  JointConfig config;
  double d_j = 0.0;        // weighted joint distance to the current configuration
  double d_ee = 0.0;       // wrist to gantry plate (m)
  double p_p = 0.0;        // 1 / d_ee
  double clearance = 0.0;  // end-effector to gantry plate (m)
  double a_tri = 0.0;      // plate / forearm / wrist triangle area (m^2)
  double p_a = 0.0;        // 1 / a_tri
  double mu = 0.0;         // manipulability, diagnostic only
  double total_cost = 0.0;
  int offset_index = 0;    // 0 .. offset_count-1, relative offset = (index - count/2) * step
  int branch_index = 0;    // position in the closed-form branch list
};

inline double joint_distance(const JointConfig& a, const JointConfig& b,
                             const std::array<double, kJoints>& w) {
  const JointVector d = a.vector() - b.vector();
  double s = 0.0;
  for (int i = 0; i < kJoints; ++i) s += w[i] * d(i) * d(i);
  return std::sqrt(s);
}

inline double triangle_area(const Vec3& p1, const Vec3& p2, const Vec3& p3) {
  return 0.5 * (p2 - p1).cross(p3 - p1).norm();
}

// Picks the 2*pi representative of each wrapped angle that lies within the
// joint limits and is closest to the reference. Returns nullopt when some
// joint has no in-limit representative.
inline std::optional<ArmAngles> nearest_in_limits(const KinematicModel& m, const ArmAngles& wrapped,
                                                  const ArmAngles& reference) {
  ArmAngles out{};
  for (int i = 0; i < kArmJoints; ++i) {
    const auto& lim = m.arm_limits[i];
    bool found = false;
    double best = 0.0;
    const double base = wrapped[i] + 2.0 * kPi * std::round((reference[i] - wrapped[i]) / (2.0 * kPi));
    for (int k = -2; k <= 2; ++k) {
      const double v = base + 2.0 * kPi * k;
      if (!lim.contains(v)) continue;
      if (!found || std::abs(v - reference[i]) < std::abs(best - reference[i])) {
        best = v;
        found = true;
      }
    }
    if (!found) return std::nullopt;
    out[i] = best;
  }
  return out;
}

// Geometry terms of a configuration; shared by the filter and the scorer.
struct PostureMetrics {
  double d_ee = 0.0;
  double clearance = 0.0;
  double a_tri = 0.0;
};

inline PostureMetrics posture_metrics(const KinematicModel& m, const FrameSet& f) {
  const Vec3 plate = f.gantry_plate.position;
  return {(f.wrist.position - plate).norm(), (f.end_effector.position - plate).norm(),
          triangle_area(plate, f.forearm.position, f.wrist.position)};
}

inline bool passes_filters(const PostureMetrics& pm, const SelectionConfig& cfg) {
  return pm.clearance >= cfg.min_clearance && pm.a_tri >= cfg.min_triangle_area && pm.d_ee > 0.0;
}

inline IkCandidate score_candidate(const KinematicModel& m, const JointConfig& current, const JointConfig& q,
                                   const CostWeights& w) {
  const FrameSet f = forward_kinematics(m, q);
  const PostureMetrics pm = posture_metrics(m, f);
  IkCandidate c;
  c.config = q;
  c.d_j = joint_distance(current, q, w.joint);
  c.d_ee = pm.d_ee;
  c.p_p = 1.0 / pm.d_ee;
  c.clearance = pm.clearance;
  c.a_tri = pm.a_tri;
  c.p_a = 1.0 / pm.a_tri;
  c.mu = manipulability(jacobian(m, q));
  c.total_cost = w.alpha * c.d_j + w.beta * c.p_p + w.gamma * c.p_a;
  return c;
}

struct OffsetReport {
  int offset_index = 0;
  double gantry = 0.0;
  int branches = 0;   // closed-form solutions returned
  int survivors = 0;  // after limit / clearance / area filters
};

struct EnumerationReport {
  std::vector<OffsetReport> offsets;  // one entry per distinct clamped gantry value
  int total_branches() const {
    int n = 0;
    for (const auto& o : offsets) n += o.branches;
    return n;
  }
  int total_survivors() const {
    int n = 0;
    for (const auto& o : offsets) n += o.survivors;
    return n;
  }
};

inline bool candidate_order(const IkCandidate& a, const IkCandidate& b) {
  if (a.total_cost != b.total_cost) return a.total_cost < b.total_cost;
  if (a.d_j != b.d_j) return a.d_j < b.d_j;
  if (a.offset_index != b.offset_index) return a.offset_index < b.offset_index;
  return a.branch_index < b.branch_index;
}

// Evaluates every clamped gantry offset around the current position,
// solves the arm in closed form at each, filters and scores the branches.
// The result is sorted ascending by total cost (ties: d_J, offset, branch).
inline std::vector<IkCandidate> enumerate_candidates(const KinematicModel& m, const JointConfig& current,
                                                     const Pose& target, const SelectionConfig& cfg,
                                                     const CostWeights& w,
                                                     EnumerationReport* report = nullptr) {
  cfg.validate();
  w.validate();
  std::vector<IkCandidate> out;
  const int count = cfg.offset_count();
  const int half = count / 2;
  std::vector<double> seen;
  if (report) report->offsets.clear();

  for (int k = 0; k < count; ++k) {
    const double g = std::clamp(current.gantry + (k - half) * cfg.offset_step, m.gantry_limits.low,
                                m.gantry_limits.high);
    if (std::any_of(seen.begin(), seen.end(), [&](double s) { return std::abs(s - g) < 1e-12; })) continue;
    seen.push_back(g);

    const auto branches = analytic_ik_arm(m, target_in_arm_base(m, g, target));
    OffsetReport rep{k, g, static_cast<int>(branches.size()), 0};
    for (std::size_t b = 0; b < branches.size(); ++b) {
      const auto arm = nearest_in_limits(m, branches[b], current.arm);
      if (!arm) continue;
      const JointConfig q{g, *arm};
      const FrameSet f = forward_kinematics(m, q);
      if (!passes_filters(posture_metrics(m, f), cfg)) continue;
      IkCandidate c = score_candidate(m, current, q, w);
      c.offset_index = k;
      c.branch_index = static_cast<int>(b);
      out.push_back(c);
      ++rep.survivors;
    }
    if (report) report->offsets.push_back(rep);
  }
  std::sort(out.begin(), out.end(), candidate_order);
  return out;
}

inline const IkCandidate& select_best(const std::vector<IkCandidate>& candidates) {
  if (candidates.empty()) throw Error(ErrorKind::NoSolution, "no IK candidate survived the filters");
  return *std::min_element(candidates.begin(), candidates.end(), candidate_order);
}

// CSV dump for offline analysis of the cost terms.
inline void write_candidates_csv(std::ostream& os, const std::vector<IkCandidate>& cs, double step,
                                 int offset_count) {
  os << "offset,branch,gantry,d_j,d_ee,p_p,clearance,a_tri,p_a,mu,total_cost\n";
  for (const auto& c : cs) {
    os << (c.offset_index - offset_count / 2) * step << ',' << c.branch_index << ',' << c.config.gantry << ','
       << c.d_j << ',' << c.d_ee << ',' << c.p_p << ',' << c.clearance << ',' << c.a_tri << ',' << c.p_a << ','
       << c.mu << ',' << c.total_cost << '\n';
  }
}

}  // namespace rapid
