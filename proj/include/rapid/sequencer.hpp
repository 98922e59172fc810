#pragma once
// Task sequencing within one disassembly step as a closed tour through the
// home node (index 0) over a Euclidean weight matrix.

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "rapid/error.hpp"
#include "rapid/se3.hpp"

namespace rapid {

inline constexpr int kMaxExactNodes = 16;

struct TspInstance {
  Eigen::MatrixXd weights;  // (n+1) x (n+1), node 0 = home
  int size() const { return static_cast<int>(weights.rows()); }
};

struct Tour {
  std::vector<int> order;  // starts and ends at 0
  double cost = 0.0;
};

// Entries are position-only Euclidean distances; orientation is ignored.
inline TspInstance build_weight_matrix(const std::vector<Pose>& nodes) {
  if (nodes.empty()) throw Error(ErrorKind::Validation, "weight matrix needs at least one node");
  const int n = static_cast<int>(nodes.size());
  TspInstance inst{Eigen::MatrixXd::Zero(n, n)};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      inst.weights(i, j) = inst.weights(j, i) = (nodes[i].position - nodes[j].position).norm();
  return inst;
}

inline TspInstance build_weight_matrix(const Pose& home, const std::vector<Pose>& tasks) {
  std::vector<Pose> all;
  all.reserve(tasks.size() + 1);
  all.push_back(home);
  all.insert(all.end(), tasks.begin(), tasks.end());
  return build_weight_matrix(all);
}

inline double tour_cost(const TspInstance& inst, const std::vector<int>& order) {
  double c = 0.0;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) c += inst.weights(order[i], order[i + 1]);
  return c;
}

// Held-Karp dynamic programme over subsets of the non-home nodes.
inline Tour solve_exact(const TspInstance& inst) {
  const int n = inst.size();
  if (n > kMaxExactNodes)
    throw Error(ErrorKind::Size, "exact solver supports at most " + std::to_string(kMaxExactNodes) +
                                     " nodes, got " + std::to_string(n));
  if (n <= 0) throw Error(ErrorKind::Validation, "empty instance");
  if (n == 1) return {{0, 0}, 0.0};

  const int m = n - 1;  // nodes 1..n-1 mapped to bits 0..m-1
  const std::size_t full = (std::size_t{1} << m);
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> best(full * m, inf);
  std::vector<int8_t> parent(full * m, -1);
  const auto& w = inst.weights;

  for (int j = 0; j < m; ++j) best[(std::size_t{1} << j) * m + j] = w(0, j + 1);
  for (std::size_t set = 1; set < full; ++set) {
    for (int j = 0; j < m; ++j) {
      if (!(set & (std::size_t{1} << j))) continue;
      const double cur = best[set * m + j];
      if (cur == inf) continue;
      for (int k = 0; k < m; ++k) {
        if (set & (std::size_t{1} << k)) continue;
        const std::size_t next = set | (std::size_t{1} << k);
        const double c = cur + w(j + 1, k + 1);
        if (c < best[next * m + k]) {
          best[next * m + k] = c;
          parent[next * m + k] = static_cast<int8_t>(j);
        }
      }
    }
  }

  double cost = inf;
  int last = -1;
  for (int j = 0; j < m; ++j) {
    const double c = best[(full - 1) * m + j] + w(j + 1, 0);
    if (c < cost) {
      cost = c;
      last = j;
    }
  }
  std::vector<int> rev;
  std::size_t set = full - 1;
  while (last >= 0) {
    rev.push_back(last + 1);
    const int p = parent[set * m + last];
    set &= ~(std::size_t{1} << last);
    last = p;
  }
  Tour t;
  t.order.push_back(0);
  t.order.insert(t.order.end(), rev.rbegin(), rev.rend());
  t.order.push_back(0);
  t.cost = tour_cost(inst, t.order);
  return t;
}

inline Tour nearest_neighbor_tour(const TspInstance& inst) {
  const int n = inst.size();
  std::vector<bool> used(n, false);
  Tour t;
  t.order.push_back(0);
  used[0] = true;
  int cur = 0;
  for (int step = 1; step < n; ++step) {
    int nxt = -1;
    for (int j = 0; j < n; ++j)
      if (!used[j] && (nxt < 0 || inst.weights(cur, j) < inst.weights(cur, nxt))) nxt = j;
    used[nxt] = true;
    t.order.push_back(nxt);
    cur = nxt;
  }
  t.order.push_back(0);
  t.cost = tour_cost(inst, t.order);
  return t;
}

// 2-opt until no segment reversal improves the tour. Home stays at both ends.
inline void two_opt(const TspInstance& inst, Tour& t) {
  const auto& w = inst.weights;
  auto& o = t.order;
  const int len = static_cast<int>(o.size());
  bool improved = true;
  while (improved) {
    improved = false;
    for (int i = 0; i + 2 < len; ++i) {
      for (int k = i + 2; k + 1 < len; ++k) {
        const double delta = w(o[i], o[k]) + w(o[i + 1], o[k + 1]) - w(o[i], o[i + 1]) - w(o[k], o[k + 1]);
        if (delta < -1e-12) {
          std::reverse(o.begin() + i + 1, o.begin() + k + 1);
          improved = true;
        }
      }
    }
  }
  t.cost = tour_cost(inst, o);
}

inline Tour solve_heuristic(const TspInstance& inst) {
  if (inst.size() < 1) throw Error(ErrorKind::Validation, "empty instance");
  Tour t = nearest_neighbor_tour(inst);
  two_opt(inst, t);
  return t;
}

enum class SolveMode { Exact, Heuristic, Auto };

inline SolveMode solve_mode_from_string(const std::string& s) {
  if (s == "exact") return SolveMode::Exact;
  if (s == "heuristic") return SolveMode::Heuristic;
  if (s == "auto") return SolveMode::Auto;
  throw Error(ErrorKind::Validation, "unknown solve mode '" + s + "'");
}

inline bool uses_exact(SolveMode mode, int node_count) {
  return mode == SolveMode::Exact || (mode == SolveMode::Auto && node_count <= kMaxExactNodes);
}

inline Tour solve(const TspInstance& inst, SolveMode mode) {
  return uses_exact(mode, inst.size()) ? solve_exact(inst) : solve_heuristic(inst);
}

// Reorders the tasks of one step. `pose_of` maps a task to its pose.
template <typename Task, typename PoseOf>
std::vector<Task> order_tasks(const std::vector<Task>& tasks, const Pose& home, SolveMode mode, PoseOf pose_of,
                              double* tour_cost_out = nullptr) {
  if (tasks.empty()) {
    if (tour_cost_out) *tour_cost_out = 0.0;
    return {};
  }
  std::vector<Pose> poses;
  poses.reserve(tasks.size());
  for (const auto& t : tasks) poses.push_back(pose_of(t));
  const Tour tour = solve(build_weight_matrix(home, poses), mode);
  std::vector<Task> out;
  out.reserve(tasks.size());
  for (std::size_t i = 1; i + 1 < tour.order.size(); ++i) out.push_back(tasks[tour.order[i] - 1]);
  if (tour_cost_out) *tour_cost_out = tour.cost;
  return out;
}

}  // namespace rapid
