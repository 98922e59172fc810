#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "rapid/sequencer.hpp"

using namespace rapid;

namespace {

Pose at(double x, double y, double z = 0.0) { return {Vec3(x, y, z), UnitQuaternion::identity()}; }

std::vector<Pose> random_poses(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<Pose> out;
  for (int i = 0; i < n; ++i) out.push_back(at(u(rng), u(rng), u(rng) * 0.1));
  return out;
}

// Minimum over every ordering of the non-home nodes.
double brute_force(const TspInstance& inst) {
  std::vector<int> perm(inst.size() - 1);
  std::iota(perm.begin(), perm.end(), 1);
  double best = std::numeric_limits<double>::infinity();
  do {
    std::vector<int> order{0};
    order.insert(order.end(), perm.begin(), perm.end());
    order.push_back(0);
    best = std::min(best, tour_cost(inst, order));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

void expect_valid_tour(const Tour& t, int n) {
  ASSERT_EQ(static_cast<int>(t.order.size()), n + 1);
  EXPECT_EQ(t.order.front(), 0);
  EXPECT_EQ(t.order.back(), 0);
  std::vector<int> inner(t.order.begin() + 1, t.order.end() - 1);
  std::sort(inner.begin(), inner.end());
  for (int i = 0; i < n - 1; ++i) EXPECT_EQ(inner[i], i + 1);
}

}  // namespace

TEST(WeightMatrix, ThreeFourFive) {
  const auto inst = build_weight_matrix({at(0, 0), at(3, 4)});
  EXPECT_DOUBLE_EQ(inst.weights(0, 1), 5.0);
}

TEST(WeightMatrix, SymmetricZeroDiagonal) {
  std::mt19937_64 rng(1);
  const auto inst = build_weight_matrix(random_poses(rng, 9));
  EXPECT_EQ(inst.weights, inst.weights.transpose());
  EXPECT_EQ(inst.weights.diagonal().cwiseAbs().maxCoeff(), 0.0);
}

TEST(WeightMatrix, PermutationConsistent) {
  std::mt19937_64 rng(2);
  auto poses = random_poses(rng, 6);
  const auto a = build_weight_matrix(poses);
  std::vector<int> p{3, 0, 5, 1, 4, 2};
  std::vector<Pose> shuffled;
  for (int i : p) shuffled.push_back(poses[i]);
  const auto b = build_weight_matrix(shuffled);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) EXPECT_EQ(b.weights(i, j), a.weights(p[i], p[j]));
}

TEST(WeightMatrix, IgnoresOrientation) {
  const Pose a{Vec3(1, 0, 0), UnitQuaternion::from_axis_angle(Vec3::UnitZ(), 1.0)};
  const auto inst = build_weight_matrix({at(0, 0), a});
  EXPECT_DOUBLE_EQ(inst.weights(0, 1), 1.0);
}

TEST(Exact, ThreeNodesPerimeter) {
  const auto inst = build_weight_matrix({at(0, 0), at(3, 0), at(0, 4)});
  EXPECT_NEAR(solve_exact(inst).cost, 12.0, 1e-12);
}

TEST(Exact, UnitSquare) {
  const auto inst = build_weight_matrix({at(0, 0), at(1, 1), at(1, 0), at(0, 1)});
  const Tour t = solve_exact(inst);
  expect_valid_tour(t, 4);
  EXPECT_NEAR(t.cost, 4.0, 1e-12);
}

TEST(Exact, MatchesBruteForce) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + trial % 6;
    const auto inst = build_weight_matrix(random_poses(rng, n));
    const Tour t = solve_exact(inst);
    expect_valid_tour(t, n);
    EXPECT_NEAR(t.cost, brute_force(inst), 1e-9);
    EXPECT_NEAR(t.cost, tour_cost(inst, t.order), 1e-12);
  }
}

TEST(Exact, RefusesLargeInstances) {
  std::mt19937_64 rng(4);
  const auto inst = build_weight_matrix(random_poses(rng, 17));
  try {
    solve_exact(inst);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Size);
  }
  EXPECT_NO_THROW(solve_exact(build_weight_matrix(random_poses(rng, 16))));
}

TEST(Exact, TranslationInvariant) {
  std::mt19937_64 rng(5);
  auto poses = random_poses(rng, 8);
  const double a = solve_exact(build_weight_matrix(poses)).cost;
  for (auto& p : poses) p.position += Vec3(10, -3, 2);
  EXPECT_NEAR(solve_exact(build_weight_matrix(poses)).cost, a, 1e-9);
}

TEST(Heuristic, TwoNodes) {
  const auto inst = build_weight_matrix({at(0, 0), at(0, 2)});
  const Tour t = solve_heuristic(inst);
  EXPECT_EQ(t.order, (std::vector<int>{0, 1, 0}));
  EXPECT_DOUBLE_EQ(t.cost, 4.0);
}

TEST(Heuristic, CollinearIsOptimal) {
  const auto inst = build_weight_matrix({at(0, 0), at(1, 0), at(2, 0), at(3, 0), at(4, 0)});
  EXPECT_NEAR(solve_heuristic(inst).cost, solve_exact(inst).cost, 1e-12);
}

TEST(Heuristic, WithinTenPercentMostOfTheTime) {
  std::mt19937_64 rng(6);
  int good = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + trial % 10;
    const auto inst = build_weight_matrix(random_poses(rng, n));
    const double exact = solve_exact(inst).cost;
    const Tour h = solve_heuristic(inst);
    expect_valid_tour(h, n);
    EXPECT_GE(h.cost, exact - 1e-9);
    good += h.cost <= 1.10 * exact ? 1 : 0;
  }
  EXPECT_GE(good, 190);
}

TEST(Heuristic, TwoOptLocalOptimum) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = build_weight_matrix(random_poses(rng, 25));
    const Tour t = solve_heuristic(inst);
    const auto& o = t.order;
    for (std::size_t i = 1; i + 1 < o.size(); ++i)
      for (std::size_t k = i + 1; k + 1 < o.size(); ++k) {
        std::vector<int> alt = o;
        std::reverse(alt.begin() + i, alt.begin() + k + 1);
        EXPECT_GE(tour_cost(inst, alt), t.cost - 1e-9);
      }
  }
}

TEST(Heuristic, NeverWorseThanNearestNeighbour) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = build_weight_matrix(random_poses(rng, 30));
    EXPECT_LE(solve_heuristic(inst).cost, nearest_neighbor_tour(inst).cost + 1e-12);
  }
}

TEST(OrderTasks, SingleTask) {
  const std::vector<Pose> tasks{at(1, 1)};
  const auto out = order_tasks(tasks, at(0, 0), SolveMode::Auto, [](const Pose& p) { return p; });
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].position, tasks[0].position);
}

TEST(OrderTasks, AutoThreshold) {
  EXPECT_TRUE(uses_exact(SolveMode::Auto, 8 + 1));
  EXPECT_FALSE(uses_exact(SolveMode::Auto, 20 + 1));
  EXPECT_TRUE(uses_exact(SolveMode::Exact, 3));
  EXPECT_FALSE(uses_exact(SolveMode::Heuristic, 3));
  std::mt19937_64 rng(9);
  const auto poses = random_poses(rng, 20);
  EXPECT_NO_THROW(order_tasks(poses, at(0, 0), SolveMode::Auto, [](const Pose& p) { return p; }));
  EXPECT_THROW(order_tasks(poses, at(0, 0), SolveMode::Exact, [](const Pose& p) { return p; }), Error);
}

TEST(OrderTasks, OutputIsPermutation) {
  std::mt19937_64 rng(10);
  std::vector<int> ids(12);
  std::iota(ids.begin(), ids.end(), 100);
  const auto poses = random_poses(rng, 12);
  double cost = 0.0;
  auto out = order_tasks(ids, at(0, 0), SolveMode::Auto, [&](int id) { return poses[id - 100]; }, &cost);
  EXPECT_GT(cost, 0.0);
  std::sort(out.begin(), out.end());
  EXPECT_EQ(out, ids);
}

TEST(SolveMode, Parse) {
  EXPECT_EQ(solve_mode_from_string("auto"), SolveMode::Auto);
  EXPECT_THROW(solve_mode_from_string("magic"), Error);
}
