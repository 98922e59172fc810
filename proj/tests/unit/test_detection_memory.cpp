#include <gtest/gtest.h>

#include <random>
#include <set>

#include "rapid/detection_memory.hpp"
#include "support.hpp"

using namespace rapid;

namespace {

Aabb box(const Vec3& lo, const Vec3& hi) { return {lo, hi}; }

Detection cube(const std::string& label, const Vec3& c, double side = 0.02, double conf = 0.9) {
  return Detection::from_points(label, box_points(c, Vec3::Constant(side)), conf);
}

std::pair<double, double> binomial_ci95(double p, int n) {
  const double h = 1.96 * std::sqrt(p * (1 - p) / n);
  return {p - h, p + h};
}

}  // namespace

TEST(Iou, IdenticalCubes) { EXPECT_EQ(iou3d(box(Vec3::Zero(), Vec3::Ones()), box(Vec3::Zero(), Vec3::Ones())), 1.0); }

TEST(Iou, Disjoint) { EXPECT_EQ(iou3d(box(Vec3::Zero(), Vec3::Ones()), box(Vec3(2, 0, 0), Vec3(3, 1, 1))), 0.0); }

TEST(Iou, HalfShiftIsOneThird) {
  const Aabb a = box(Vec3::Zero(), Vec3::Ones());
  const Aabb b = box(Vec3(0.5, 0, 0), Vec3(1.5, 1, 1));
  // intersection 0.5, union 1.5
  EXPECT_NEAR(iou3d(a, b), 0.5 / 1.5, 1e-15);
  EXPECT_EQ(iou3d(a, b), iou3d(b, a));
}

TEST(Iou, DegenerateBoxes) {
  const Aabb flat = box(Vec3::Zero(), Vec3(1, 1, 0));
  EXPECT_EQ(iou3d(flat, flat), 1.0);
  EXPECT_EQ(iou3d(flat, box(Vec3::Zero(), Vec3::Ones())), 0.0);
}

TEST(Iou, RandomBoxesMatchVolumeOracle) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    Vec3 a0(u(rng), u(rng), u(rng)), b0(u(rng), u(rng), u(rng));
    const Vec3 a1 = a0 + Vec3(u(rng), u(rng), u(rng)), b1 = b0 + Vec3(u(rng), u(rng), u(rng));
    double inter = 1.0, va = 1.0, vb = 1.0;
    for (int k = 0; k < 3; ++k) {
      inter *= std::max(0.0, std::min(a1[k], b1[k]) - std::max(a0[k], b0[k]));
      va *= a1[k] - a0[k];
      vb *= b1[k] - b0[k];
    }
    const double v = iou3d(box(a0, a1), box(b0, b1));
    EXPECT_NEAR(v, inter / (va + vb - inter), 1e-12);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Insert, DuplicateMerges) {
  DetectionMemory mem;
  const auto a = mem.insert(cube("screw", Vec3(1, 0, 0.85)));
  const auto b = mem.insert(cube("screw", Vec3(1, 0, 0.85)));
  EXPECT_FALSE(a.merged);
  EXPECT_TRUE(b.merged);
  EXPECT_EQ(a.id, b.id);
  EXPECT_EQ(mem.size(), 1u);
  EXPECT_EQ(mem.query_all()[0].observations, 2u);
}

TEST(Insert, FarApartAreSeparate) {
  DetectionMemory mem;
  mem.insert(cube("screw", Vec3(0, 0, 0.85)));
  mem.insert(cube("screw", Vec3(1, 0, 0.85)));
  EXPECT_EQ(mem.size(), 2u);
}

TEST(Insert, LabelGated) {
  DetectionMemory mem;
  mem.insert(cube("screw", Vec3(1, 0, 0.85)));
  mem.insert(cube("nut", Vec3(1, 0, 0.85)));
  EXPECT_EQ(mem.size(), 2u);
}

TEST(Insert, MergeUsesUnionStatistics) {
  DetectionMemory mem;
  const Detection a = cube("screw", Vec3(1, 0, 0.85), 0.02, 0.6);
  const Detection b = cube("screw", Vec3(1.005, 0, 0.85), 0.02, 0.8);
  ASSERT_GE(iou3d(a.bbox, b.bbox), mem.config().iou_threshold);
  mem.insert(a);
  EXPECT_TRUE(mem.insert(b).merged);
  const auto o = mem.query_all().at(0).detection;
  std::vector<Vec3> all = a.points;
  all.insert(all.end(), b.points.begin(), b.points.end());
  Vec3 mean = Vec3::Zero();
  for (const auto& p : all) mean += p;
  mean /= static_cast<double>(all.size());
  EXPECT_LT((o.centroid - mean).norm(), 1e-12);
  EXPECT_EQ(o.bbox, Aabb::of_points(all));
  EXPECT_EQ(o.confidence, 0.8);
  EXPECT_EQ(o.points.size(), all.size());
  EXPECT_EQ(mem.nearest(mean), std::optional<std::uint64_t>(0));
  EXPECT_EQ(mem.index_size(), 1u);
}

TEST(Insert, BelowThresholdAdds) {
  DetectionMemory mem;
  mem.insert(cube("screw", Vec3(1, 0, 0.85)));
  // shift 0.015 on a 0.02 cube: IoU = 0.005/0.035 < 0.3
  EXPECT_FALSE(mem.insert(cube("screw", Vec3(1.015, 0, 0.85))).merged);
  EXPECT_EQ(mem.size(), 2u);
}

TEST(Insert, PointCloudBounded) {
  DetectionMemory mem;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 0.003);
  for (int k = 0; k < 200; ++k) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(Vec3(1 + g(rng), g(rng), 0.85 + g(rng)));
    mem.insert(Detection::from_points("screw", pts, 0.9));
  }
  for (const auto& o : mem.query_all()) EXPECT_LE(o.detection.points.size(), kMaxPointsPerObject);
}

TEST(Insert, CountGrowsByAtMostOne) {
  DetectionMemory mem;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.3);
  for (int k = 0; k < 500; ++k) {
    const std::size_t before = mem.size();
    mem.insert(cube(k % 2 ? "screw" : "nut", Vec3(u(rng), u(rng), 0.85)));
    EXPECT_LE(mem.size(), before + 1);
    EXPECT_GE(mem.size(), before);
    EXPECT_EQ(mem.index_size(), mem.size());
  }
}

TEST(Query, EmptyMemory) {
  DetectionMemory mem;
  EXPECT_TRUE(mem.query_all().empty());
  EXPECT_TRUE(mem.query_by_label("screw").empty());
}

TEST(Query, LabelsPartitionAll) {
  DetectionMemory mem;
  for (int i = 0; i < 10; ++i) mem.insert(cube(i % 3 ? "screw" : "nut", Vec3(0.1 * i, 0, 0.85)));
  const auto all = mem.query_all();
  EXPECT_EQ(all.size(), 10u);
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_LT(all[i - 1].id, all[i].id);
  for (const auto& o : all) EXPECT_TRUE(o.detection.bbox.contains(o.detection.centroid));
  const auto s = mem.query_by_label("screw"), n = mem.query_by_label("nut");
  EXPECT_EQ(s.size() + n.size(), all.size());
  for (const auto& o : s) EXPECT_EQ(o.detection.label, "screw");
  EXPECT_TRUE(mem.query_by_label("bolt").empty());
}

TEST(Query, SnapshotJson) {
  DetectionMemory mem;
  mem.insert(cube("screw", Vec3(1, 0, 0.85)));
  const auto j = memory_snapshot_json(mem);
  ASSERT_EQ(j["objects"].size(), 1u);
  EXPECT_EQ(j["objects"][0]["label"], "screw");
  EXPECT_EQ(j["objects"][0]["point_count"], 9);
  EXPECT_EQ(j["objects"][0]["bbox"].size(), 6u);
}

TEST(KdTree, NearestMatchesLinearScan) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  KdTree3 tree;
  std::vector<Vec3> pts;
  for (std::uint64_t i = 0; i < 500; ++i) {
    pts.emplace_back(u(rng), u(rng), u(rng));
    tree.insert(i, pts.back());
  }
  // move some keys and erase others
  std::set<std::uint64_t> erased;
  for (std::uint64_t i = 0; i < 500; i += 7) {
    pts[i] = Vec3(u(rng), u(rng), u(rng));
    tree.insert(i, pts[i]);
  }
  for (std::uint64_t i = 3; i < 500; i += 11) {
    tree.erase(i);
    erased.insert(i);
  }
  for (int t = 0; t < 1000; ++t) {
    const Vec3 q(u(rng), u(rng), u(rng));
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i < pts.size(); ++i)
      if (!erased.count(i)) best = std::min(best, (pts[i] - q).norm());
    const auto got = tree.nearest(q);
    ASSERT_TRUE(got);
    EXPECT_DOUBLE_EQ((pts[*got] - q).norm(), best);
    std::vector<std::uint64_t> expected;
    for (std::uint64_t i = 0; i < pts.size(); ++i)
      if (!erased.count(i) && (pts[i] - q).norm() <= 0.2) expected.push_back(i);
    EXPECT_EQ(tree.radius_search(q, 0.2), expected);
  }
}

TEST(Detector, PerfectRatesReproduceTruth) {
  std::vector<GroundTruthItem> truth;
  for (int i = 0; i < 20; ++i) truth.push_back({"screw", Vec3(0.1 * i, 0, 0.85), Vec3::Constant(0.02)});
  DetectorRates r;
  r.recall = 1.0;
  r.fp_fraction = 0.0;
  r.position_sigma = 0.0;
  const auto batch = simulate_detections(truth, r, 5);
  ASSERT_EQ(batch.detections.size(), truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    EXPECT_LT((batch.detections[i].centroid - truth[i].position).norm(), 1e-15);
    EXPECT_EQ(batch.source[i], static_cast<int>(i));
  }
}

TEST(Detector, ZeroRecallOnlyFalsePositives) {
  std::vector<GroundTruthItem> truth(100, {"screw", Vec3(1, 0, 0.85), Vec3::Constant(0.02)});
  DetectorRates r;
  r.recall = 0.0;
  const auto batch = simulate_detections(truth, r, 6);
  EXPECT_EQ(batch.true_count(), 0u);
  for (const auto& d : batch.detections) EXPECT_TRUE(r.fp_region.contains(d.centroid));
}

TEST(Detector, RatesWithinBinomialInterval) {
  std::vector<GroundTruthItem> truth;
  for (int i = 0; i < 10000; ++i)
    truth.push_back({i % 2 ? "screw" : "nut", Vec3(0.0002 * i, 0, 0.85), Vec3::Constant(0.02)});
  const DetectorRates r;
  const auto batch = simulate_detections(truth, r, 7);
  const auto [lo, hi] = binomial_ci95(r.recall, 10000);
  const double recall = batch.true_count() / 10000.0;
  EXPECT_GE(recall, lo);
  EXPECT_LE(recall, hi);
  const auto [flo, fhi] = binomial_ci95(r.fp_fraction, 10000);
  const double fp = batch.false_positive_count() / 10000.0;
  EXPECT_GE(fp, flo);
  EXPECT_LE(fp, fhi);
}

TEST(Detector, NoiseStandardDeviation) {
  std::vector<GroundTruthItem> truth(5000, {"screw", Vec3(1, 0, 0.85), Vec3::Constant(0.02)});
  DetectorRates r;
  r.recall = 1.0;
  r.fp_fraction = 0.0;
  r.position_sigma = 0.002;
  const auto batch = simulate_detections(truth, r, 8);
  double ss = 0.0;
  for (const auto& d : batch.detections) ss += (d.centroid - truth[0].position).squaredNorm();
  // per-axis variance estimate, chi-square with 15000 dof: 4 sigma band is about 4.6%
  EXPECT_NEAR(std::sqrt(ss / (3.0 * batch.detections.size())), 0.002, 0.002 * 0.05);
}

TEST(Detector, Deterministic) {
  std::vector<GroundTruthItem> truth(50, {"screw", Vec3(1, 0, 0.85), Vec3::Constant(0.02)});
  const auto a = simulate_detections(truth, {}, 9), b = simulate_detections(truth, {}, 9);
  ASSERT_EQ(a.detections.size(), b.detections.size());
  for (std::size_t i = 0; i < a.detections.size(); ++i) EXPECT_EQ(a.detections[i].centroid, b.detections[i].centroid);
}

TEST(Detector, RejectsBadRates) {
  DetectorRates r;
  r.recall = 1.5;
  EXPECT_THROW(simulate_detections({}, r, 1), Error);
}

TEST(GroundTruth, FixtureLoads) {
  const auto items = load_ground_truth(rapid::test::source_path("data/fastener_layout.json"));
  EXPECT_EQ(items.size(), 78u);
  EXPECT_THROW(load_ground_truth("/nonexistent.json"), Error);
}

TEST(Memory, FusesRepeatedScans) {
  const auto truth = load_ground_truth(rapid::test::source_path("data/fastener_layout.json"));
  DetectorRates r;
  r.fp_fraction = 0.0;
  r.position_sigma = 0.001;
  DetectionMemory mem;
  for (std::uint64_t s = 0; s < 5; ++s)
    for (const auto& d : simulate_detections(truth, r, 100 + s).detections) mem.insert(d);
  EXPECT_EQ(mem.size(), truth.size());
}
