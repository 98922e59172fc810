#pragma once
// Spatial memory of labelled 3D detections. New detections are merged
// into the best-overlapping prior object of the same label (IoU >= tau)
// among the kD-tree neighbours of their centroid; otherwise they are
// stored as new objects.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <nlohmann/json.hpp>
#include <random>
#include <string>
#include <vector>

#include "rapid/error.hpp"
#include "rapid/kdtree.hpp"
#include "rapid/se3.hpp"

namespace rapid {

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  double volume() const {
    const Vec3 e = (max - min).cwiseMax(0.0);
    return e.x() * e.y() * e.z();
  }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  bool valid() const { return (min.array() <= max.array()).all(); }
  bool operator==(const Aabb& o) const { return min == o.min && max == o.max; }

  static Aabb of_points(const std::vector<Vec3>& pts) {
    Aabb b{pts.front(), pts.front()};
    for (const auto& p : pts) {
      b.min = b.min.cwiseMin(p);
      b.max = b.max.cwiseMax(p);
    }
    return b;
  }
};

// Volume IoU. Zero-volume boxes count as empty (IoU 0) except that two
// identical degenerate boxes have IoU 1.
inline double iou3d(const Aabb& a, const Aabb& b) {
  if (a == b) return 1.0;
  const Vec3 lo = a.min.cwiseMax(b.min);
  const Vec3 hi = a.max.cwiseMin(b.max);
  const Vec3 e = (hi - lo).cwiseMax(0.0);
  const double inter = e.x() * e.y() * e.z();
  const double uni = a.volume() + b.volume() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

inline constexpr std::size_t kMaxPointsPerObject = 512;

struct Detection {
  std::string label;
  std::vector<Vec3> points;
  Vec3 centroid = Vec3::Zero();
  Aabb bbox;
  double confidence = 0.5;

  // Builds centroid and tight box from the points.
  static Detection from_points(std::string label, std::vector<Vec3> pts, double confidence) {
    if (pts.empty()) throw Error(ErrorKind::Validation, "detection needs at least one point");
    if (!(confidence > 0.0 && confidence < 1.0))
      throw Error(ErrorKind::Validation, "confidence must lie in (0,1)");
    Detection d;
    d.label = std::move(label);
    d.points = std::move(pts);
    d.confidence = confidence;
    d.refresh();
    return d;
  }

  void refresh() {
    Vec3 sum = Vec3::Zero();
    for (const auto& p : points) sum += p;
    centroid = sum / static_cast<double>(points.size());
    bbox = Aabb::of_points(points);
  }
};

struct MemoryConfig {
  double iou_threshold = 0.3;  // tau
  double query_radius = 0.05;  // m

  void validate() const {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
      throw Error(ErrorKind::Validation, "IoU threshold must lie in (0,1]");
    if (!(query_radius > 0.0)) throw Error(ErrorKind::Validation, "query radius must be > 0");
  }
};

struct StoredObject {
  std::uint64_t id = 0;
  Detection detection;
  std::size_t observations = 1;
};

struct InsertResult {
  bool merged = false;
  std::uint64_t id = 0;
};

// Single writer, many readers: callers serialise inserts externally.
class DetectionMemory {
 public:
  explicit DetectionMemory(MemoryConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  const MemoryConfig& config() const { return cfg_; }
  std::size_t size() const { return objects_.size(); }
  std::size_t index_size() const { return tree_.size(); }

  InsertResult insert(const Detection& det) {
    double best_iou = -1.0;
    std::uint64_t best_id = 0;
    for (std::uint64_t id : tree_.radius_search(det.centroid, cfg_.query_radius)) {
      const StoredObject& o = objects_.at(id);
      if (o.detection.label != det.label) continue;
      const double iou = iou3d(o.detection.bbox, det.bbox);
      if (iou > best_iou) {
        best_iou = iou;
        best_id = id;
      }
    }
    if (best_iou >= cfg_.iou_threshold) {
      StoredObject& o = objects_.at(best_id);
      merge_into(o.detection, det);
      ++o.observations;
      tree_.insert(best_id, o.detection.centroid);
      return {true, best_id};
    }
    const std::uint64_t id = next_id_++;
    StoredObject o{id, det, 1};
    subsample(o.detection.points);
    o.detection.refresh();
    tree_.insert(id, o.detection.centroid);
    objects_.emplace(id, std::move(o));
    return {false, id};
  }

  // Snapshot ordered by object id.
  std::vector<StoredObject> query_all() const {
    std::vector<StoredObject> out;
    out.reserve(objects_.size());
    for (const auto& [id, o] : objects_) out.push_back(o);
    return out;
  }

  std::vector<StoredObject> query_by_label(const std::string& label) const {
    std::vector<StoredObject> out;
    for (const auto& [id, o] : objects_)
      if (o.detection.label == label) out.push_back(o);
    return out;
  }

  std::optional<std::uint64_t> nearest(const Vec3& p) const { return tree_.nearest(p); }

 private:
  static void merge_into(Detection& dst, const Detection& src) {
    dst.points.insert(dst.points.end(), src.points.begin(), src.points.end());
    // Centroid and box of the union, computed before subsampling.
    dst.refresh();
    const Vec3 c = dst.centroid;
    const Aabb b = dst.bbox;
    subsample(dst.points);
    dst.centroid = c;
    dst.bbox = b;
    dst.confidence = std::max(dst.confidence, src.confidence);
  }

  // Keeps an evenly strided subset; the box extremes are not preserved, so
  // callers store centroid/box from the full set.
  static void subsample(std::vector<Vec3>& pts) {
    if (pts.size() <= kMaxPointsPerObject) return;
    std::vector<Vec3> out;
    out.reserve(kMaxPointsPerObject);
    const double stride = static_cast<double>(pts.size()) / kMaxPointsPerObject;
    for (std::size_t i = 0; i < kMaxPointsPerObject; ++i) out.push_back(pts[static_cast<std::size_t>(i * stride)]);
    pts = std::move(out);
  }

  MemoryConfig cfg_;
  std::map<std::uint64_t, StoredObject> objects_;
  KdTree3 tree_;
  std::uint64_t next_id_ = 0;
};

inline nlohmann::json memory_snapshot_json(const DetectionMemory& mem) {
  nlohmann::json objs = nlohmann::json::array();
  for (const auto& o : mem.query_all()) {
    const auto& d = o.detection;
    objs.push_back({{"id", o.id},
                    {"label", d.label},
                    {"centroid", vec_to_json(d.centroid)},
                    {"bbox", {d.bbox.min.x(), d.bbox.min.y(), d.bbox.min.z(), d.bbox.max.x(), d.bbox.max.y(),
                              d.bbox.max.z()}},
                    {"confidence", d.confidence},
                    {"point_count", d.points.size()},
                    {"observations", o.observations}});
  }
  return {{"objects", objs}};
}

// --- simulated detector ------------------------------------------------------

struct GroundTruthItem {
  std::string label;
  Vec3 position = Vec3::Zero();  // centre of the true box
  Vec3 size = Vec3::Constant(0.02);
};

struct DetectorRates {
  double recall = 0.97;
  double fp_fraction = 0.08;  // expected false positives per ground-truth item
  double position_sigma = 0.002;  // m, isotropic centroid noise
  Aabb fp_region{Vec3(0.0, -0.6, 0.85), Vec3(2.1, 0.6, 0.9)};

  void validate() const {
    if (!(recall >= 0.0 && recall <= 1.0)) throw Error(ErrorKind::Validation, "recall must lie in [0,1]");
    if (!(fp_fraction >= 0.0 && fp_fraction <= 1.0))
      throw Error(ErrorKind::Validation, "fp fraction must lie in [0,1]");
    if (position_sigma < 0.0) throw Error(ErrorKind::Validation, "position noise must be >= 0");
  }
};

struct DetectionBatch {
  std::vector<Detection> detections;
  std::vector<int> source;  // ground-truth index per detection, -1 for false positives
  std::size_t true_count() const {
    return static_cast<std::size_t>(std::count_if(source.begin(), source.end(), [](int s) { return s >= 0; }));
  }
  std::size_t false_positive_count() const { return source.size() - true_count(); }
};

// Corners plus centre of a box: the mean is the box centre and the tight
// box is the box itself.
inline std::vector<Vec3> box_points(const Vec3& center, const Vec3& size) {
  std::vector<Vec3> pts;
  pts.reserve(9);
  const Vec3 h = 0.5 * size;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) pts.push_back(center + Vec3(sx * h.x(), sy * h.y(), sz * h.z()));
  pts.push_back(center);
  return pts;
}

// Each item is emitted with probability `recall`, shifted by isotropic
// Gaussian noise. Independently, each item slot spawns a false positive
// with probability `fp_fraction`, placed uniformly in `fp_region` with a
// label drawn from the ground-truth vocabulary.
inline DetectionBatch simulate_detections(const std::vector<GroundTruthItem>& truth, const DetectorRates& rates,
                                          std::uint64_t seed) {
  rates.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> conf_true(0.5, 0.99);
  std::uniform_real_distribution<double> conf_fp(0.3, 0.7);

  std::vector<std::string> vocab;
  for (const auto& t : truth)
    if (std::find(vocab.begin(), vocab.end(), t.label) == vocab.end()) vocab.push_back(t.label);

  DetectionBatch batch;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto& t = truth[i];
    const double u_emit = unit(rng);
    const Vec3 noise(gauss(rng), gauss(rng), gauss(rng));
    const double c_true = conf_true(rng);
    const double u_fp = unit(rng);
    const Vec3 u_pos(unit(rng), unit(rng), unit(rng));
    const double c_fp = conf_fp(rng);
    const double u_label = unit(rng);

    if (u_emit < rates.recall) {
      batch.detections.push_back(
          Detection::from_points(t.label, box_points(t.position + rates.position_sigma * noise, t.size), c_true));
      batch.source.push_back(static_cast<int>(i));
    }
    if (u_fp < rates.fp_fraction) {
      const Vec3 p = rates.fp_region.min + (rates.fp_region.max - rates.fp_region.min).cwiseProduct(u_pos);
      const auto li = std::min(vocab.size() - 1, static_cast<std::size_t>(u_label * vocab.size()));
      batch.detections.push_back(Detection::from_points(vocab[li], box_points(p, t.size), c_fp));
      batch.source.push_back(-1);
    }
  }
  return batch;
}

// Fastener layout file: {"items":[{"label":..,"position":[x,y,z],"size":[sx,sy,sz]}]}
inline std::vector<GroundTruthItem> ground_truth_from_json(const nlohmann::json& j) {
  std::vector<GroundTruthItem> out;
  try {
    for (const auto& it : j.at("items")) {
      GroundTruthItem g;
      g.label = it.at("label").get<std::string>();
      g.position = vec_from_json(it.at("position"));
      if (it.contains("size")) g.size = vec_from_json(it.at("size"));
      out.push_back(g);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("ground truth: ") + e.what());
  }
  return out;
}

inline std::vector<GroundTruthItem> load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation, path + ": " + e.what());
  }
  return ground_truth_from_json(j);
}

}  // namespace rapid
