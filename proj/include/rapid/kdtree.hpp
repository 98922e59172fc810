#pragma once
// Dynamic 3D kD-tree keyed by integer ids. Erasure marks nodes dead; the
// tree is rebuilt balanced once dead nodes outnumber live ones.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "rapid/se3.hpp"

namespace rapid {

class KdTree3 {
 public:
  void insert(std::uint64_t id, const Vec3& p) {
    erase(id);
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back({p, id, -1, -1, 0, true});
    index_[id] = idx;
    if (root_ < 0) {
      root_ = idx;
    } else {
      int cur = root_;
      while (true) {
        Node& n = nodes_[cur];
        const int axis = n.axis;
        int& child = p[axis] < n.point[axis] ? n.left : n.right;
        if (child < 0) {
          child = idx;
          nodes_[idx].axis = (axis + 1) % 3;
          break;
        }
        cur = child;
      }
    }
    ++live_;
  }

  bool erase(std::uint64_t id) {
    auto it = index_.find(id);
    if (it == index_.end()) return false;
    nodes_[it->second].alive = false;
    index_.erase(it);
    --live_;
    if (nodes_.size() > 32 && nodes_.size() > 2 * live_) rebuild();
    return true;
  }

  std::size_t size() const { return live_; }
  bool contains(std::uint64_t id) const { return index_.count(id) != 0; }

  // Ids whose key lies within `radius` of `q`, ascending by id.
  std::vector<std::uint64_t> radius_search(const Vec3& q, double radius) const {
    std::vector<std::uint64_t> out;
    radius_rec(root_, q, radius * radius, radius, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Nearest live key (ties broken by smaller id).
  std::optional<std::uint64_t> nearest(const Vec3& q) const {
    Best b;
    nearest_rec(root_, q, b);
    if (!b.found) return std::nullopt;
    return b.id;
  }

 private:
  struct Node {
    Vec3 point;
    std::uint64_t id;
    int left, right;
    int axis;
    bool alive;
  };
  struct Best {
    bool found = false;
    double d2 = std::numeric_limits<double>::infinity();
    std::uint64_t id = 0;
  };

  void radius_rec(int ni, const Vec3& q, double r2, double r, std::vector<std::uint64_t>& out) const {
    if (ni < 0) return;
    const Node& n = nodes_[ni];
    if (n.alive && (n.point - q).squaredNorm() <= r2) out.push_back(n.id);
    const double diff = q[n.axis] - n.point[n.axis];
    if (diff < 0) {
      radius_rec(n.left, q, r2, r, out);
      if (-diff <= r) radius_rec(n.right, q, r2, r, out);
    } else {
      radius_rec(n.right, q, r2, r, out);
      if (diff <= r) radius_rec(n.left, q, r2, r, out);
    }
  }

  void nearest_rec(int ni, const Vec3& q, Best& b) const {
    if (ni < 0) return;
    const Node& n = nodes_[ni];
    if (n.alive) {
      const double d2 = (n.point - q).squaredNorm();
      if (!b.found || d2 < b.d2 || (d2 == b.d2 && n.id < b.id)) b = {true, d2, n.id};
    }
    const double diff = q[n.axis] - n.point[n.axis];
    const int near = diff < 0 ? n.left : n.right;
    const int far = diff < 0 ? n.right : n.left;
    nearest_rec(near, q, b);
    if (diff * diff <= b.d2) nearest_rec(far, q, b);
  }

  void rebuild() {
    std::vector<Node> live;
    live.reserve(live_);
    for (const Node& n : nodes_)
      if (n.alive) live.push_back(n);
    nodes_.clear();
    index_.clear();
    root_ = build(live, 0, static_cast<int>(live.size()), 0);
  }

  int build(std::vector<Node>& pts, int lo, int hi, int axis) {
    if (lo >= hi) return -1;
    const int mid = (lo + hi) / 2;
    std::nth_element(pts.begin() + lo, pts.begin() + mid, pts.begin() + hi,
                     [axis](const Node& a, const Node& b) { return a.point[axis] < b.point[axis]; });
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back({pts[mid].point, pts[mid].id, -1, -1, axis, true});
    index_[pts[mid].id] = idx;
    // Equal keys may sit on either side after nth_element; the search
    // descends both sides whenever |diff| <= radius, so that is harmless.
    const int l = build(pts, lo, mid, (axis + 1) % 3);
    const int r = build(pts, mid + 1, hi, (axis + 1) % 3);
    nodes_[idx].left = l;
    nodes_[idx].right = r;
    return idx;
  }

  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, int> index_;
  int root_ = -1;
  std::size_t live_ = 0;
};

}  // namespace rapid
