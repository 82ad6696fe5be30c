#include "laprecon/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "laprecon/errors.hpp"

namespace laprecon {
namespace {

struct Candidate {
  double d2;
  std::size_t index;
  bool operator<(const Candidate& o) const { return d2 < o.d2 || (d2 == o.d2 && index < o.index); }
};

double box_distance2(const Vec3& q, const Vec3& lo, const Vec3& hi) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double d = q[a] < lo[a] ? lo[a] - q[a] : (q[a] > hi[a] ? q[a] - hi[a] : 0.0);
    d2 += d * d;
  }
  return d2;
}

std::vector<Neighbor> to_neighbors(std::vector<Candidate> c) {
  std::sort(c.begin(), c.end());
  std::vector<Neighbor> out;
  out.reserve(c.size());
  for (const Candidate& x : c) out.push_back({x.index, std::sqrt(x.d2)});
  return out;
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points, std::size_t leaf_size)
    : points_(points.begin(), points.end()), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  if (points_.empty()) throw InvalidArgument("kd-tree: point set is empty");
  if (points_.size() > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("kd-tree: too many points");
  for (const Vec3& p : points_) {
    if (!p.allFinite()) throw InvalidArgument("kd-tree: non-finite coordinate");
  }
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  Vec3 lo = points_[order_[begin]], hi = lo;
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  nodes_[id].lo = lo;
  nodes_[id].hi = hi;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= leaf_size_) return id;

  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all points coincide

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = points_[a][axis], pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

template <typename Visitor>
void KdTree::search(std::int32_t node_id, const Vec3& q, Visitor& visit) const {
  const Node& node = nodes_[node_id];
  if (box_distance2(q, node.lo, node.hi) > visit.bound()) return;
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      visit(idx, (points_[idx] - q).squaredNorm());
    }
    return;
  }
  const bool go_left = q[node.axis] < node.split;
  search(go_left ? node.left : node.right, q, visit);
  search(go_left ? node.right : node.left, q, visit);
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, std::size_t k) const {
  if (k == 0) return {};
  struct Visitor {
    std::size_t k;
    std::priority_queue<Candidate> heap;
    double bound() const { return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().d2; }
    void operator()(std::size_t idx, double d2) {
      const Candidate c{d2, idx};
      if (heap.size() < k) {
        heap.push(c);
      } else if (c < heap.top()) {
        heap.pop();
        heap.push(c);
      }
    }
  } visit{k, {}};
  search(0, query, visit);
  std::vector<Candidate> out;
  out.reserve(visit.heap.size());
  while (!visit.heap.empty()) {
    out.push_back(visit.heap.top());
    visit.heap.pop();
  }
  return to_neighbors(std::move(out));
}

Neighbor KdTree::nearest(const Vec3& query) const {
  struct Visitor {
    Candidate best{std::numeric_limits<double>::infinity(), 0};
    double bound() const { return best.d2; }
    void operator()(std::size_t idx, double d2) {
      const Candidate c{d2, idx};
      if (c < best) best = c;
    }
  } visit;
  search(0, query, visit);
  return {visit.best.index, std::sqrt(visit.best.d2)};
}

std::vector<Neighbor> KdTree::radius_search(const Vec3& query, double radius) const {
  if (!(radius >= 0.0)) throw InvalidArgument("kd-tree: radius must be >= 0");
  struct Visitor {
    double r2;
    std::vector<Candidate> hits;
    double bound() const { return r2; }
    void operator()(std::size_t idx, double d2) {
      if (d2 <= r2) hits.push_back({d2, idx});
    }
  } visit{radius * radius, {}};
  // Widen r2 to the largest square whose root is still <= radius, so the test
  // agrees with the reported (rooted) distance at the boundary.
  for (double next = std::nextafter(visit.r2, INFINITY); std::isfinite(next) && std::sqrt(next) <= radius;
       next = std::nextafter(next, INFINITY)) {
    visit.r2 = next;
  }
  search(0, query, visit);
  return to_neighbors(std::move(visit.hits));
}

}  // namespace laprecon
