#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "laprecon/geometry.hpp"

namespace laprecon {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/**
 * Exact 3-d k-d tree. Immutable after construction; queries are const and
 * may run concurrently.
 *
 * Results are sorted by (distance, index), so ties at equal distance resolve
 * to the lower input index and every query matches a brute-force scan.
 */
class KdTree {
 public:
  /// Copies the points. Throws InvalidArgument when empty.
  explicit KdTree(std::span<const Vec3> points, std::size_t leaf_size = 12);

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

  /// Up to k nearest points.
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;
  Neighbor nearest(const Vec3& query) const;
  /// All points with distance <= radius.
  std::vector<Neighbor> radius_search(const Vec3& query, double radius) const;

 private:
  struct Node {
    // Leaves: [begin, end) into order_. Inner nodes: children and split.
    std::uint32_t begin = 0, end = 0;
    std::int32_t left = -1, right = -1;
    int axis = 0;
    double split = 0.0;
    Eigen::Vector3d lo, hi;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  template <typename Visitor>
  void search(std::int32_t node, const Vec3& q, Visitor& visit) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

}  // namespace laprecon
