#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "laprecon/geometry.hpp"
#include "laprecon/kdtree.hpp"

namespace laprecon {

/// Points in millimetres with optional per-point unit normals.
struct PointCloud {
  std::vector<Vec3> points;
  /// Empty, or one unit normal per point.
  std::vector<Vec3> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }

  /// Throws InvalidArgument on NaN/Inf, count mismatch or non-unit normals (1e-6).
  void validate() const;
  Vec3 centroid() const;
};

/// Rigidly transforms points and rotates normals.
PointCloud transformed(const PointCloud& cloud, const Pose& pose);
/// Keeps the entries whose mask value is true.
PointCloud select(const PointCloud& cloud, const std::vector<bool>& mask);
PointCloud select(const PointCloud& cloud, const std::vector<std::size_t>& indices);

KdTree build_kdtree(const PointCloud& cloud);

/**
 * One point per occupied voxel: the centroid of its members. Voxel of p is
 * floor((p - min_corner) / voxel). Normals are averaged and renormalized.
 * Output is ordered by voxel index (x-major).
 */
PointCloud voxel_downsample(const PointCloud& cloud, double voxel);

struct OutlierParams {
  int k = 20;
  double std_ratio = 1.0;
};

struct OutlierResult {
  PointCloud cloud;
  /// Aligned with the input; true = kept.
  std::vector<bool> kept;
  /// Mean distance of each input point to its k nearest other points.
  std::vector<double> mean_distances;
  double threshold = 0.0;
};

/**
 * Drops points whose mean distance to their k nearest neighbours (self
 * excluded) exceeds mean + std_ratio * stddev over the whole cloud.
 * The statistics are summed in sorted order, so the decision does not depend
 * on input order or thread count.
 */
OutlierResult remove_statistical_outliers(const PointCloud& cloud, const OutlierParams& params = {});

/// Removes points farther than `radius` from the input centroid; the boundary is kept.
PointCloud crop_by_centroid(const PointCloud& cloud, double radius);

/**
 * PCA normals from the k nearest points (the point included), oriented towards
 * `viewpoint`. Default viewpoint: centroid + (0, 1e6, 0).
 */
PointCloud estimate_normals(const PointCloud& cloud, int k, std::optional<Vec3> viewpoint = std::nullopt);

}  // namespace laprecon
