#pragma once

#include <span>
#include <vector>

#include "laprecon/geometry.hpp"
#include "laprecon/pointcloud.hpp"

namespace laprecon {

/// x -> scale * R x + t.
struct SimilarityTransform {
  double scale = 1.0;
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  SimilarityTransform inverse() const;
  /// Rotation and translation only; exact when scale == 1.
  Pose rigid_part() const { return {rotation, translation}; }
  /// Maps a camera-to-world pose into the transformed world frame.
  Pose apply(const Pose& p) const { return {rotation * p.rotation, apply(p.translation)}; }
};

SimilarityTransform compose(const SimilarityTransform& a, const SimilarityTransform& b);
/// Maps points; normals are rotated only.
PointCloud transformed(const PointCloud& cloud, const SimilarityTransform& s);

/**
 * Least-squares similarity (or rigid, with_scale = false) minimizing
 * sum |dst_i - (s R src_i + t)|^2, reflection-corrected so det R = +1.
 * Throws InvalidArgument for size mismatch or fewer than 3 pairs and
 * RankDeficiency for collinear sources.
 */
SimilarityTransform umeyama(std::span<const Vec3> src, std::span<const Vec3> dst, bool with_scale = true);

/// Tukey biweight: (1 - (r/k)^2)^2 for |r| <= k, else 0.
double tukey_weight(double residual, double k);

struct IcpParams {
  double max_correspondence_distance = 5.0;
  int max_iterations = 50;
  double relative_rmse_tolerance = 1e-6;
  double tukey_k = 1.0;

  void validate() const;
};

struct RegistrationResult {
  /// Source-to-target transform, init included.
  Pose transform;
  /// RMSE of Euclidean distances over the correspondences, mm.
  double inlier_rmse = 0.0;
  /// Fraction of source points with a correspondence.
  double fitness = 0.0;
  int iterations_run = 0;
  /// inlier_rmse at init followed by each accepted iteration; non-increasing.
  std::vector<double> rmse_history;
};

/**
 * Point-to-plane ICP with Tukey-weighted Gauss-Newton steps.
 *
 * Each iteration matches every transformed source point to its nearest target
 * point within max_correspondence_distance, solves the linearized weighted
 * point-to-plane problem and accepts the step only if inlier_rmse does not
 * grow. Stops after max_iterations, on a rejected step, or when the relative
 * change of inlier_rmse drops below relative_rmse_tolerance.
 *
 * Throws InvalidArgument if the target has no normals and NoOverlap when no
 * correspondence exists at init.
 */
RegistrationResult icp_point_to_plane(const PointCloud& source, const PointCloud& target, const IcpParams& params = {},
                                      const Pose& init = Pose::identity());

/// Same, reusing a tree built over target.points.
RegistrationResult icp_point_to_plane(const PointCloud& source, const PointCloud& target, const KdTree& target_tree,
                                      const IcpParams& params, const Pose& init);

}  // namespace laprecon

namespace laprecon {

/// Weighted Gauss-Newton system for one point-to-plane step, unknowns (omega, v).
struct PointToPlaneSystem {
  Eigen::Matrix<double, 6, 6> hessian = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> gradient = Eigen::Matrix<double, 6, 1>::Zero();
  std::size_t active = 0;  ///< correspondences with non-zero weight
};

/// Accumulates sum w(r_i) J_i J_i^T and sum w(r_i) J_i r_i with r_i = (p_i - q_i) . n_i, in index order.
PointToPlaneSystem point_to_plane_system(std::span<const Vec3> moved_source, std::span<const Vec3> matched_target,
                                         std::span<const Vec3> matched_normals, double tukey_k);

}  // namespace laprecon
