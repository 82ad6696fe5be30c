#pragma once

#include <optional>
#include <set>
#include <span>
#include <vector>

#include "laprecon/geometry.hpp"
#include "laprecon/pointcloud.hpp"
#include "laprecon/registration.hpp"

namespace laprecon {

/// Distance from each src point to its nearest dst point.
std::vector<double> nn_distances(const PointCloud& src, const PointCloud& dst);

/**
 * Drops the floor(fraction * n) largest values; among equal values the
 * later-indexed ones go first. Remaining values keep their order.
 */
std::vector<double> trim_top(std::span<const double> distances, double fraction);

struct CloudMetrics {
  double chamfer = 0.0;
  double hausdorff = 0.0;
  double rmse = 0.0;
  double trim_fraction = 0.0;
};

/**
 * Both directed distance sets are trimmed independently, then
 * chamfer = (mean(src->dst) + mean(dst->src)) / 2, while hausdorff and rmse
 * are the max and root-mean-square over the pooled trimmed distances.
 */
CloudMetrics cloud_metrics(const PointCloud& src, const PointCloud& dst, double trim_fraction = 0.05);

/// Umeyama on the positions of frames present in both lists; returns the aligned
/// predictions for the common frames, in frame order.
std::vector<FramePose> align_trajectory(std::span<const FramePose> pred, std::span<const FramePose> gt,
                                        bool with_scale = true);

/// Same, also reporting the similarity that was applied.
std::vector<FramePose> align_trajectory(std::span<const FramePose> pred, std::span<const FramePose> gt, bool with_scale,
                                        SimilarityTransform& applied);

struct RelativePoseError {
  double rotation = 0.0;     ///< radians
  double translation = 0.0;  ///< mm
  std::size_t pairs = 0;
};

/// Mean relative pose error over consecutive common frames.
RelativePoseError rpe(std::span<const FramePose> pred, std::span<const FramePose> gt);

double pose_coverage(const std::set<int>& predicted_frame_ids, int total_frames);

struct PoseMetrics {
  double rpe_rotation = 0.0;
  double rpe_translation = 0.0;
  double coverage = 0.0;
};

}  // namespace laprecon
