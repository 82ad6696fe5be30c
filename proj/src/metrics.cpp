#include "laprecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "laprecon/errors.hpp"
#include "laprecon/parallel.hpp"

namespace laprecon {

std::vector<double> nn_distances(const PointCloud& src, const PointCloud& dst) {
  if (src.empty() || dst.empty()) throw InvalidArgument("nn_distances: clouds must be non-empty");
  const KdTree tree(dst.points);
  std::vector<double> out(src.size());
  parallel_for(src.size(), [&](std::size_t i) { out[i] = tree.nearest(src.points[i]).distance; });
  return out;
}

std::vector<double> trim_top(std::span<const double> distances, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidArgument("trim_top: fraction must lie in [0, 1)");
  const auto drop = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(distances.size())));
  if (drop == 0) return {distances.begin(), distances.end()};

  std::vector<std::size_t> order(distances.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(drop), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return distances[a] > distances[b] || (distances[a] == distances[b] && a > b);
                    });
  std::vector<bool> removed(distances.size(), false);
  for (std::size_t i = 0; i < drop; ++i) removed[order[i]] = true;
  std::vector<double> out;
  out.reserve(distances.size() - drop);
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (!removed[i]) out.push_back(distances[i]);
  }
  return out;
}

CloudMetrics cloud_metrics(const PointCloud& src, const PointCloud& dst, double trim_fraction) {
  const std::vector<double> forward = trim_top(nn_distances(src, dst), trim_fraction);
  const std::vector<double> backward = trim_top(nn_distances(dst, src), trim_fraction);

  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  double max_d = 0.0, sum2 = 0.0;
  for (const auto* set : {&forward, &backward}) {
    for (double d : *set) {
      max_d = std::max(max_d, d);
      sum2 += d * d;
    }
  }
  CloudMetrics m;
  m.trim_fraction = trim_fraction;
  m.chamfer = 0.5 * (mean(forward) + mean(backward));
  m.hausdorff = max_d;
  m.rmse = std::sqrt(sum2 / static_cast<double>(forward.size() + backward.size()));
  return m;
}

namespace {

std::vector<std::pair<const FramePose*, const FramePose*>> common_frames(std::span<const FramePose> pred,
                                                                         std::span<const FramePose> gt) {
  std::map<int, const FramePose*> by_id;
  for (const FramePose& g : gt) by_id[g.frame_id] = &g;
  std::map<int, std::pair<const FramePose*, const FramePose*>> joined;
  for (const FramePose& p : pred) {
    auto it = by_id.find(p.frame_id);
    if (it != by_id.end()) joined[p.frame_id] = {&p, it->second};
  }
  std::vector<std::pair<const FramePose*, const FramePose*>> out;
  out.reserve(joined.size());
  for (const auto& [id, pair] : joined) out.push_back(pair);
  return out;
}

}  // namespace

std::vector<FramePose> align_trajectory(std::span<const FramePose> pred, std::span<const FramePose> gt, bool with_scale,
                                        SimilarityTransform& applied) {
  const auto common = common_frames(pred, gt);
  if (common.size() < 3) throw InvalidArgument("align_trajectory: need at least 3 common frames");
  std::vector<Vec3> src, dst;
  for (const auto& [p, g] : common) {
    src.push_back(p->pose.translation);
    dst.push_back(g->pose.translation);
  }
  applied = umeyama(src, dst, with_scale);
  std::vector<FramePose> out;
  out.reserve(common.size());
  for (const auto& [p, g] : common) out.push_back({p->frame_id, applied.apply(p->pose)});
  return out;
}

std::vector<FramePose> align_trajectory(std::span<const FramePose> pred, std::span<const FramePose> gt, bool with_scale) {
  SimilarityTransform unused;
  return align_trajectory(pred, gt, with_scale, unused);
}

RelativePoseError rpe(std::span<const FramePose> pred, std::span<const FramePose> gt) {
  const auto common = common_frames(pred, gt);
  if (common.size() < 2) throw InvalidArgument("rpe: need at least 2 common frames");
  RelativePoseError out;
  for (std::size_t i = 0; i + 1 < common.size(); ++i) {
    const Pose gt_rel = compose(invert(common[i].second->pose), common[i + 1].second->pose);
    const Pose pred_rel = compose(invert(common[i].first->pose), common[i + 1].first->pose);
    const Pose err = compose(invert(gt_rel), pred_rel);
    out.rotation += err.rotation.angle();
    out.translation += err.translation.norm();
  }
  out.pairs = common.size() - 1;
  out.rotation /= static_cast<double>(out.pairs);
  out.translation /= static_cast<double>(out.pairs);
  return out;
}

double pose_coverage(const std::set<int>& predicted_frame_ids, int total_frames) {
  if (total_frames < 1) throw InvalidArgument("pose_coverage: total_frames must be >= 1");
  if (predicted_frame_ids.size() > static_cast<std::size_t>(total_frames)) {
    throw InvalidArgument("pose_coverage: more predicted frames than total frames");
  }
  return static_cast<double>(predicted_frame_ids.size()) / total_frames;
}

}  // namespace laprecon
