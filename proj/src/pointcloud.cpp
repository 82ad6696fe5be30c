#include "laprecon/pointcloud.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "laprecon/errors.hpp"
#include "laprecon/parallel.hpp"

namespace laprecon {

void PointCloud::validate() const {
  for (const Vec3& p : points) {
    if (!p.allFinite()) throw InvalidArgument("point cloud: non-finite coordinate");
  }
  if (normals.empty()) return;
  if (normals.size() != points.size()) throw InvalidArgument("point cloud: normal count does not match point count");
  for (const Vec3& n : normals) {
    if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-6) throw InvalidArgument("point cloud: normal is not unit length");
  }
}

Vec3 PointCloud::centroid() const {
  if (points.empty()) throw InvalidArgument("point cloud: centroid of an empty cloud");
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

PointCloud transformed(const PointCloud& cloud, const Pose& pose) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.points.push_back(pose.apply(p));
  out.normals.reserve(cloud.normals.size());
  for (const Vec3& n : cloud.normals) out.normals.push_back(pose.rotation * n);
  return out;
}

PointCloud select(const PointCloud& cloud, const std::vector<bool>& mask) {
  if (mask.size() != cloud.size()) throw InvalidArgument("select: mask size does not match cloud");
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!mask[i]) continue;
    out.points.push_back(cloud.points[i]);
    if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
  }
  return out;
}

PointCloud select(const PointCloud& cloud, const std::vector<std::size_t>& indices) {
  PointCloud out;
  out.points.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= cloud.size()) throw InvalidArgument("select: index out of range");
    out.points.push_back(cloud.points[i]);
    if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
  }
  return out;
}

KdTree build_kdtree(const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidArgument("build_kdtree: cloud is empty");
  return KdTree(cloud.points);
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
  if (!(voxel > 0.0)) throw InvalidArgument("voxel_downsample: voxel size must be > 0");
  if (cloud.empty()) return {};
  cloud.validate();

  Vec3 min_corner = cloud.points.front();
  for (const Vec3& p : cloud.points) min_corner = min_corner.cwiseMin(p);

  using Key = std::array<std::int64_t, 3>;
  std::vector<Key> keys(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 cell = ((cloud.points[i] - min_corner) / voxel).array().floor();
    keys[i] = {static_cast<std::int64_t>(cell.x()), static_cast<std::int64_t>(cell.y()), static_cast<std::int64_t>(cell.z())};
  }
  std::vector<std::size_t> order(cloud.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

  PointCloud out;
  for (std::size_t begin = 0; begin < order.size();) {
    std::size_t end = begin;
    Vec3 psum = Vec3::Zero(), nsum = Vec3::Zero();
    while (end < order.size() && keys[order[end]] == keys[order[begin]]) {
      psum += cloud.points[order[end]];
      if (cloud.has_normals()) nsum += cloud.normals[order[end]];
      ++end;
    }
    out.points.push_back(psum / static_cast<double>(end - begin));
    if (cloud.has_normals()) {
      const double n = nsum.norm();
      out.normals.push_back(n > 1e-12 ? Vec3(nsum / n) : cloud.normals[order[begin]]);
    }
    begin = end;
  }
  return out;
}

OutlierResult remove_statistical_outliers(const PointCloud& cloud, const OutlierParams& params) {
  if (params.k < 1) throw InvalidArgument("outlier removal: k must be >= 1");
  if (!(params.std_ratio >= 0.0)) throw InvalidArgument("outlier removal: std_ratio must be >= 0");
  const auto k = static_cast<std::size_t>(params.k);
  if (cloud.size() <= k) throw InvalidArgument("outlier removal: cloud must hold more than k points");

  const KdTree tree = build_kdtree(cloud);
  OutlierResult result;
  result.mean_distances.resize(cloud.size());
  parallel_for(cloud.size(), [&](std::size_t i) {
    std::vector<Neighbor> nn = tree.knn(cloud.points[i], k + 1);
    auto self = std::find_if(nn.begin(), nn.end(), [i](const Neighbor& n) { return n.index == i; });
    nn.erase(self != nn.end() ? self : nn.end() - 1);
    double sum = 0.0;
    for (const Neighbor& n : nn) sum += n.distance;
    result.mean_distances[i] = sum / static_cast<double>(k);
  });

  std::vector<double> sorted = result.mean_distances;
  std::sort(sorted.begin(), sorted.end());
  const double count = static_cast<double>(sorted.size());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / count;
  double var = 0.0;
  for (double d : sorted) var += (d - mean) * (d - mean);
  const double stddev = std::sqrt(var / count);
  result.threshold = mean + params.std_ratio * stddev;

  result.kept.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) result.kept[i] = result.mean_distances[i] <= result.threshold;
  result.cloud = select(cloud, result.kept);
  return result;
}

PointCloud crop_by_centroid(const PointCloud& cloud, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("crop: radius must be > 0");
  if (cloud.empty()) throw InvalidArgument("crop: cloud is empty");
  const Vec3 c = cloud.centroid();
  std::vector<bool> keep(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) keep[i] = (cloud.points[i] - c).norm() <= radius;
  return select(cloud, keep);
}

PointCloud estimate_normals(const PointCloud& cloud, int k, std::optional<Vec3> viewpoint) {
  if (k < 3) throw InvalidArgument("estimate_normals: k must be >= 3");
  if (cloud.size() <= static_cast<std::size_t>(k)) throw InvalidArgument("estimate_normals: cloud must hold more than k points");
  const Vec3 view = viewpoint.value_or(cloud.centroid() + Vec3(0.0, 1e6, 0.0));
  const KdTree tree = build_kdtree(cloud);

  PointCloud out;
  out.points = cloud.points;
  out.normals.resize(cloud.size());
  parallel_for(cloud.size(), [&](std::size_t i) {
    const std::vector<Neighbor> nn = tree.knn(cloud.points[i], static_cast<std::size_t>(k));
    Vec3 mean = Vec3::Zero();
    for (const Neighbor& n : nn) mean += cloud.points[n.index];
    mean /= static_cast<double>(nn.size());
    Mat3 cov = Mat3::Zero();
    for (const Neighbor& n : nn) {
      const Vec3 d = cloud.points[n.index] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    Vec3 normal = eig.eigenvectors().col(0).normalized();
    if (normal.dot(view - cloud.points[i]) < 0.0) normal = -normal;
    out.normals[i] = normal;
  });
  return out;
}

}  // namespace laprecon
