#include "laprecon/registration.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "laprecon/errors.hpp"
#include "laprecon/parallel.hpp"

namespace laprecon {

SimilarityTransform SimilarityTransform::inverse() const {
  const Rotation inv = rotation.inverse();
  return {1.0 / scale, inv, -(inv * translation) / scale};
}

SimilarityTransform compose(const SimilarityTransform& a, const SimilarityTransform& b) {
  return {a.scale * b.scale, a.rotation * b.rotation, a.apply(b.translation)};
}

PointCloud transformed(const PointCloud& cloud, const SimilarityTransform& s) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.points.push_back(s.apply(p));
  out.normals.reserve(cloud.normals.size());
  for (const Vec3& n : cloud.normals) out.normals.push_back(s.rotation * n);
  return out;
}

SimilarityTransform umeyama(std::span<const Vec3> src, std::span<const Vec3> dst, bool with_scale) {
  if (src.size() != dst.size()) throw InvalidArgument("umeyama: point lists differ in length");
  if (src.size() < 3) throw InvalidArgument("umeyama: need at least 3 correspondences");
  const double n = static_cast<double>(src.size());

  Vec3 mu_src = Vec3::Zero(), mu_dst = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_src += src[i];
    mu_dst += dst[i];
  }
  mu_src /= n;
  mu_dst /= n;

  Mat3 cross = Mat3::Zero(), src_cov = Mat3::Zero();
  double src_var = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec3 s = src[i] - mu_src;
    const Vec3 d = dst[i] - mu_dst;
    cross += d * s.transpose();
    src_cov += s * s.transpose();
    src_var += s.squaredNorm();
  }
  cross /= n;
  src_cov /= n;
  src_var /= n;

  const Vec3 spread = Eigen::SelfAdjointEigenSolver<Mat3>(src_cov, Eigen::EigenvaluesOnly).eigenvalues();
  if (!(spread(2) > 0.0) || !(spread(1) > 1e-10 * spread(2))) {
    throw RankDeficiency("umeyama: source points are collinear or coincident");
  }

  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 sign = Vec3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) sign(2) = -1.0;
  const Mat3 r = svd.matrixU() * sign.asDiagonal() * svd.matrixV().transpose();

  SimilarityTransform out;
  out.rotation = Rotation::from_matrix(r);
  if (with_scale) {
    out.scale = svd.singularValues().dot(sign) / src_var;
    if (!(out.scale > 0.0)) throw RankDeficiency("umeyama: destination points are degenerate (non-positive scale)");
  }
  out.translation = mu_dst - out.scale * (out.rotation * mu_src);
  return out;
}

double tukey_weight(double residual, double k) {
  if (!(k > 0.0)) throw InvalidArgument("tukey_weight: k must be > 0");
  if (std::abs(residual) > k) return 0.0;
  const double u = residual / k;
  const double a = 1.0 - u * u;
  return a * a;
}

void IcpParams::validate() const {
  if (!(max_correspondence_distance > 0.0)) throw InvalidArgument("icp: max_correspondence_distance must be > 0");
  if (max_iterations < 1) throw InvalidArgument("icp: max_iterations must be >= 1");
  if (!(relative_rmse_tolerance > 0.0)) throw InvalidArgument("icp: relative_rmse_tolerance must be > 0");
  if (!(tukey_k > 0.0)) throw InvalidArgument("icp: tukey_k must be > 0");
}

PointToPlaneSystem point_to_plane_system(std::span<const Vec3> moved_source, std::span<const Vec3> matched_target,
                                         std::span<const Vec3> matched_normals, double tukey_k) {
  if (moved_source.size() != matched_target.size() || moved_source.size() != matched_normals.size()) {
    throw InvalidArgument("point_to_plane_system: input lengths differ");
  }
  PointToPlaneSystem sys;
  for (std::size_t i = 0; i < moved_source.size(); ++i) {
    const Vec3& p = moved_source[i];
    const Vec3& nrm = matched_normals[i];
    const double r = (p - matched_target[i]).dot(nrm);
    const double w = tukey_weight(r, tukey_k);
    if (w == 0.0) continue;
    Eigen::Matrix<double, 6, 1> j;
    j << p.cross(nrm), nrm;
    sys.hessian.noalias() += w * j * j.transpose();
    sys.gradient.noalias() += w * r * j;
    ++sys.active;
  }
  return sys;
}

namespace {

struct Matches {
  std::vector<Vec3> moved, target, normals;
  double rmse = 0.0;
  double fitness = 0.0;
};

Matches match(const PointCloud& source, const PointCloud& target, const KdTree& tree, const Pose& pose, double max_dist) {
  const std::size_t n = source.size();
  std::vector<Vec3> moved(n);
  std::vector<Neighbor> nn(n);
  parallel_for(n, [&](std::size_t i) {
    moved[i] = pose.apply(source.points[i]);
    nn[i] = tree.nearest(moved[i]);
  });
  Matches m;
  double sum2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (nn[i].distance > max_dist) continue;
    m.moved.push_back(moved[i]);
    m.target.push_back(target.points[nn[i].index]);
    m.normals.push_back(target.normals[nn[i].index]);
    sum2 += nn[i].distance * nn[i].distance;
  }
  if (!m.moved.empty()) m.rmse = std::sqrt(sum2 / static_cast<double>(m.moved.size()));
  m.fitness = static_cast<double>(m.moved.size()) / static_cast<double>(n);
  return m;
}

}  // namespace

RegistrationResult icp_point_to_plane(const PointCloud& source, const PointCloud& target, const IcpParams& params,
                                      const Pose& init) {
  if (target.empty()) throw InvalidArgument("icp: target is empty");
  const KdTree tree(target.points);
  return icp_point_to_plane(source, target, tree, params, init);
}

RegistrationResult icp_point_to_plane(const PointCloud& source, const PointCloud& target, const KdTree& target_tree,
                                      const IcpParams& params, const Pose& init) {
  params.validate();
  if (source.empty()) throw InvalidArgument("icp: source is empty");
  if (!target.has_normals()) throw InvalidArgument("icp: target cloud has no normals");
  if (target_tree.size() != target.size()) throw InvalidArgument("icp: kd-tree does not match target");

  RegistrationResult result;
  result.transform = init;
  Matches current = match(source, target, target_tree, init, params.max_correspondence_distance);
  if (current.moved.empty()) {
    throw NoOverlap("icp: no overlap, no source point lies within " + std::to_string(params.max_correspondence_distance) +
                    " mm of the target at the initial pose");
  }
  result.rmse_history.push_back(current.rmse);

  for (int it = 0; it < params.max_iterations; ++it) {
    const PointToPlaneSystem sys = point_to_plane_system(current.moved, current.target, current.normals, params.tukey_k);
    if (sys.active < 6) break;
    Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(sys.hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    const Eigen::Matrix<double, 6, 1> step = ldlt.solve(-sys.gradient);
    if (!step.allFinite()) break;

    const Pose delta{Rotation::from_rotation_vector(step.head<3>()), step.tail<3>()};
    const Pose candidate = compose(delta, result.transform);
    Matches next = match(source, target, target_tree, candidate, params.max_correspondence_distance);
    if (next.moved.empty() || next.rmse > current.rmse) break;

    result.transform = candidate;
    result.iterations_run = it + 1;
    const double change = current.rmse - next.rmse;
    current = std::move(next);
    result.rmse_history.push_back(current.rmse);
    if (current.rmse == 0.0 || change / current.rmse < params.relative_rmse_tolerance) break;
  }

  result.inlier_rmse = current.rmse;
  result.fitness = current.fitness;
  return result;
}

}  // namespace laprecon
