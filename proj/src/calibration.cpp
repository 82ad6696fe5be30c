#include "laprecon/calibration.hpp"

#include <cmath>
#include <iostream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "laprecon/errors.hpp"

namespace laprecon {
namespace {

constexpr double kMinAngle = 1e-3;

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

using Vec4 = Eigen::Vector4d;

// Combines the two null vectors so that <real, dual> = 0, picking the root
// with the larger real part, then normalizes the real part.
DualQuaternion unit_combination(const Eigen::Matrix<double, 8, 1>& v7, const Eigen::Matrix<double, 8, 1>& v8) {
  const Vec4 u1 = v7.head<4>(), d1 = v7.tail<4>();
  const Vec4 u2 = v8.head<4>(), d2 = v8.tail<4>();
  Eigen::Matrix2d constraint;
  constraint << u1.dot(d1), 0.5 * (u1.dot(d2) + u2.dot(d1)), 0.5 * (u1.dot(d2) + u2.dot(d1)), u2.dot(d2);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(constraint);
  const Eigen::Vector2d mu = eig.eigenvalues();
  const Eigen::Matrix2d e = eig.eigenvectors();

  std::vector<Eigen::Vector2d> candidates;
  if (mu(0) <= 0.0 && mu(1) >= 0.0) {
    const double s0 = std::sqrt(mu(1)), s1 = std::sqrt(-mu(0));
    candidates.push_back(s0 * e.col(0) + s1 * e.col(1));
    candidates.push_back(s0 * e.col(0) - s1 * e.col(1));
  } else {
    // Noisy data can leave the constraint definite; take the closest direction.
    candidates.push_back(std::abs(mu(0)) < std::abs(mu(1)) ? e.col(0) : e.col(1));
  }

  Eigen::Matrix<double, 8, 1> best = Eigen::Matrix<double, 8, 1>::Zero();
  double best_norm = -1.0;
  for (const Eigen::Vector2d& c : candidates) {
    if (c.norm() == 0.0) continue;
    const Eigen::Vector2d l = c.normalized();
    const Eigen::Matrix<double, 8, 1> x = l(0) * v7 + l(1) * v8;
    const double n = x.head<4>().norm();
    if (n > best_norm) {
      best_norm = n;
      best = x;
    }
  }
  if (!(best_norm > 1e-12)) throw RankDeficiency("hand-eye: null space holds no valid rotation");

  Vec4 real = best.head<4>() / best_norm;
  Vec4 dual = best.tail<4>() / best_norm;
  dual -= real.dot(dual) * real;
  DualQuaternion dq;
  dq.real = Eigen::Quaterniond(real(0), real(1), real(2), real(3));
  dq.dual = Eigen::Quaterniond(dual(0), dual(1), dual(2), dual(3));
  return dq;
}

}  // namespace

std::vector<Pose> relative_motions(std::span<const Pose> poses) {
  if (poses.size() < 2) throw InvalidArgument("relative_motions: need at least two poses");
  std::vector<Pose> out;
  out.reserve(poses.size() - 1);
  for (std::size_t i = 0; i + 1 < poses.size(); ++i) out.push_back(compose(invert(poses[i]), poses[i + 1]));
  return out;
}

Pose solve_hand_eye(std::span<const MotionPair> pairs, const HandEyeOptions& options) {
  if (pairs.size() < 2) throw InvalidArgument("hand-eye: need at least two motion pairs");

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double angle_a = pairs[i].robot_motion.rotation.angle();
    const double angle_b = pairs[i].camera_motion.rotation.angle();
    if (!(angle_a > kMinAngle)) {
      throw InvalidArgument("hand-eye: pair " + std::to_string(i) + " has a rotation below 1e-3 rad");
    }
    const double mismatch = std::abs(angle_a - angle_b);
    if (mismatch > 10.0 * options.congruence_tolerance) {
      throw InvalidArgument("hand-eye: pair " + std::to_string(i) + " violates screw congruence (rotation angles differ by " +
                            std::to_string(mismatch) + " rad)");
    }
    if (mismatch > options.congruence_tolerance) {
      const std::string msg = "hand-eye: pair " + std::to_string(i) + " rotation angles differ by " + std::to_string(mismatch) + " rad";
      if (options.on_warning) {
        options.on_warning(msg);
      } else {
        std::clog << "warning: " << msg << '\n';
      }
    }
  }

  bool distinct_axes = false;
  const Vec3 first_axis = pairs[0].robot_motion.rotation.axis();
  for (std::size_t i = 1; i < pairs.size() && !distinct_axes; ++i) {
    const double c = std::min(1.0, std::abs(first_axis.dot(pairs[i].robot_motion.rotation.axis())));
    distinct_axes = std::acos(c) > kMinAngle;
  }
  if (!distinct_axes) {
    throw RankDeficiency("hand-eye: all robot rotation axes are parallel; X is not observable");
  }

  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(6 * pairs.size()), 8);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const DualQuaternion a = dq_from_pose(pairs[i].robot_motion);
    const DualQuaternion b = dq_from_pose(pairs[i].camera_motion);
    const Vec3 ra = a.real.vec(), rb = b.real.vec();
    const Vec3 da = a.dual.vec(), db = b.dual.vec();
    auto block = system.middleRows(static_cast<Eigen::Index>(6 * i), 6);
    block.block<3, 1>(0, 0) = ra - rb;
    block.block<3, 3>(0, 1) = skew(ra + rb);
    block.block<3, 1>(3, 0) = da - db;
    block.block<3, 3>(3, 1) = skew(da + db);
    block.block<3, 1>(3, 4) = ra - rb;
    block.block<3, 3>(3, 5) = skew(ra + rb);
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(system, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(5) > 1e-10 * std::max(1.0, sv(0)))) {
    throw RankDeficiency("hand-eye: screw-constraint matrix has a null space larger than two");
  }
  const Eigen::MatrixXd& v = svd.matrixV();
  return pose_from_dq(unit_combination(v.col(6), v.col(7)));
}

HandEyeResidual hand_eye_residual(std::span<const MotionPair> pairs, const Pose& x) {
  HandEyeResidual r;
  if (pairs.empty()) return r;
  for (const MotionPair& p : pairs) {
    const Pose err = compose(invert(compose(p.robot_motion, x)), compose(x, p.camera_motion));
    r.rotation += err.rotation.angle();
    r.translation += err.translation.norm();
  }
  r.rotation /= static_cast<double>(pairs.size());
  r.translation /= static_cast<double>(pairs.size());
  return r;
}

}  // namespace laprecon
