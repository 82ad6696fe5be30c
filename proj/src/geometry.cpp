#include "laprecon/geometry.hpp"

#include <cmath>

#include "laprecon/errors.hpp"

namespace laprecon {
namespace {

// Leaves already-unit quaternions bit-for-bit untouched so that values read
// back from text with 17 significant digits reproduce exactly.
Eigen::Quaterniond canonical(Eigen::Quaterniond q) {
  const double n2 = q.squaredNorm();
  if (!(n2 > 0.0) || !std::isfinite(n2)) {
    throw InvalidArgument("rotation quaternion must be finite and non-zero");
  }
  if (std::abs(n2 - 1.0) > 1e-15) {
    q.coeffs() /= std::sqrt(n2);
  }
  bool flip = q.w() < 0.0;
  if (q.w() == 0.0) {
    for (double c : {q.x(), q.y(), q.z()}) {
      if (c != 0.0) {
        flip = c < 0.0;
        break;
      }
    }
  }
  if (flip) q.coeffs() = -q.coeffs();
  return q;
}

Eigen::Quaterniond add(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  Eigen::Quaterniond r;
  r.coeffs() = a.coeffs() + b.coeffs();
  return r;
}

}  // namespace

Rotation::Rotation(double w, double x, double y, double z) : q_(canonical(Eigen::Quaterniond(w, x, y, z))) {}

Rotation::Rotation(const Eigen::Quaterniond& q) : q_(canonical(q)) {}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw InvalidArgument("rotation axis must be non-zero");
  return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis / n)));
}

Rotation Rotation::from_matrix(const Mat3& m) { return Rotation(Eigen::Quaterniond(m)); }

Rotation Rotation::from_rotation_vector(const Vec3& v) {
  const double angle = v.norm();
  if (angle == 0.0) return {};
  return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(angle, v / angle)));
}

double Rotation::angle() const { return 2.0 * std::atan2(q_.vec().norm(), std::abs(q_.w())); }

Vec3 Rotation::axis() const {
  const double n = q_.vec().norm();
  if (n == 0.0) return Vec3::UnitX();
  return q_.vec() / n;
}

Pose Pose::from_matrix(const Mat4& m) {
  return {Rotation::from_matrix(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>()};
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation.matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Pose invert(const Pose& p) {
  const Rotation inv = p.rotation.inverse();
  return {inv, -(inv * p.translation)};
}

double rotation_distance(const Rotation& a, const Rotation& b) { return (a.inverse() * b).angle(); }

DualQuaternion DualQuaternion::operator*(const DualQuaternion& other) const {
  return {real * other.real, add(real * other.dual, dual * other.real)};
}

DualQuaternion DualQuaternion::conjugate() const { return {real.conjugate(), dual.conjugate()}; }

Eigen::Matrix<double, 8, 1> DualQuaternion::coeffs() const {
  Eigen::Matrix<double, 8, 1> c;
  c << real.w(), real.x(), real.y(), real.z(), dual.w(), dual.x(), dual.y(), dual.z();
  return c;
}

DualQuaternion dq_from_pose(const Pose& p) {
  DualQuaternion d;
  d.real = p.rotation.quaternion();
  const Eigen::Quaterniond t(0.0, p.translation.x(), p.translation.y(), p.translation.z());
  d.dual = t * d.real;
  d.dual.coeffs() *= 0.5;
  return d;
}

Pose pose_from_dq(const DualQuaternion& d, double tolerance) {
  const double norm = d.real.norm();
  if (!(std::abs(norm - 1.0) <= tolerance)) {
    throw ConstraintViolation("dual quaternion real part is not unit (norm " + std::to_string(norm) + ")");
  }
  const double dot = d.real.coeffs().dot(d.dual.coeffs());
  if (!(std::abs(dot) <= tolerance)) {
    throw ConstraintViolation("dual quaternion parts are not orthogonal (dot " + std::to_string(dot) + ")");
  }
  const Eigen::Quaterniond t = d.dual * d.real.conjugate();
  return {Rotation(d.real), 2.0 * t.vec()};
}

}  // namespace laprecon
