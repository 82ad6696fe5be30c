#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace laprecon {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/**
 * Unit quaternion rotation, Hamilton convention, stored scalar-first.
 *
 * Every constructor renormalizes and picks the representative with w >= 0
 * (for w == 0 the first non-zero vector component is made positive), so two
 * rotations compare equal iff their coefficients do.
 */
class Rotation {
 public:
  Rotation() = default;
  Rotation(double w, double x, double y, double z);
  explicit Rotation(const Eigen::Quaterniond& q);

  static Rotation identity() { return {}; }
  /// Right-handed rotation by `angle` radians about `axis` (need not be unit).
  static Rotation from_axis_angle(const Vec3& axis, double angle);
  /// `m` must be orthonormal with det +1.
  static Rotation from_matrix(const Mat3& m);
  /// Rotation by |v| radians about v / |v|; identity for v = 0.
  static Rotation from_rotation_vector(const Vec3& v);

  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }
  const Eigen::Quaterniond& quaternion() const { return q_; }

  Mat3 matrix() const { return q_.toRotationMatrix(); }
  Rotation inverse() const { return Rotation(q_.conjugate()); }
  /// Angle in [0, pi].
  double angle() const;
  /// Unit rotation axis; (1,0,0) for the identity.
  Vec3 axis() const;

  Vec3 operator*(const Vec3& v) const { return q_ * v; }
  Rotation operator*(const Rotation& other) const { return Rotation(q_ * other.q_); }

  friend bool operator==(const Rotation& a, const Rotation& b) { return a.q_.coeffs() == b.q_.coeffs(); }

 private:
  Eigen::Quaterniond q_ = Eigen::Quaterniond::Identity();
};

inline double rotation_angle(const Rotation& r) { return r.angle(); }

/// Rigid transform x -> R x + t. Lengths in millimetres.
struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Rotation{}, t}; }
  static Pose from_translation(double x, double y, double z) { return from_translation(Vec3(x, y, z)); }
  static Pose from_rotation(const Rotation& r) { return {r, Vec3::Zero()}; }
  /// Top-left 3x3 block must be a rotation.
  static Pose from_matrix(const Mat4& m);

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 operator*(const Vec3& p) const { return apply(p); }
  Mat4 matrix() const;

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.rotation == b.rotation && a.translation == b.translation;
  }
};

/// Result maps x to a(b(x)).
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& p);
inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

/// Rotation angle of a^-1 b.
double rotation_distance(const Rotation& a, const Rotation& b);

/// A pose tagged with the frame it belongs to.
struct FramePose {
  int frame_id = 0;
  Pose pose;
};

/**
 * Unit dual quaternion q_r + eps q_d with |q_r| = 1 and <q_r, q_d> = 0.
 * For a pose (R, t): q_r = R and q_d = 1/2 (0, t) * q_r.
 */
struct DualQuaternion {
  Eigen::Quaterniond real = Eigen::Quaterniond::Identity();
  Eigen::Quaterniond dual = Eigen::Quaterniond(0, 0, 0, 0);

  DualQuaternion operator*(const DualQuaternion& other) const;
  DualQuaternion conjugate() const;
  /// Scalar-first real part followed by scalar-first dual part.
  Eigen::Matrix<double, 8, 1> coeffs() const;
};

DualQuaternion dq_from_pose(const Pose& p);
/// Throws ConstraintViolation when the unit constraints fail by more than `tolerance`.
Pose pose_from_dq(const DualQuaternion& d, double tolerance = 1e-9);

}  // namespace laprecon
