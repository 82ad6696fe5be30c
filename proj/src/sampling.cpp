#include "laprecon/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "laprecon/errors.hpp"

namespace laprecon {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double elevation_deg(const Vec3& d) { return std::asin(std::clamp(d.y(), -1.0, 1.0)) / kDeg; }

Vec3 from_altitude_azimuth(double altitude_deg, double azimuth_deg) {
  const double alt = altitude_deg * kDeg;
  const double az = azimuth_deg * kDeg;
  return {std::cos(alt) * std::cos(az), std::sin(alt), std::cos(alt) * std::sin(az)};
}

void require_finite(const Vec3& v, const char* what) {
  if (!v.allFinite()) throw InvalidArgument(std::string(what) + " must be finite");
}

}  // namespace

void SampleConfig::validate() const {
  if (n_points < 1) throw InvalidArgument("sampling: n_points must be >= 1");
  if (!(theta_max_deg > 0.0 && theta_max_deg <= 90.0)) {
    throw InvalidArgument("sampling: theta_max must lie in (0, 90] degrees");
  }
  if (scheme == SamplingScheme::equal_angle) {
    if (!(d_azimuth_deg > 0.0 && d_azimuth_deg <= 360.0)) {
      throw InvalidArgument("sampling: azimuth increment must lie in (0, 360] degrees");
    }
    if (!(d_altitude_deg > 0.0 && d_altitude_deg <= 90.0)) {
      throw InvalidArgument("sampling: altitude increment must lie in (0, 90] degrees");
    }
  }
}

std::string_view to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::trocar:
      return "trocar";
    case TrajectoryKind::open_close:
      return "open_close";
    case TrajectoryKind::open_far:
      return "open_far";
  }
  return "unknown";
}

TrajectoryKind trajectory_kind_from_string(std::string_view name) {
  if (name == "trocar") return TrajectoryKind::trocar;
  if (name == "open_close" || name == "open-close") return TrajectoryKind::open_close;
  if (name == "open_far" || name == "open-far") return TrajectoryKind::open_far;
  throw InvalidArgument("unknown trajectory kind '" + std::string(name) + "'");
}

TrajectoryConfig TrajectoryConfig::defaults(TrajectoryKind kind) {
  TrajectoryConfig cfg;
  cfg.kind = kind;
  cfg.d_lap = kind == TrajectoryKind::open_far ? 120.0 : 80.0;
  return cfg;
}

void TrajectoryConfig::validate() const {
  sample.validate();
  require_finite(sample_center, "trajectory: sample_center");
  require_finite(up, "trajectory: up");
  if (!(up.norm() > 1e-12)) throw InvalidArgument("trajectory: up vector must be non-zero");
  if (kind == TrajectoryKind::trocar) {
    if (!(insertion_depth > 0.0)) throw InvalidArgument("trajectory: insertion_depth must be > 0");
    if (!(rcm_height > insertion_depth)) {
      throw InvalidArgument("trajectory: rcm_height must exceed insertion_depth so the tip stays above the sample");
    }
  } else if (!(d_lap > 0.0)) {
    throw InvalidArgument("trajectory: d_lap must be > 0");
  }
}

std::vector<Vec3> fibonacci_sphere(int n) {
  if (n < 1) throw InvalidArgument("fibonacci: n must be >= 1");
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(1.0 - y * y);
    const double theta = i * golden;
    out.emplace_back(r * std::cos(theta), y, r * std::sin(theta));
  }
  return out;
}

std::vector<Vec3> fibonacci_directions(int n, double theta_max_deg) {
  const double floor_deg = 90.0 - theta_max_deg;
  std::vector<Vec3> out;
  for (const Vec3& d : fibonacci_sphere(n)) {
    if (elevation_deg(d) > floor_deg) out.push_back(d);
  }
  return out;
}

std::vector<Vec3> equal_angle_directions(double d_azimuth_deg, double d_altitude_deg, double theta_max_deg) {
  if (!(d_azimuth_deg > 0.0) || !(d_altitude_deg > 0.0)) {
    throw InvalidArgument("equal-angle: increments must be positive");
  }
  if (d_azimuth_deg > 360.0 || d_altitude_deg > 90.0) {
    throw InvalidArgument("equal-angle: increments exceed a full turn / quarter turn");
  }
  const double floor_deg = 90.0 - theta_max_deg;
  std::vector<Vec3> out;
  out.emplace_back(0.0, 1.0, 0.0);
  for (int ring = 1;; ++ring) {
    const double altitude = 90.0 - ring * d_altitude_deg;
    if (!(altitude > floor_deg)) break;
    for (int k = 0;; ++k) {
      const double azimuth = k * d_azimuth_deg;
      if (!(azimuth < 360.0 - 1e-9)) break;
      const Vec3 d = from_altitude_azimuth(altitude, azimuth);
      if (elevation_deg(d) > floor_deg) out.push_back(d);
    }
  }
  return out;
}

std::vector<Vec3> sample_directions(const SampleConfig& cfg) {
  cfg.validate();
  if (cfg.scheme == SamplingScheme::fibonacci) return fibonacci_directions(cfg.n_points, cfg.theta_max_deg);
  return equal_angle_directions(cfg.d_azimuth_deg, cfg.d_altitude_deg, cfg.theta_max_deg);
}

Pose camera_pose(const Vec3& position, const Vec3& optical_axis, const Vec3& up_hint) {
  const double n = optical_axis.norm();
  if (!(n > 0.0)) throw InvalidArgument("camera optical axis must be non-zero");
  const Vec3 z = optical_axis / n;
  Vec3 x = up_hint.cross(z);
  if (x.norm() < 1e-6) x = Vec3::UnitX().cross(z);
  if (x.norm() < 1e-6) x = Vec3::UnitZ().cross(z);
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return {Rotation::from_matrix(r), position};
}

Pose look_at_pose(const Vec3& center, const Vec3& direction, double distance, const Vec3& up_hint) {
  const double n = direction.norm();
  if (!(n > 0.0)) throw InvalidArgument("look_at: direction must be non-zero");
  if (std::abs(n - 1.0) > 1e-9) throw InvalidArgument("look_at: direction must be a unit vector");
  if (!(distance >= 0.0)) throw InvalidArgument("look_at: distance must be >= 0");
  return camera_pose(center + distance * direction, -direction, up_hint);
}

double optical_axis_distance(const Pose& camera, const Vec3& point) {
  const Vec3 axis = camera.rotation * Vec3::UnitZ();
  const Vec3 offset = point - camera.translation;
  return (offset - offset.dot(axis) * axis).norm();
}

Trajectory generate_trajectory(const TrajectoryConfig& cfg) {
  cfg.validate();
  const Vec3 up = cfg.up.normalized();
  std::vector<Vec3> dirs = sample_directions(cfg.sample);
  if (dirs.empty()) throw EmptyTrajectory("no sampling direction survives the elevation cap");
  if (up != Vec3::UnitY()) {
    const Eigen::Quaterniond align = Eigen::Quaterniond::FromTwoVectors(Vec3::UnitY(), up);
    for (Vec3& d : dirs) d = (align * d).normalized();
  }

  Trajectory traj;
  traj.kind = cfg.kind;
  traj.poses.reserve(dirs.size());
  if (cfg.kind == TrajectoryKind::trocar) {
    traj.rcm = cfg.sample_center + cfg.rcm_height * up;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const Vec3 tip = traj.rcm - cfg.insertion_depth * dirs[i];
      traj.poses.push_back({static_cast<int>(i), camera_pose(tip, -dirs[i], up)});
    }
  } else {
    traj.rcm = cfg.sample_center;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      traj.poses.push_back({static_cast<int>(i), look_at_pose(cfg.sample_center, dirs[i], cfg.d_lap, up)});
    }
  }
  return traj;
}

}  // namespace laprecon
