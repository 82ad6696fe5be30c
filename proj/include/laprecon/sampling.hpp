#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "laprecon/geometry.hpp"

namespace laprecon {

enum class SamplingScheme { fibonacci, equal_angle };

/// Direction sampler settings. Angles in degrees.
struct SampleConfig {
  SamplingScheme scheme = SamplingScheme::fibonacci;
  int n_points = 200;
  /// Only directions with elevation > 90 - theta_max are kept.
  double theta_max_deg = 60.0;
  double d_azimuth_deg = 30.0;
  double d_altitude_deg = 15.0;

  void validate() const;
};

enum class TrajectoryKind { trocar, open_close, open_far };

std::string_view to_string(TrajectoryKind kind);
/// Accepts "trocar", "open_close"/"open-close", "open_far"/"open-far".
TrajectoryKind trajectory_kind_from_string(std::string_view name);

struct TrajectoryConfig {
  TrajectoryKind kind = TrajectoryKind::open_close;
  Vec3 sample_center = Vec3::Zero();
  /// World vertical; directions are sampled about it.
  Vec3 up = Vec3::UnitY();
  /// Trocar only: RCM height above the sample centre and tip depth past the RCM.
  double rcm_height = 120.0;
  double insertion_depth = 40.0;
  /// Open kinds only: RCM (at the sample centre) to laparoscope tip.
  double d_lap = 80.0;
  SampleConfig sample;

  /// Geometry defaults for each kind: trocar RCM 120 mm up with the tip
  /// 80 mm above the sample, open-close 80 mm, open-far 120 mm.
  static TrajectoryConfig defaults(TrajectoryKind kind);
  void validate() const;
};

struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::open_close;
  Vec3 rcm = Vec3::Zero();
  std::vector<FramePose> poses;
};

/**
 * Golden-angle spiral over the sphere with +y vertical:
 * y_i = 1 - 2(i + 0.5)/n, azimuth_i = i * pi(3 - sqrt 5), radius sqrt(1 - y_i^2).
 * Points with elevation asin(y) <= 90 - theta_max are dropped; order is kept.
 */
std::vector<Vec3> fibonacci_directions(int n, double theta_max_deg);

/// Unfiltered golden-angle spiral over the full sphere.
std::vector<Vec3> fibonacci_sphere(int n);

/**
 * Rings of constant altitude 90, 90 - d_alt, ... (strictly above the cap),
 * each with azimuths 0, d_az, ... < 360. The pole is emitted once.
 */
std::vector<Vec3> equal_angle_directions(double d_azimuth_deg, double d_altitude_deg, double theta_max_deg);

/// Directions for a sampler config, +y vertical.
std::vector<Vec3> sample_directions(const SampleConfig& cfg);

/**
 * Camera-to-world pose of a camera sitting at center + distance * direction
 * and looking back at center. Camera +z is the optical axis, camera x is
 * normalize(up_hint x optical); when that cross product is shorter than 1e-6
 * the hint (1,0,0) is used instead.
 */
Pose look_at_pose(const Vec3& center, const Vec3& direction, double distance, const Vec3& up_hint = Vec3::UnitY());

/// Camera-to-world pose at `position` with optical axis `optical_axis`, roll fixed by the same up-hint rule.
Pose camera_pose(const Vec3& position, const Vec3& optical_axis, const Vec3& up_hint = Vec3::UnitY());

/// Distance from `point` to the optical-axis line of a camera pose.
double optical_axis_distance(const Pose& camera, const Vec3& point);

Trajectory generate_trajectory(const TrajectoryConfig& cfg);

}  // namespace laprecon
