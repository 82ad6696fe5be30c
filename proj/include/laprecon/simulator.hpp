#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "laprecon/pointcloud.hpp"
#include "laprecon/registration.hpp"
#include "laprecon/sampling.hpp"

namespace laprecon {

/// Ellipsoid with seeded radial sinusoidal bumps; a stand-in for a kidney or liver.
struct OrganShape {
  Vec3 semi_axes{50.0, 30.0, 25.0};
  double bump_amplitude = 2.0;
  int bump_frequency = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

/**
 * Star-shaped surface x = rho(u) u over unit directions u with
 * rho(u) = |e(u)| + amplitude * S(u), where e(u) is the ellipsoid point along u
 * and S in [-1, 1] is a mean of three seeded plane-wave sinusoids.
 * F(x) = |x| - rho(x / |x|) is negative inside.
 */
class OrganSurface {
 public:
  explicit OrganSurface(const OrganShape& shape);

  double radius(const Vec3& unit_direction) const;
  Vec3 point(const Vec3& unit_direction) const { return radius(unit_direction) * unit_direction; }
  double implicit(const Vec3& x) const;
  /// Analytic gradient of implicit().
  Vec3 gradient(const Vec3& x) const;
  Vec3 normal(const Vec3& x) const { return gradient(x).normalized(); }

 private:
  struct Wave {
    Vec3 direction;
    double phase;
  };
  OrganShape shape_;
  Vec3 inv_axes2_;
  std::vector<Wave> waves_;
};

/// n_points surface samples of near-uniform area density, with outward unit normals.
PointCloud synth_organ(const OrganShape& shape, int n_points);

struct ScanConfig {
  double fov_half_angle_deg = 35.0;
  double max_range = 300.0;
  double noise_sigma = 0.1;
  double dropout_fraction = 0.05;
  /// Points seen at more than this angle between normal and view ray are
  /// rejected; 90 keeps the plain front-facing rule.
  double max_incidence_deg = 90.0;
  /// Applied to the whole scan. Unset: random rotation, translation and scale drawn from the seed.
  std::optional<SimilarityTransform> frame_perturbation;

  void validate() const;
};

struct ScanResult {
  /// Union of captured points, ordered by organ index, in the perturbed frame. No normals.
  PointCloud scan;
  /// Source organ point of each scan point.
  std::vector<std::size_t> organ_index;
  /// The input trajectory, unperturbed.
  Trajectory true_poses;
  SimilarityTransform perturbation;
  /// Number of organ points visible from each pose (before dropout).
  std::vector<std::size_t> visible_per_pose;
};

/// Whether a camera at `camera` sees surface point `p` with normal `n`.
bool is_visible(const Pose& camera, const Vec3& p, const Vec3& n, double fov_half_angle_deg, double max_range,
                double max_incidence_deg = 90.0);

/// Random rotation, translation in [-100, 100] mm and scale in [0.5, 2], from the seed.
SimilarityTransform random_similarity(std::uint64_t seed);

/**
 * A point is captured by a pose when it is inside the viewing cone, within
 * range and front-facing. Each captured organ point appears once; its noise
 * and dropout come from the stream of the first pose that sees it, seeded by
 * (seed, frame_id).
 */
ScanResult simulate_scan(const PointCloud& organ, const Trajectory& trajectory, const ScanConfig& cfg, std::uint64_t seed);

/// floor(i * n_total / n_keep) for i < n_keep.
std::vector<std::size_t> subsample_frames(std::size_t n_total, std::size_t n_keep);

/// (indices[a], indices[b]) for all 0 < b - a <= window, lexicographic.
std::vector<std::pair<std::size_t, std::size_t>> sliding_window_pairs(const std::vector<std::size_t>& indices, std::size_t window);

}  // namespace laprecon
