#include "laprecon/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "laprecon/errors.hpp"
#include "laprecon/parallel.hpp"

namespace laprecon {
namespace {

constexpr int kWaves = 3;
constexpr std::uint64_t kNoiseStream = 0x5ca4'0001;
constexpr std::uint64_t kPerturbStream = 0x5ca4'0002;

std::mt19937_64 seeded(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32), static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  return std::mt19937_64(seq);
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    const Vec3 v(g(rng), g(rng), g(rng));
    if (v.norm() > 1e-9) return v.normalized();
  }
}

}  // namespace

void OrganShape::validate() const {
  if (!(semi_axes.minCoeff() > 0.0) || !semi_axes.allFinite()) throw InvalidArgument("organ: semi-axes must be positive");
  if (!(bump_amplitude >= 0.0)) throw InvalidArgument("organ: bump amplitude must be >= 0");
  if (!(bump_amplitude < semi_axes.minCoeff())) throw InvalidArgument("organ: bump amplitude must stay below the smallest semi-axis");
  if (bump_frequency < 0) throw InvalidArgument("organ: bump frequency must be >= 0");
}

OrganSurface::OrganSurface(const OrganShape& shape) : shape_(shape) {
  shape.validate();
  inv_axes2_ = shape.semi_axes.cwiseProduct(shape.semi_axes).cwiseInverse();
  std::mt19937_64 rng = seeded(shape.seed, 0x0a6a, 0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < kWaves; ++i) {
    const Vec3 dir = random_unit(rng);
    waves_.push_back({dir, phase(rng)});
  }
}

double OrganSurface::radius(const Vec3& u) const {
  const double q = u.dot(inv_axes2_.cwiseProduct(u));
  double bumps = 0.0;
  const double f = shape_.bump_frequency * std::numbers::pi;
  for (const Wave& w : waves_) bumps += std::sin(f * w.direction.dot(u) + w.phase);
  return 1.0 / std::sqrt(q) + shape_.bump_amplitude * bumps / kWaves;
}

double OrganSurface::implicit(const Vec3& x) const {
  const double r = x.norm();
  return r - radius(x / r);
}

Vec3 OrganSurface::gradient(const Vec3& x) const {
  const double r = x.norm();
  const Vec3 u = x / r;
  const Vec3 du = inv_axes2_.cwiseProduct(u);
  const double q = u.dot(du);
  Vec3 grad_rho = -du / (q * std::sqrt(q));
  const double f = shape_.bump_frequency * std::numbers::pi;
  for (const Wave& w : waves_) {
    grad_rho += shape_.bump_amplitude / kWaves * f * std::cos(f * w.direction.dot(u) + w.phase) * w.direction;
  }
  const Vec3 tangential = grad_rho - grad_rho.dot(u) * u;
  return u - tangential / r;
}

PointCloud synth_organ(const OrganShape& shape, int n_points) {
  if (n_points < 100) throw InvalidArgument("synth_organ: need at least 100 points");
  const OrganSurface surface(shape);
  // Directions are uniform on the sphere, the surface is not: oversample and
  // keep candidates in proportion to the area element rho^2 / (n . u), so the
  // cloud has near-uniform density along the elongated axis too. The
  // oversampling grows until no candidate spans more than one pick.
  for (std::size_t oversample = 8;; oversample *= 2) {
    const std::vector<Vec3> dirs = fibonacci_sphere(static_cast<int>(oversample) * n_points);
    std::vector<double> area(dirs.size());
    std::vector<Vec3> points(dirs.size());
    double total = 0.0, largest = 0.0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      points[i] = surface.point(dirs[i]);
      area[i] = points[i].squaredNorm() / surface.normal(points[i]).dot(dirs[i]);
      total += area[i];
      largest = std::max(largest, area[i]);
    }
    const double step = total / n_points;
    if (largest >= step) continue;

    PointCloud cloud;
    cloud.points.reserve(static_cast<std::size_t>(n_points));
    cloud.normals.reserve(static_cast<std::size_t>(n_points));
    double acc = 0.0, next = 0.5 * step;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      acc += area[i];
      if (acc > next) {
        cloud.points.push_back(points[i]);
        cloud.normals.push_back(surface.normal(points[i]));
        next += step;
      }
    }
    return cloud;
  }
}

void ScanConfig::validate() const {
  if (!(fov_half_angle_deg > 0.0 && fov_half_angle_deg < 90.0)) throw InvalidArgument("scan: fov_half_angle must lie in (0, 90)");
  if (!(max_range > 0.0)) throw InvalidArgument("scan: max_range must be > 0");
  if (!(noise_sigma >= 0.0)) throw InvalidArgument("scan: noise_sigma must be >= 0");
  if (!(dropout_fraction >= 0.0 && dropout_fraction < 1.0)) throw InvalidArgument("scan: dropout_fraction must lie in [0, 1)");
  if (!(max_incidence_deg > 0.0 && max_incidence_deg <= 90.0)) throw InvalidArgument("scan: max_incidence must lie in (0, 90]");
  if (frame_perturbation && !(frame_perturbation->scale > 0.0)) throw InvalidArgument("scan: perturbation scale must be > 0");
}

bool is_visible(const Pose& camera, const Vec3& p, const Vec3& n, double fov_half_angle_deg, double max_range,
                double max_incidence_deg) {
  const Vec3 to_point = p - camera.translation;
  const double range = to_point.norm();
  if (range > max_range || range == 0.0) return false;
  const double facing = n.dot(-to_point);
  if (!(facing > 0.0)) return false;
  if (max_incidence_deg < 90.0 && facing < range * std::cos(max_incidence_deg * std::numbers::pi / 180.0)) return false;
  const Vec3 axis = camera.rotation * Vec3::UnitZ();
  return axis.dot(to_point) >= range * std::cos(fov_half_angle_deg * std::numbers::pi / 180.0);
}

SimilarityTransform random_similarity(std::uint64_t seed) {
  std::mt19937_64 rng = seeded(seed, kPerturbStream, 0);
  std::normal_distribution<double> g(0.0, 1.0);
  const Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  std::uniform_real_distribution<double> shift(-100.0, 100.0);
  std::uniform_real_distribution<double> log_scale(std::log(0.5), std::log(2.0));
  SimilarityTransform s;
  s.rotation = Rotation(q);
  s.translation = Vec3(shift(rng), shift(rng), shift(rng));
  s.scale = std::exp(log_scale(rng));
  return s;
}

ScanResult simulate_scan(const PointCloud& organ, const Trajectory& trajectory, const ScanConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (trajectory.poses.empty()) throw InvalidArgument("simulate_scan: trajectory is empty");
  if (!organ.has_normals()) throw InvalidArgument("simulate_scan: organ cloud needs normals");
  organ.validate();

  const std::size_t n_pose = trajectory.poses.size();
  const std::size_t n_pt = organ.size();
  std::vector<std::vector<std::uint8_t>> visible(n_pose);
  parallel_for(n_pose, [&](std::size_t p) {
    visible[p].resize(n_pt);
    const Pose& cam = trajectory.poses[p].pose;
    for (std::size_t j = 0; j < n_pt; ++j) {
      visible[p][j] =
          is_visible(cam, organ.points[j], organ.normals[j], cfg.fov_half_angle_deg, cfg.max_range, cfg.max_incidence_deg);
    }
  });

  ScanResult result;
  result.true_poses = trajectory;
  result.perturbation = cfg.frame_perturbation.value_or(random_similarity(seed));
  result.visible_per_pose.resize(n_pose);
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> owner(n_pt, kNone);
  for (std::size_t p = 0; p < n_pose; ++p) {
    for (std::size_t j = 0; j < n_pt; ++j) {
      if (!visible[p][j]) continue;
      ++result.visible_per_pose[p];
      if (owner[j] == kNone) owner[j] = p;
    }
  }

  std::vector<Vec3> noisy(n_pt);
  std::vector<std::uint8_t> kept(n_pt, 0);
  parallel_for(n_pose, [&](std::size_t p) {
    std::mt19937_64 rng = seeded(seed, kNoiseStream, static_cast<std::uint64_t>(trajectory.poses[p].frame_id));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t j = 0; j < n_pt; ++j) {
      if (owner[j] != p) continue;
      const bool drop = unit(rng) < cfg.dropout_fraction;
      const Vec3 e(noise(rng), noise(rng), noise(rng));
      if (drop) continue;
      noisy[j] = organ.points[j] + cfg.noise_sigma * e;
      kept[j] = 1;
    }
  });

  for (std::size_t j = 0; j < n_pt; ++j) {
    if (!kept[j]) continue;
    result.scan.points.push_back(result.perturbation.apply(noisy[j]));
    result.organ_index.push_back(j);
  }
  return result;
}

std::vector<std::size_t> subsample_frames(std::size_t n_total, std::size_t n_keep) {
  if (n_keep < 1) throw InvalidArgument("subsample_frames: n_keep must be >= 1");
  if (n_keep > n_total) throw InvalidArgument("subsample_frames: n_keep exceeds n_total");
  // i * n_total / n_keep without forming the (possibly overflowing) product.
  const std::size_t q = n_total / n_keep, r = n_total % n_keep;
  std::vector<std::size_t> out(n_keep);
  for (std::size_t i = 0; i < n_keep; ++i) out[i] = i * q + (i * r) / n_keep;
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> sliding_window_pairs(const std::vector<std::size_t>& indices, std::size_t window) {
  if (window < 1) throw InvalidArgument("sliding_window_pairs: window must be >= 1");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < indices.size(); ++a) {
    for (std::size_t b = a + 1; b < indices.size() && b - a <= window; ++b) out.emplace_back(indices[a], indices[b]);
  }
  return out;
}

}  // namespace laprecon
