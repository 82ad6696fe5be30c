#pragma once

#include <random>

#include "laprecon/geometry.hpp"
#include "laprecon/pointcloud.hpp"

namespace testing {

using laprecon::Pose;
using laprecon::Rotation;
using laprecon::Vec3;

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v;
  do {
    v = Vec3(g(rng), g(rng), g(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

// Uniform over SO(3) via a normalized Gaussian quaternion.
inline Rotation random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return Rotation(g(rng), g(rng), g(rng), g(rng));
}

inline Pose random_pose(std::mt19937_64& rng, double extent = 100.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  return {random_rotation(rng), Vec3(u(rng), u(rng), u(rng))};
}

inline double angle_between(const Rotation& a, const Rotation& b) { return laprecon::rotation_distance(a, b); }

inline double translation_gap(const Pose& a, const Pose& b) { return (a.translation - b.translation).norm(); }

inline laprecon::PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double extent = 10.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  laprecon::PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(u(rng), u(rng), u(rng));
  return c;
}

}  // namespace testing
