#include <doctest.h>

#include <numbers>

#include "laprecon/errors.hpp"
#include "laprecon/registration.hpp"
#include "laprecon/simulator.hpp"
#include "support.hpp"

using namespace laprecon;

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;

PointCloud sphere_cloud(std::size_t n, double radius) {
  PointCloud c;
  const auto dirs = fibonacci_sphere(static_cast<int>(n));
  for (const Vec3& d : dirs) {
    c.points.push_back(radius * d);
    c.normals.push_back(d);
  }
  return c;
}
}  // namespace

TEST_CASE("similarity transform basics") {
  std::mt19937_64 rng(40);
  for (int i = 0; i < 50; ++i) {
    const SimilarityTransform s{0.5 + i * 0.05, testing::random_rotation(rng), Vec3(i, -2.0 * i, 3)};
    const Vec3 p(1.25, -7.5, 3.0);
    CHECK((s.inverse().apply(s.apply(p)) - p).norm() <= 1e-9);
    const SimilarityTransform t{2.0, testing::random_rotation(rng), Vec3(1, 1, 1)};
    CHECK((compose(s, t).apply(p) - s.apply(t.apply(p))).norm() <= 1e-9);
  }
}

TEST_CASE("umeyama examples") {
  std::mt19937_64 rng(41);
  const auto src = testing::random_cloud(rng, 10).points;

  const SimilarityTransform id = umeyama(src, src, true);
  CHECK(id.rotation.angle() <= 1e-12);
  CHECK(std::abs(id.scale - 1.0) <= 1e-12);
  CHECK(id.translation.norm() <= 1e-12);

  std::vector<Vec3> shifted;
  for (const Vec3& p : src) shifted.push_back(p + Vec3(1, 2, 3));
  const SimilarityTransform t = umeyama(src, shifted, true);
  CHECK(t.rotation.angle() <= 1e-12);
  CHECK(std::abs(t.scale - 1.0) <= 1e-12);
  CHECK((t.translation - Vec3(1, 2, 3)).norm() <= 1e-12);

  const Rotation rz = Rotation::from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 2);
  std::vector<Vec3> scaled;
  for (const Vec3& p : src) scaled.push_back(2.0 * (rz * p));
  const SimilarityTransform s = umeyama(src, scaled, true);
  CHECK(std::abs(s.scale - 2.0) <= 1e-12);
  CHECK(rotation_distance(s.rotation, rz) <= 1e-12);
  CHECK(std::abs(s.rotation.axis().dot(Vec3::UnitZ()) - 1.0) <= 1e-12);

  // Rigid mode keeps scale 1 and still finds the rotation.
  const SimilarityTransform r = umeyama(src, scaled, false);
  CHECK(r.scale == 1.0);
  CHECK(rotation_distance(r.rotation, rz) <= 1e-9);
}

TEST_CASE("umeyama exactness over random similarities") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> scale(0.2, 5.0), t(-100.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    const SimilarityTransform truth{scale(rng), testing::random_rotation(rng), Vec3(t(rng), t(rng), t(rng))};
    const auto src = testing::random_cloud(rng, 3 + trial % 30, 20.0).points;
    std::vector<Vec3> dst;
    for (const Vec3& p : src) dst.push_back(truth.apply(p));
    const SimilarityTransform est = umeyama(src, dst, true);
    CHECK(rotation_distance(est.rotation, truth.rotation) <= 1e-9);
    CHECK(std::abs(est.scale / truth.scale - 1.0) <= 1e-9);
    CHECK((est.translation - truth.translation).norm() <= 1e-6);
    CHECK(est.rotation.matrix().determinant() == doctest::Approx(1.0));
  }
}

TEST_CASE("umeyama reflection and degeneracy") {
  // A mirrored point set: the best proper rotation is returned, never a reflection.
  std::mt19937_64 rng(43);
  const auto src = testing::random_cloud(rng, 12).points;
  std::vector<Vec3> mirrored;
  for (const Vec3& p : src) mirrored.emplace_back(-p.x(), p.y(), p.z());
  const SimilarityTransform m = umeyama(src, mirrored, true);
  CHECK(m.rotation.matrix().determinant() == doctest::Approx(1.0));

  std::vector<Vec3> line;
  for (int i = 0; i < 10; ++i) line.emplace_back(i, 2.0 * i, -i);
  CHECK_THROWS_AS(umeyama(line, line, true), RankDeficiency);
  CHECK_THROWS_AS(umeyama(std::span(src).first(2), std::span(src).first(2), true), InvalidArgument);
  CHECK_THROWS_AS(umeyama(std::span(src).first(5), std::span(src).first(6), true), InvalidArgument);
}

TEST_CASE("tukey weight") {
  CHECK(tukey_weight(0.0, 1.0) == 1.0);
  CHECK(tukey_weight(1.0, 1.0) == 0.0);
  CHECK(tukey_weight(0.5, 1.0) == 0.5625);
  CHECK(tukey_weight(-0.5, 1.0) == 0.5625);
  CHECK(tukey_weight(1.0000001, 1.0) == 0.0);
  CHECK(tukey_weight(3.0, 2.0) == 0.0);
}

TEST_CASE("tukey cutoff removes far residuals from the normal equations") {
  std::mt19937_64 rng(44);
  std::vector<Vec3> p, q, n;
  for (int i = 0; i < 200; ++i) {
    const Vec3 normal = testing::random_unit(rng);
    const Vec3 target = testing::random_cloud(rng, 1, 30.0).points[0];
    const double residual = -2.0 + 4.0 * i / 199.0;  // spans both sides of k = 1
    p.push_back(target + residual * normal);
    q.push_back(target);
    n.push_back(normal);
  }
  const PointToPlaneSystem all = point_to_plane_system(p, q, n, 1.0);
  std::vector<Vec3> pk, qk, nk;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (std::abs((p[i] - q[i]).dot(n[i])) <= 1.0) {
      pk.push_back(p[i]);
      qk.push_back(q[i]);
      nk.push_back(n[i]);
    }
  }
  const PointToPlaneSystem kept = point_to_plane_system(pk, qk, nk, 1.0);
  CHECK(all.hessian == kept.hessian);
  CHECK(all.gradient == kept.gradient);
  CHECK(all.active < p.size());
}

TEST_CASE("icp: identical clouds") {
  const PointCloud c = sphere_cloud(2000, 30.0);
  const RegistrationResult r = icp_point_to_plane(c, c);
  CHECK(r.transform.rotation.angle() <= 1e-9);
  CHECK(r.transform.translation.norm() <= 1e-9);
  CHECK(r.fitness == 1.0);
  CHECK(r.inlier_rmse <= 1e-9);
}

TEST_CASE("icp: recovers a 1 mm shift") {
  PointCloud target;
  const OrganShape shape;
  target = synth_organ(shape, 2000);
  const Vec3 shift(1.0, 0.0, 0.0);
  const PointCloud source = transformed(target, Pose::from_translation(shift));
  const RegistrationResult r = icp_point_to_plane(source, target);
  CHECK((r.transform.translation + shift).norm() <= 1e-3);
  CHECK(r.transform.rotation.angle() <= 1e-4);
  for (std::size_t i = 1; i < r.rmse_history.size(); ++i) CHECK(r.rmse_history[i] <= r.rmse_history[i - 1] + 1e-12);
}

TEST_CASE("icp: init is composed into the result") {
  const PointCloud target = synth_organ(OrganShape{}, 3000);
  const Pose truth{Rotation::from_axis_angle(Vec3(1, 2, 3), 3 * kDeg), Vec3(1.0, -1.5, 0.5)};
  const PointCloud source = transformed(target, invert(truth));
  const RegistrationResult r = icp_point_to_plane(source, target, IcpParams{}, Pose::from_translation(0.5, -0.5, 0));
  CHECK(rotation_distance(r.transform.rotation, truth.rotation) <= 1e-4);
  CHECK((r.transform.translation - truth.translation).norm() <= 1e-3);
  CHECK(r.fitness > 0.99);
}

TEST_CASE("icp: no silent wrong answers without overlap") {
  const PointCloud target = sphere_cloud(2000, 30.0);
  PointCloud sparse;
  for (std::size_t i = 0; i < target.size(); i += 100) sparse.points.push_back(target.points[i] * 1.4);
  // Every source point sits 12 mm outside the surface: beyond the 5 mm gate.
  CHECK_THROWS_AS(icp_point_to_plane(sparse, target), NoOverlap);

  PointCloud far = transformed(target, Pose::from_translation(500, 0, 0));
  CHECK_THROWS_AS(icp_point_to_plane(far, target), NoOverlap);

  PointCloud no_normals = target;
  no_normals.normals.clear();
  CHECK_THROWS_AS(icp_point_to_plane(target, no_normals), InvalidArgument);
  CHECK_THROWS_AS(icp_point_to_plane(PointCloud{}, target), InvalidArgument);

  IcpParams bad;
  bad.tukey_k = 0.0;
  CHECK_THROWS_AS(icp_point_to_plane(target, target, bad), InvalidArgument);
}

TEST_CASE("icp: noisy organ, small perturbation") {
  const PointCloud organ = synth_organ(OrganShape{}, 20000);
  std::mt19937_64 rng(45);
  std::normal_distribution<double> g(0.0, 0.1);
  for (int trial = 0; trial < 5; ++trial) {
    PointCloud source;
    for (const Vec3& p : organ.points) source.points.push_back(p + Vec3(g(rng), g(rng), g(rng)));
    const Pose perturb{Rotation::from_axis_angle(testing::random_unit(rng), 5 * kDeg), 2.0 * testing::random_unit(rng)};
    source = transformed(source, perturb);
    const RegistrationResult r = icp_point_to_plane(source, organ);
    CHECK(r.inlier_rmse <= 0.2);
    for (std::size_t i = 1; i < r.rmse_history.size(); ++i) CHECK(r.rmse_history[i] <= r.rmse_history[i - 1] + 1e-12);
    CHECK(r.iterations_run <= IcpParams{}.max_iterations);
  }
}
