#include <doctest.h>

#include <cmath>

#include "laprecon/errors.hpp"
#include "laprecon/metrics.hpp"
#include "laprecon/parallel.hpp"
#include "support.hpp"

using namespace laprecon;

namespace {

PointCloud cloud_of(std::initializer_list<Vec3> pts) {
  PointCloud c;
  c.points.assign(pts.begin(), pts.end());
  return c;
}

std::vector<FramePose> random_trajectory(std::mt19937_64& rng, int n, int first_id = 0) {
  std::vector<FramePose> t;
  Pose p = testing::random_pose(rng, 10.0);
  std::normal_distribution<double> g;
  for (int i = 0; i < n; ++i) {
    t.push_back({first_id + i, p});
    p = compose(p, Pose{Rotation::from_rotation_vector(Vec3(g(rng), g(rng), g(rng)) * 0.05), Vec3(g(rng), g(rng), g(rng))});
  }
  return t;
}

void check_metrics_equal(const CloudMetrics& a, const CloudMetrics& b, double tol) {
  CHECK(std::abs(a.chamfer - b.chamfer) <= tol);
  CHECK(std::abs(a.hausdorff - b.hausdorff) <= tol);
  CHECK(std::abs(a.rmse - b.rmse) <= tol);
}

}  // namespace

TEST_CASE("nearest-neighbour distances") {
  std::mt19937_64 rng(50);
  const PointCloud a = testing::random_cloud(rng, 500), b = testing::random_cloud(rng, 500);
  for (double d : nn_distances(a, a)) CHECK(d == 0.0);
  const auto three = nn_distances(cloud_of({Vec3(0, 0, 0)}), cloud_of({Vec3(3, 0, 0)}));
  REQUIRE(three.size() == 1);
  CHECK(three[0] == 3.0);

  const auto d = nn_distances(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    double best = INFINITY;
    for (const Vec3& q : b.points) best = std::min(best, (a.points[i] - q).norm());
    CHECK(d[i] == best);
  }
  CHECK_THROWS_AS(nn_distances(PointCloud{}, a), InvalidArgument);
  CHECK_THROWS_AS(nn_distances(a, PointCloud{}), InvalidArgument);
}

TEST_CASE("trimming") {
  std::vector<double> v(19, 1.0);
  v.insert(v.begin() + 7, 100.0);
  const auto t = trim_top(v, 0.05);
  CHECK(t == std::vector<double>(19, 1.0));
  CHECK(trim_top(v, 0.0) == v);
  CHECK(trim_top(std::vector<double>{5.0, 1.0}, 0.05) == std::vector<double>{5.0, 1.0});
  // Ties: the later-indexed copy goes first.
  const std::vector<double> ties{3.0, 9.0, 1.0, 9.0, 2.0, 9.0, 0.5, 0.25, 0.1, 0.2};
  CHECK(trim_top(ties, 0.2) == std::vector<double>{3.0, 9.0, 1.0, 2.0, 0.5, 0.25, 0.1, 0.2});
  CHECK_THROWS_AS(trim_top(v, 1.0), InvalidArgument);
  CHECK_THROWS_AS(trim_top(v, -0.1), InvalidArgument);
}

TEST_CASE("hand-checkable cloud metrics") {
  const CloudMetrics same = cloud_metrics(cloud_of({Vec3(1, 2, 3), Vec3(4, 5, 6)}), cloud_of({Vec3(1, 2, 3), Vec3(4, 5, 6)}));
  CHECK(same.chamfer == 0.0);
  CHECK(same.hausdorff == 0.0);
  CHECK(same.rmse == 0.0);

  // D_st = {0, 1}, D_ts = {0}: chamfer (0.5 + 0) / 2, pooled rmse sqrt(1/3).
  const CloudMetrics m = cloud_metrics(cloud_of({Vec3(0, 0, 0), Vec3(1, 0, 0)}), cloud_of({Vec3(0, 0, 0)}), 0.0);
  CHECK(m.chamfer == 0.25);
  CHECK(m.hausdorff == 1.0);
  CHECK(m.rmse == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-15));

  const CloudMetrics three = cloud_metrics(cloud_of({Vec3(0, 0, 0)}), cloud_of({Vec3(0, 3, 0)}));
  CHECK(three.chamfer == 3.0);
  CHECK(three.hausdorff == 3.0);
  CHECK(three.rmse == 3.0);
  CHECK_THROWS_AS(cloud_metrics(PointCloud{}, cloud_of({Vec3::Zero()})), InvalidArgument);
}

TEST_CASE("cloud metric properties") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    const PointCloud a = testing::random_cloud(rng, 300 + 50 * trial), b = testing::random_cloud(rng, 400);
    const CloudMetrics ab = cloud_metrics(a, b), ba = cloud_metrics(b, a);
    CHECK(ab.chamfer == ba.chamfer);
    CHECK(ab.hausdorff == ba.hausdorff);
    CHECK(std::abs(ab.rmse - ba.rmse) <= 1e-15 * ab.rmse);
    CHECK(ab.chamfer <= ab.hausdorff);
    CHECK(ab.rmse <= ab.hausdorff);

    CloudMetrics prev = cloud_metrics(a, b, 0.0);
    for (double f : {0.01, 0.05, 0.1, 0.25, 0.5}) {
      const CloudMetrics cur = cloud_metrics(a, b, f);
      CHECK(cur.chamfer <= prev.chamfer);
      CHECK(cur.hausdorff <= prev.hausdorff);
      CHECK(cur.rmse <= prev.rmse);
      CHECK(cur.trim_fraction == f);
      prev = cur;
    }

    const Pose x = testing::random_pose(rng);
    check_metrics_equal(cloud_metrics(transformed(a, x), transformed(b, x)), ab, 1e-9);
  }
}

TEST_CASE("metrics do not depend on the thread count") {
  std::mt19937_64 rng(52);
  const PointCloud a = testing::random_cloud(rng, 5000), b = testing::random_cloud(rng, 4000);
  const CloudMetrics one = cloud_metrics(a, b);
  set_thread_count(4);
  const CloudMetrics four = cloud_metrics(a, b);
  set_thread_count(1);
  CHECK(one.chamfer == four.chamfer);
  CHECK(one.hausdorff == four.hausdorff);
  CHECK(one.rmse == four.rmse);
}

TEST_CASE("trajectory alignment") {
  std::mt19937_64 rng(53);
  const auto gt = random_trajectory(rng, 20);
  const auto same = align_trajectory(gt, gt, true);
  REQUIRE(same.size() == gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    CHECK(same[i].frame_id == gt[i].frame_id);
    CHECK((same[i].pose.translation - gt[i].pose.translation).norm() <= 1e-9);
    CHECK(rotation_distance(same[i].pose.rotation, gt[i].pose.rotation) <= 1e-9);
  }

  const SimilarityTransform s{1.7, testing::random_rotation(rng), Vec3(5, -3, 40)};
  std::vector<FramePose> pred;
  for (const FramePose& f : gt) pred.push_back({f.frame_id, s.apply(f.pose)});
  SimilarityTransform applied;
  const auto aligned = align_trajectory(pred, gt, true, applied);
  CHECK(std::abs(applied.scale * s.scale - 1.0) <= 1e-9);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    CHECK((aligned[i].pose.translation - gt[i].pose.translation).norm() <= 1e-9);
    CHECK(rotation_distance(aligned[i].pose.rotation, gt[i].pose.rotation) <= 1e-9);
  }

  // Only common frames are returned.
  const auto partial = align_trajectory(std::span(pred).subspan(5, 10), gt, true);
  REQUIRE(partial.size() == 10);
  CHECK(partial.front().frame_id == 5);

  const auto other = random_trajectory(rng, 20, 100);
  CHECK_THROWS_AS(align_trajectory(other, gt, true), InvalidArgument);
  CHECK_THROWS_AS(align_trajectory(std::span(pred).first(2), gt, true), InvalidArgument);
}

TEST_CASE("relative pose error") {
  std::mt19937_64 rng(54);
  const auto gt = random_trajectory(rng, 30);
  const RelativePoseError zero = rpe(gt, gt);
  CHECK(zero.rotation == 0.0);
  CHECK(zero.translation == 0.0);
  CHECK(zero.pairs == 29);

  const Pose x = testing::random_pose(rng);
  std::vector<FramePose> left, left_gt;
  for (const FramePose& f : gt) left.push_back({f.frame_id, compose(x, f.pose)});
  const RelativePoseError inv = rpe(left, gt);
  CHECK(inv.rotation <= 1e-9);
  CHECK(inv.translation <= 1e-9);

  std::vector<FramePose> steps, long_steps;
  for (int i = 0; i < 10; ++i) {
    steps.push_back({i, Pose::from_translation(i, 0, 0)});
    long_steps.push_back({i, Pose::from_translation(1.1 * i, 0, 0)});
  }
  const RelativePoseError e = rpe(long_steps, steps);
  CHECK(e.translation == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(e.rotation == 0.0);

  // Left-invariance on noisy predictions.
  auto noisy = gt;
  std::normal_distribution<double> g;
  for (FramePose& f : noisy) f.pose = compose(f.pose, Pose{Rotation::from_rotation_vector(Vec3(g(rng), g(rng), g(rng)) * 0.01), Vec3(g(rng), 0, 0) * 0.1});
  std::vector<FramePose> xn;
  for (const FramePose& f : noisy) xn.push_back({f.frame_id, compose(x, f.pose)});
  for (const FramePose& f : gt) left_gt.push_back({f.frame_id, compose(x, f.pose)});
  const RelativePoseError a = rpe(noisy, gt), b = rpe(xn, left_gt);
  CHECK(std::abs(a.rotation - b.rotation) <= 1e-9);
  CHECK(std::abs(a.translation - b.translation) <= 1e-9);

  CHECK_THROWS_AS(rpe(std::span(gt).first(1), gt), InvalidArgument);
}

TEST_CASE("coverage") {
  CHECK(pose_coverage({0, 1, 2, 3}, 4) == 1.0);
  CHECK(pose_coverage({}, 4) == 0.0);
  std::set<int> ids;
  for (int i = 0; i < 88; ++i) ids.insert(i);
  CHECK(pose_coverage(ids, 100) == 0.88);
  CHECK_THROWS_AS(pose_coverage(ids, 0), InvalidArgument);
}
