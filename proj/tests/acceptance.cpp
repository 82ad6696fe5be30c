// Acceptance checks: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "laprecon/calibration.hpp"
#include "laprecon/errors.hpp"
#include "laprecon/kdtree.hpp"
#include "laprecon/metrics.hpp"
#include "laprecon/pipeline.hpp"
#include "laprecon/pointcloud.hpp"
#include "laprecon/registration.hpp"
#include "laprecon/sampling.hpp"
#include "laprecon/simulator.hpp"
#include "support.hpp"

using namespace laprecon;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail = what;
    ok = ok && cond;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double nn_geodesic_cv(const std::vector<Vec3>& dirs) {
  std::vector<double> nn;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    double best = 10.0;
    for (std::size_t j = 0; j < dirs.size(); ++j)
      if (i != j) best = std::min(best, std::acos(std::clamp(dirs[i].dot(dirs[j]), -1.0, 1.0)));
    nn.push_back(best);
  }
  const double mean = std::accumulate(nn.begin(), nn.end(), 0.0) / static_cast<double>(nn.size());
  double var = 0.0;
  for (double d : nn) var += (d - mean) * (d - mean);
  return std::sqrt(var / static_cast<double>(nn.size())) / mean;
}

Outcome fibonacci_sampler() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto fib = fibonacci_directions(500, 90.0);
  const double elapsed = seconds_since(t0);
  for (const Vec3& d : fib) o.require(std::abs(d.norm() - 1.0) <= 1e-12, "non-unit direction");
  const double cv = nn_geodesic_cv(fib);
  const auto grid = equal_angle_directions(15.0, 90.0 / 12.0, 90.0);
  const double cv_fib = nn_geodesic_cv(fibonacci_directions(2 * static_cast<int>(grid.size()), 90.0));
  const double cv_grid = nn_geodesic_cv(grid);
  o.require(cv < 0.25, "cv >= 0.25");
  o.require(cv_fib < cv_grid, "not more uniform than equal-angle");
  o.require(elapsed < 0.1, "too slow");
  o.detail += fmt("cv=%.4f; at %g directions fibonacci %.4f vs equal-angle %.4f", cv, static_cast<double>(grid.size()), cv_fib, cv_grid) +
              fmt("; %.2g s", elapsed);
  return o;
}

Outcome trajectory_geometry() {
  Outcome o;
  double worst = 0.0;
  for (TrajectoryKind kind : {TrajectoryKind::trocar, TrajectoryKind::open_close, TrajectoryKind::open_far}) {
    TrajectoryConfig cfg = TrajectoryConfig::defaults(kind);
    cfg.sample.n_points = 400;
    cfg.sample.theta_max_deg = 90.0;
    const Trajectory t = generate_trajectory(cfg);
    o.require(t.poses.size() == 200, "expected 200 poses");
    for (const FramePose& f : t.poses) worst = std::max(worst, optical_axis_distance(f.pose, t.rcm));
    if (kind == TrajectoryKind::trocar) {
      for (const FramePose& f : t.poses) {
        const double height = (f.pose.translation - cfg.sample_center).dot(cfg.up);
        o.require(std::abs((f.pose.translation - t.rcm).norm() - 40.0) <= 1e-9, "tip not 40 mm past the rcm");
        o.require(height >= 80.0 - 1e-9, "tip below 80 mm");
      }
    }
  }
  o.require(worst < 1e-6, "rcm residual");
  TrajectoryConfig straight = TrajectoryConfig::defaults(TrajectoryKind::trocar);
  straight.sample.scheme = SamplingScheme::equal_angle;
  straight.sample.theta_max_deg = 10.0;
  straight.sample.d_altitude_deg = 10.0;
  const Trajectory s = generate_trajectory(straight);
  const double tip_error = (s.poses.at(0).pose.translation - (straight.sample_center + 80.0 * straight.up)).norm();
  o.require(tip_error <= 1e-12, "vertical tip not 80 mm above the centre");
  o.detail += fmt("max rcm residual %.3g mm; vertical tip error %.3g mm", worst, tip_error);
  return o;
}

Outcome hand_eye() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(10 * kDeg, 170 * kDeg), shift(-50, 50);
  double rot = 0.0, trans = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 100; ++trial) {
    const Pose x = testing::random_pose(rng);
    std::vector<MotionPair> pairs;
    for (int i = 0; i < 20; ++i) {
      const Pose a{Rotation::from_axis_angle(testing::random_unit(rng), angle(rng)), Vec3(shift(rng), shift(rng), shift(rng))};
      pairs.push_back({a, compose(invert(x), compose(a, x))});
    }
    const Pose est = solve_hand_eye(pairs);
    rot = std::max(rot, rotation_distance(est.rotation, x.rotation));
    trans = std::max(trans, (est.translation - x.translation).norm());
  }
  const double elapsed = seconds_since(t0);
  o.require(rot <= 1e-6 && trans <= 1e-6, "recovery error");
  o.require(elapsed < 1.0, "too slow");

  const Pose x = testing::random_pose(rng);
  const Vec3 axis = testing::random_unit(rng);
  std::vector<MotionPair> parallel;
  for (double deg : {20.0, 60.0, 110.0}) {
    const Pose a{Rotation::from_axis_angle(axis, deg * kDeg), Vec3(deg, 2.0, -1.0)};
    parallel.push_back({a, compose(invert(x), compose(a, x))});
  }
  bool rank = false;
  try {
    solve_hand_eye(parallel);
  } catch (const RankDeficiency&) {
    rank = true;
  }
  o.require(rank, "parallel axes not rejected");
  o.detail += fmt("max errors %.3g rad / %.3g mm; %.3f s", rot, trans, elapsed);
  return o;
}

std::vector<bool> brute_outliers(const std::vector<Vec3>& pts, int k, double ratio) {
  const std::size_t n = pts.size();
  std::vector<double> mean(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) d.push_back((pts[i] - pts[j]).norm());
    std::sort(d.begin(), d.end());
    mean[i] = std::accumulate(d.begin(), d.begin() + k, 0.0) / k;
  }
  const double mu = std::accumulate(mean.begin(), mean.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double m : mean) var += (m - mu) * (m - mu);
  const double threshold = mu + ratio * std::sqrt(var / static_cast<double>(n));
  std::vector<bool> kept(n);
  for (std::size_t i = 0; i < n; ++i) kept[i] = mean[i] <= threshold;
  return kept;
}

Outcome kdtree_and_outliers() {
  Outcome o;
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> size(10, 10000);
  int queries = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const PointCloud c = inst % 4 == 0 ? [&] {
      // Integer lattice: many exact ties.
      PointCloud lattice;
      std::uniform_int_distribution<int> cell(0, 6);
      const int n = size(rng);
      for (int i = 0; i < n; ++i) lattice.points.emplace_back(cell(rng), cell(rng), cell(rng));
      return lattice;
    }()
                                       : testing::random_cloud(rng, static_cast<std::size_t>(size(rng)));
    const KdTree tree(c.points);
    for (int q = 0; q < 20; ++q) {
      const Vec3 query = testing::random_cloud(rng, 1, 12.0).points[0];
      std::vector<std::pair<double, std::size_t>> brute;
      for (std::size_t i = 0; i < c.size(); ++i) brute.emplace_back((c.points[i] - query).norm(), i);
      std::sort(brute.begin(), brute.end());
      const std::size_t k = std::min<std::size_t>(c.size(), 1 + static_cast<std::size_t>(q));
      const auto got = tree.knn(query, k);
      for (std::size_t i = 0; i < k; ++i) o.require(got[i].index == brute[i].second && got[i].distance == brute[i].first, "knn mismatch");
      const double r = brute[k - 1].first;
      const auto ball = tree.radius_search(query, r);
      const auto expected = std::count_if(brute.begin(), brute.end(), [&](const auto& b) { return b.first <= r; });
      o.require(static_cast<std::ptrdiff_t>(ball.size()) == expected, "radius mismatch");
      ++queries;
    }
    if (c.size() <= 2000) {
      const OutlierParams p{5 + inst % 20, 1.0};
      o.require(remove_statistical_outliers(c, p).kept == brute_outliers(c.points, p.k, p.std_ratio), "outlier mask mismatch");
    }
  }
  PointCloud line;
  for (int i = 0; i < 21; ++i) line.points.emplace_back(i, 0, 0);
  line.points.emplace_back(10, 100, 0);
  const OutlierResult r = remove_statistical_outliers(line, {20, 1.0});
  o.require(r.cloud.size() == 21 && !r.kept[21], "planted outlier not removed alone");
  o.detail += fmt("%g brute-force queries over 100 instances; planted outlier removed", queries);
  return o;
}

Outcome umeyama_recovery() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> scale(0.2, 5.0), t(-100.0, 100.0);
  double rot = 0, sc = 0, tr = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const SimilarityTransform truth{scale(rng), testing::random_rotation(rng), Vec3(t(rng), t(rng), t(rng))};
    const auto src = testing::random_cloud(rng, 10 + trial, 20.0).points;
    std::vector<Vec3> dst;
    for (const Vec3& p : src) dst.push_back(truth.apply(p));
    const SimilarityTransform est = umeyama(src, dst, true);
    rot = std::max(rot, rotation_distance(est.rotation, truth.rotation));
    sc = std::max(sc, std::abs(est.scale / truth.scale - 1.0));
    tr = std::max(tr, (est.translation - truth.translation).norm());
  }
  o.require(rot <= 1e-9 && sc <= 1e-9 && tr <= 1e-6, "recovery error");
  o.detail += fmt("max errors %.3g rad, %.3g relative scale, %.3g mm", rot, sc, tr);
  return o;
}

Outcome icp_trials() {
  Outcome o;
  PointCloud target = voxel_downsample(synth_organ(OrganShape{}, 200000), 0.5);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::uniform_real_distribution<double> angle(0.0, 5.0 * kDeg), shift(0.0, 2.0);
  const KdTree tree(target.points);
  int good = 0;
  double worst_time = 0.0, worst_rmse = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    PointCloud source;
    for (const Vec3& p : target.points) source.points.push_back(p + Vec3(noise(rng), noise(rng), noise(rng)));
    const Pose perturb{Rotation::from_axis_angle(testing::random_unit(rng), angle(rng)), shift(rng) * testing::random_unit(rng)};
    source = transformed(source, perturb);
    const auto t0 = std::chrono::steady_clock::now();
    const RegistrationResult r = icp_point_to_plane(source, target, tree, IcpParams{}, Pose::identity());
    worst_time = std::max(worst_time, seconds_since(t0));
    worst_rmse = std::max(worst_rmse, r.inlier_rmse);
    good += r.inlier_rmse <= 0.2;
    for (std::size_t i = 1; i < r.rmse_history.size(); ++i)
      o.require(r.rmse_history[i] <= r.rmse_history[i - 1], "inlier_rmse increased");
  }
  o.require(good >= 48, "fewer than 95% of trials within 0.2 mm");
  o.require(worst_time < 5.0, "trial too slow");
  o.detail += fmt("%g points; %g/50 trials with rmse <= 0.2 mm (worst %.4f); slowest %.2f s", static_cast<double>(target.size()), good,
                  worst_rmse, worst_time);
  return o;
}

PointCloud cloud_of(std::initializer_list<Vec3> pts) {
  PointCloud c;
  c.points.assign(pts.begin(), pts.end());
  return c;
}

Outcome metrics_fixtures() {
  Outcome o;
  const CloudMetrics m = cloud_metrics(cloud_of({Vec3(0, 0, 0), Vec3(1, 0, 0)}), cloud_of({Vec3(0, 0, 0)}), 0.0);
  o.require(m.chamfer == 0.25 && m.hausdorff == 1.0 && std::abs(m.rmse - std::sqrt(1.0 / 3.0)) <= 1e-15, "2-vs-1 fixture");
  std::mt19937_64 rng(7);
  double invariance = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const PointCloud a = testing::random_cloud(rng, 500), b = testing::random_cloud(rng, 400);
    const CloudMetrics ab = cloud_metrics(a, b), ba = cloud_metrics(b, a);
    o.require(ab.chamfer == ba.chamfer, "chamfer not symmetric");
    const Pose x = testing::random_pose(rng);
    const CloudMetrics moved = cloud_metrics(transformed(a, x), transformed(b, x));
    invariance = std::max({invariance, std::abs(moved.chamfer - ab.chamfer), std::abs(moved.hausdorff - ab.hausdorff),
                           std::abs(moved.rmse - ab.rmse)});
    double prev = INFINITY;
    for (double f : {0.0, 0.02, 0.05, 0.1, 0.3}) {
      const CloudMetrics cur = cloud_metrics(a, b, f);
      o.require(cur.chamfer <= prev, "trimming increased chamfer");
      prev = cur.chamfer;
    }
  }
  o.require(invariance <= 1e-9, "rigid invariance");
  o.detail += fmt("fixture (%.4g, %.4g, %.6f); max rigid-motion change %.3g", m.chamfer, m.hausdorff, m.rmse, invariance);
  return o;
}

Outcome end_to_end() {
  Outcome o;
  PipelineConfig cfg = PipelineConfig::defaults();
  cfg.acquisition.scan.noise_sigma = 0.3;
  cfg.acquisition.scan.dropout_fraction = 0.05;
  cfg.acquisition.random_perturbation = true;
  const auto t0 = std::chrono::steady_clock::now();
  const PipelineSummary a = run_pipeline(cfg);
  const double elapsed = seconds_since(t0);
  const PipelineSummary b = run_pipeline(cfg);
  o.require(a.metrics_json == b.metrics_json, "metrics differ between runs");
  o.require(elapsed < 60.0, "too slow");
  std::string per_kind;
  for (const TrajectoryRun& r : a.runs) {
    o.require(r.cloud.chamfer <= 0.6, std::string(to_string(r.kind)) + " chamfer > 0.6 mm");
    o.require(r.cloud.rmse <= 0.9, std::string(to_string(r.kind)) + " rmse > 0.9 mm");
    per_kind += std::string(to_string(r.kind)) + fmt(" chamfer %.3f rmse %.3f; ", r.cloud.chamfer, r.cloud.rmse);
  }
  o.require(a.runs.size() == 3, "expected three trajectory kinds");
  o.detail += per_kind + fmt("%.2f s per run", elapsed);
  return o;
}

Outcome pose_evaluation() {
  Outcome o;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = 600;
  std::vector<FramePose> gt;
  Pose p = Pose::identity();
  for (int i = 0; i < n; ++i) {
    gt.push_back({i, p});
    p = compose(p, Pose{Rotation::from_rotation_vector(Vec3(g(rng), g(rng), g(rng)) * 0.05), Vec3(g(rng), g(rng), 1.0 + g(rng))});
  }
  const SimilarityTransform s{0.7, testing::random_rotation(rng), Vec3(30, -20, 15)};
  std::vector<FramePose> pred;
  for (const FramePose& f : gt) pred.push_back({f.frame_id, s.apply(f.pose)});
  const RelativePoseError exact = rpe(align_trajectory(pred, gt, true), gt);
  o.require(exact.rotation <= 1e-9 && exact.translation <= 1e-9, "similarity not removed");

  // Per-step rotation noise with mean angle 0.01 rad: isotropic Gaussian rotation
  // vectors whose norm (Maxwell distributed) has mean 2 s sqrt(2 / pi).
  const double s_axis = 0.01 / (2.0 * std::sqrt(2.0 / std::numbers::pi));
  std::vector<FramePose> noisy{gt[0]};
  for (int i = 1; i < n; ++i) {
    const Pose step = compose(invert(gt[static_cast<std::size_t>(i) - 1].pose), gt[static_cast<std::size_t>(i)].pose);
    const Pose jitter{Rotation::from_rotation_vector(Vec3(g(rng), g(rng), g(rng)) * s_axis), Vec3::Zero()};
    noisy.push_back({i, compose(noisy.back().pose, compose(step, jitter))});
  }
  for (FramePose& f : noisy) f.pose = s.apply(f.pose);
  const RelativePoseError e = rpe(align_trajectory(noisy, gt, true), gt);
  o.require(std::abs(e.rotation - 0.01) <= 0.001, "rpe rotation outside 10% of 0.01");
  o.detail += fmt("exact rpe (%.3g rad, %.3g mm); noisy rpe %.5f rad over %g steps", exact.rotation, exact.translation, e.rotation,
                  static_cast<double>(e.pairs));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"fibonacci sampler", fibonacci_sampler},  {"trajectory geometry", trajectory_geometry},
      {"hand-eye", hand_eye},                    {"kd-tree and outlier removal", kdtree_and_outliers},
      {"umeyama", umeyama_recovery},             {"icp", icp_trials},
      {"metrics", metrics_fixtures},             {"end-to-end pipeline", end_to_end},
      {"pose evaluation", pose_evaluation},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.ok;
    std::printf("%s %zu %s: %s\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
