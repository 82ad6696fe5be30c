#include "laprecon/pipeline.hpp"

#include <random>

#include <json.hpp>

#include "laprecon/errors.hpp"
#include "laprecon/io.hpp"

namespace laprecon {
namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> laser_ground_truth(const PointCloud& organ, const GroundTruthConfig& gt, const Vec3& center, const Vec3& up) {
  TrajectoryConfig scanner = TrajectoryConfig::defaults(TrajectoryKind::open_far);
  scanner.sample_center = center;
  scanner.up = up;
  scanner.d_lap = gt.distance;
  scanner.sample.n_points = gt.n_views;
  scanner.sample.theta_max_deg = gt.theta_max_deg;
  Trajectory views;
  try {
    views = generate_trajectory(scanner);
  } catch (const EmptyTrajectory&) {
    // A single straight-down view when the cap rejects every spiral point.
    views.rcm = center;
    views.poses.push_back({0, look_at_pose(center, up.normalized(), gt.distance, up)});
  }
  ScanConfig exact;
  exact.fov_half_angle_deg = gt.fov_half_angle_deg;
  exact.max_range = 10.0 * gt.distance;
  exact.noise_sigma = 0.0;
  exact.dropout_fraction = 0.0;
  exact.frame_perturbation = SimilarityTransform{};
  exact.max_incidence_deg = gt.max_incidence_deg;
  return simulate_scan(organ, views, exact, 0).organ_index;
}

std::vector<FramePose> predicted_poses(const ScanResult& scan, const AcquisitionConfig& acq, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<FramePose> out;
  const auto& frames = scan.true_poses.poses;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Vec3 axis(g(rng), g(rng), g(rng));
    const double angle = acq.pose_rotation_noise_rad * g(rng);
    const Vec3 shift(g(rng), g(rng), g(rng));
    if (scan.visible_per_pose[i] < static_cast<std::size_t>(acq.min_visible_points)) continue;
    Pose noisy = frames[i].pose;
    noisy.rotation = noisy.rotation * Rotation::from_axis_angle(axis, angle);
    noisy.translation += acq.pose_translation_noise_mm * shift;
    out.push_back({frames[i].frame_id, scan.perturbation.apply(noisy)});
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> known_correspondences(const ScanResult& scan, std::size_t organ_size,
                                                                       const std::vector<std::size_t>& gt_organ_index,
                                                                       std::size_t wanted) {
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> gt_of(organ_size, kNone);
  for (std::size_t i = 0; i < gt_organ_index.size(); ++i) gt_of[gt_organ_index[i]] = i;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < scan.organ_index.size(); ++i) {
    if (gt_of[scan.organ_index[i]] != kNone) candidates.push_back(i);
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t n = std::min(wanted, candidates.size());
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = candidates[k * candidates.size() / n];
    out.emplace_back(i, gt_of[scan.organ_index[i]]);
  }
  return out;
}

nlohmann::ordered_json run_json(const TrajectoryRun& run) {
  nlohmann::ordered_json j;
  j["chamfer_mm"] = run.cloud.chamfer;
  j["hausdorff_mm"] = run.cloud.hausdorff;
  j["rmse_mm"] = run.cloud.rmse;
  j["trim_fraction"] = run.cloud.trim_fraction;
  if (run.poses) {
    j["rpe_rotation_rad"] = run.poses->rpe_rotation;
    j["rpe_translation_mm"] = run.poses->rpe_translation;
    j["coverage"] = run.poses->coverage;
  }
  j["icp_fitness"] = run.registration.fitness;
  j["icp_inlier_rmse_mm"] = run.registration.inlier_rmse;
  j["icp_iterations"] = run.registration.iterations_run;
  j["coarse_scale"] = run.coarse.scale;
  j["frames_kept"] = run.frames_kept;
  j["image_pairs"] = run.pairs;
  j["scan_points"] = run.scan_points;
  j["processed_points"] = run.processed_points;
  return j;
}

}  // namespace

PipelineSummary run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& output_dir) {
  cfg.validate();
  const bool write = !output_dir.empty();
  if (write) std::filesystem::create_directories(output_dir);

  const PointCloud organ = synth_organ(cfg.organ.shape, cfg.organ.n_points);
  const TrajectoryConfig& first = cfg.trajectories.front();
  const std::vector<std::size_t> gt_organ_index = laser_ground_truth(organ, cfg.ground_truth, first.sample_center, first.up);
  const PointCloud organ_gt = select(organ, gt_organ_index);
  const KdTree gt_tree(organ_gt.points);

  if (write) {
    io::write_ply(organ, output_dir / "organ.ply");
    io::write_ply(organ_gt, output_dir / "ground_truth.ply");
    io::write_file_atomic(output_dir / "config.json", pipeline_config_json(cfg));
  }

  PipelineSummary summary;
  nlohmann::ordered_json all = nlohmann::ordered_json::object();
  for (std::size_t t = 0; t < cfg.trajectories.size(); ++t) {
    const TrajectoryConfig& tcfg = cfg.trajectories[t];
    const std::uint64_t seed = mix(cfg.seed, t);
    TrajectoryRun run;
    run.kind = tcfg.kind;

    const Trajectory full = generate_trajectory(tcfg);
    run.poses_total = full.poses.size();
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(cfg.acquisition.frames_keep), full.poses.size());
    const std::vector<std::size_t> kept = subsample_frames(full.poses.size(), keep);
    Trajectory sub;
    sub.kind = full.kind;
    sub.rcm = full.rcm;
    std::vector<std::size_t> kept_ids;
    for (std::size_t i : kept) {
      sub.poses.push_back(full.poses[i]);
      kept_ids.push_back(static_cast<std::size_t>(full.poses[i].frame_id));
    }
    run.frames_kept = sub.poses.size();
    const auto pairs = sliding_window_pairs(kept_ids, static_cast<std::size_t>(cfg.acquisition.pair_window));
    run.pairs = pairs.size();

    ScanConfig scan_cfg = cfg.acquisition.scan;
    if (!cfg.acquisition.random_perturbation) scan_cfg.frame_perturbation = SimilarityTransform{};
    const ScanResult scan = simulate_scan(organ, sub, scan_cfg, seed);
    run.scan_points = scan.scan.size();

    const auto matches = known_correspondences(scan, organ.size(), gt_organ_index,
                                               static_cast<std::size_t>(cfg.postprocess.correspondences));
    if (matches.size() < 3) throw NoOverlap("pipeline: no overlap, scan and ground truth share fewer than 3 points");
    std::vector<Vec3> src, dst;
    for (const auto& [s, d] : matches) {
      src.push_back(scan.scan.points[s]);
      dst.push_back(organ_gt.points[d]);
    }
    run.coarse = umeyama(src, dst, cfg.postprocess.with_scale);

    PointCloud processed = transformed(scan.scan, run.coarse);
    processed = voxel_downsample(processed, cfg.postprocess.voxel);
    processed = remove_statistical_outliers(processed, cfg.postprocess.outliers).cloud;
    processed = crop_by_centroid(processed, cfg.postprocess.crop_radius);
    run.processed_points = processed.size();

    run.registration = icp_point_to_plane(processed, organ_gt, gt_tree, cfg.icp, Pose::identity());
    const PointCloud registered = transformed(processed, run.registration.transform);
    run.cloud = cloud_metrics(registered, organ_gt, cfg.trim_fraction);

    const std::vector<FramePose> predicted = predicted_poses(scan, cfg.acquisition, mix(seed, 99));
    if (predicted.size() >= 3) {
      const std::vector<FramePose> aligned = align_trajectory(predicted, sub.poses, cfg.postprocess.with_scale);
      const RelativePoseError err = rpe(aligned, sub.poses);
      std::set<int> ids;
      for (const FramePose& p : predicted) ids.insert(p.frame_id);
      run.poses = PoseMetrics{err.rotation, err.translation, pose_coverage(ids, static_cast<int>(sub.poses.size()))};
    }

    const std::string name(to_string(tcfg.kind));
    const nlohmann::ordered_json j = run_json(run);
    all[name] = j;
    if (write) {
      const std::filesystem::path dir = output_dir / name;
      std::filesystem::create_directories(dir);
      io::write_poses(full.poses, dir / "trajectory.csv");
      io::write_poses(sub.poses, dir / "true_poses.csv");
      io::write_poses(predicted, dir / "predicted_poses.csv");
      std::string pair_csv = "frame_i,frame_j\n";
      for (const auto& [a, b] : pairs) pair_csv += std::to_string(a) + "," + std::to_string(b) + "\n";
      io::write_file_atomic(dir / "pairs.csv", pair_csv);
      io::write_ply(scan.scan, dir / "scan.ply");
      io::write_correspondences(matches, dir / "correspondences.csv");
      io::write_ply(processed, dir / "processed.ply");
      io::write_ply(registered, dir / "registered.ply");
      io::write_poses({{0, run.registration.transform}}, dir / "registration.csv");
      io::MetricsReport report;
      report.set(run.cloud);
      if (run.poses) {
        report.rpe_rotation_rad = run.poses->rpe_rotation;
        report.rpe_translation_mm = run.poses->rpe_translation;
        report.coverage = run.poses->coverage;
      }
      io::write_file_atomic(dir / "metrics.json", io::metrics_json(report));
      io::write_file_atomic(dir / "metrics.txt", io::metrics_text(report));
    }
    summary.runs.push_back(std::move(run));
  }
  summary.metrics_json = all.dump(2) + "\n";
  if (write) io::write_file_atomic(output_dir / "metrics.json", summary.metrics_json);
  return summary;
}

}  // namespace laprecon
