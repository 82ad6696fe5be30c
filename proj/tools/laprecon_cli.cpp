// laprecon command-line front end.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "laprecon/calibration.hpp"
#include "laprecon/errors.hpp"
#include "laprecon/io.hpp"
#include "laprecon/metrics.hpp"
#include "laprecon/parallel.hpp"
#include "laprecon/pipeline.hpp"
#include "laprecon/registration.hpp"
#include "laprecon/simulator.hpp"

namespace fs = std::filesystem;
using namespace laprecon;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string output_dir;
  int threads = 1;
};

// Resolves `name` under --output-dir unless it is absolute.
fs::path out_path(const Common& c, const std::string& name) {
  const fs::path p(name);
  if (c.output_dir.empty() || p.is_absolute()) return p;
  fs::create_directories(c.output_dir);
  return fs::path(c.output_dir) / p;
}

void emit(const Common& c, const std::string& output, const std::string& text) {
  if (output.empty() || output == "-") {
    std::cout << text;
  } else {
    io::write_file_atomic(out_path(c, output), text);
  }
}

std::string similarity_json(const SimilarityTransform& s) {
  nlohmann::ordered_json j;
  j["scale"] = s.scale;
  j["rotation_wxyz"] = {s.rotation.w(), s.rotation.x(), s.rotation.y(), s.rotation.z()};
  j["translation"] = {s.translation.x(), s.translation.y(), s.translation.z()};
  return j.dump(2) + "\n";
}

// Poses of frames present in both lists, in frame order.
std::pair<std::vector<Pose>, std::vector<Pose>> common_frames(const std::vector<FramePose>& a,
                                                              const std::vector<FramePose>& b) {
  std::map<int, Pose> bmap;
  for (const FramePose& f : b) bmap.emplace(f.frame_id, f.pose);
  std::vector<Pose> pa, pb;
  for (const FramePose& f : a) {
    auto it = bmap.find(f.frame_id);
    if (it == bmap.end()) continue;
    pa.push_back(f.pose);
    pb.push_back(it->second);
  }
  return {pa, pb};
}

void add_common(CLI::App* cmd, Common& c, bool stochastic) {
  if (stochastic) cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--output-dir", c.output_dir, "directory for relative output paths");
  cmd->add_option("--threads", c.threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view acquisition planning and reconstruction evaluation"};
  app.require_subcommand(1);
  Common c;

  // sample-poses
  std::string sp_config, sp_kind, sp_output;
  auto* sp = app.add_subcommand("sample-poses", "generate camera poses for one or all trajectory kinds");
  sp->add_option("--config", sp_config, "pipeline config (JSON)");
  sp->add_option("--kind", sp_kind, "trocar | open_close | open_far");
  sp->add_option("-o,--output", sp_output, "pose CSV (single kind) or stdout");
  add_common(sp, c, false);

  // synth-organ
  OrganShape organ_shape;
  int so_points = 40000;
  std::string so_output = "organ.ply";
  auto* so = app.add_subcommand("synth-organ", "write a synthetic organ surface with normals");
  so->add_option("--points", so_points, "number of surface points");
  so->add_option("--bump-amplitude", organ_shape.bump_amplitude, "mm");
  so->add_option("--bump-frequency", organ_shape.bump_frequency);
  so->add_option("-o,--output", so_output, "PLY path");
  add_common(so, c, true);

  // simulate-scan
  std::string ss_organ, ss_traj, ss_scan = "scan.ply", ss_poses = "true_poses.csv", ss_pert = "perturbation.json";
  ScanConfig scan_cfg;
  bool ss_identity = false;
  auto* ss = app.add_subcommand("simulate-scan", "simulate a noisy partial scan along a trajectory");
  ss->add_option("--organ", ss_organ, "organ PLY with normals")->required();
  ss->add_option("--trajectory", ss_traj, "pose CSV")->required();
  ss->add_option("--fov", scan_cfg.fov_half_angle_deg, "half field of view, degrees");
  ss->add_option("--max-range", scan_cfg.max_range, "mm");
  ss->add_option("--noise", scan_cfg.noise_sigma, "Gaussian sigma, mm");
  ss->add_option("--dropout", scan_cfg.dropout_fraction, "fraction in [0, 1)");
  ss->add_flag("--identity-frame", ss_identity, "do not perturb the output frame");
  ss->add_option("--scan", ss_scan, "output PLY");
  ss->add_option("--poses", ss_poses, "output pose CSV");
  ss->add_option("--perturbation", ss_pert, "output similarity JSON");
  add_common(ss, c, true);

  // handeye
  std::string he_robot, he_camera, he_output;
  double he_tol = 1e-3;
  auto* he = app.add_subcommand("handeye", "solve AX = XB from flange and camera pose logs");
  he->add_option("--robot", he_robot, "flange-to-base pose CSV")->required();
  he->add_option("--camera", he_camera, "camera-to-world pose CSV")->required();
  he->add_option("--congruence-tolerance", he_tol, "rad");
  he->add_option("-o,--output", he_output, "pose CSV with the flange-to-camera transform");
  add_common(he, c, false);

  // process
  std::string pr_input, pr_output = "processed.ply";
  PostprocessConfig pp;
  auto* pr = app.add_subcommand("process", "downsample, remove outliers and crop a point cloud");
  pr->add_option("-i,--input", pr_input, "input PLY")->required();
  pr->add_option("-o,--output", pr_output, "output PLY");
  pr->add_option("--voxel", pp.voxel, "voxel size, mm");
  pr->add_option("--outlier-k", pp.outliers.k);
  pr->add_option("--std-ratio", pp.outliers.std_ratio);
  pr->add_option("--crop-radius", pp.crop_radius, "mm");
  add_common(pr, c, false);

  // register
  std::string rg_source, rg_target, rg_corr, rg_output = "registered.ply", rg_pose = "registration.csv",
                                            rg_transform = "transform.json";
  bool rg_rigid = false;
  IcpParams icp;
  auto* rg = app.add_subcommand("register", "coarse correspondence alignment followed by point-to-plane ICP");
  rg->add_option("--source", rg_source, "source PLY")->required();
  rg->add_option("--target", rg_target, "target PLY")->required();
  rg->add_option("--correspondences", rg_corr, "CSV src_index,dst_index");
  rg->add_flag("--rigid", rg_rigid, "no scale in the coarse alignment");
  rg->add_option("--max-distance", icp.max_correspondence_distance, "mm");
  rg->add_option("--max-iterations", icp.max_iterations);
  rg->add_option("--tukey-k", icp.tukey_k, "mm");
  rg->add_option("-o,--output", rg_output, "aligned source PLY");
  rg->add_option("--pose", rg_pose, "pose CSV with the rigid part of the final transform");
  rg->add_option("--transform", rg_transform, "similarity JSON of the final transform");
  add_common(rg, c, false);

  // evaluate
  std::string ev_source, ev_target, ev_output;
  double ev_trim = 0.05;
  auto* ev = app.add_subcommand("evaluate", "trimmed cloud distances between a reconstruction and ground truth");
  ev->add_option("--source", ev_source, "reconstruction PLY")->required();
  ev->add_option("--target", ev_target, "ground-truth PLY")->required();
  ev->add_option("--trim", ev_trim, "fraction of largest distances dropped");
  ev->add_option("-o,--output", ev_output, "metrics JSON or stdout");
  add_common(ev, c, false);

  // evaluate-poses
  std::string ep_pred, ep_gt, ep_output;
  bool ep_rigid = false;
  auto* ep = app.add_subcommand("evaluate-poses", "relative pose error after trajectory alignment");
  ep->add_option("--pred", ep_pred, "predicted pose CSV")->required();
  ep->add_option("--gt", ep_gt, "ground-truth pose CSV")->required();
  ep->add_flag("--rigid", ep_rigid, "align without scale");
  ep->add_option("-o,--output", ep_output, "metrics JSON or stdout");
  add_common(ep, c, false);

  // pipeline
  std::string pl_config;
  std::optional<std::uint64_t> pl_seed;
  auto* pl = app.add_subcommand("pipeline", "full synthetic run: simulate, process, register, evaluate");
  pl->add_option("--config", pl_config, "pipeline config (JSON); defaults when omitted");
  pl->add_option("--seed", pl_seed, "overrides the config seed");
  pl->add_option("--output-dir", c.output_dir, "artifact directory")->required();
  pl->add_option("--threads", c.threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    set_thread_count(c.threads);

    if (*sp) {
      PipelineConfig cfg = sp_config.empty() ? PipelineConfig::defaults() : load_pipeline_config(sp_config);
      cfg.validate();
      std::vector<TrajectoryConfig> chosen;
      for (const TrajectoryConfig& t : cfg.trajectories) {
        if (sp_kind.empty() || t.kind == trajectory_kind_from_string(sp_kind)) chosen.push_back(t);
      }
      if (chosen.empty()) throw InvalidArgument("sample-poses: kind '" + sp_kind + "' is not in the config");
      if (chosen.size() == 1) {
        emit(c, sp_output, io::format_poses(generate_trajectory(chosen.front()).poses));
      } else {
        if (!sp_output.empty()) throw InvalidArgument("sample-poses: --output needs a single --kind; use --output-dir");
        if (c.output_dir.empty()) throw InvalidArgument("sample-poses: several kinds need --output-dir");
        for (const TrajectoryConfig& t : chosen) {
          io::write_poses(generate_trajectory(t).poses, out_path(c, std::string(to_string(t.kind)) + ".csv"));
        }
      }
    } else if (*so) {
      organ_shape.seed = c.seed;
      io::write_ply(synth_organ(organ_shape, so_points), out_path(c, so_output));
    } else if (*ss) {
      scan_cfg.validate();
      if (ss_identity) scan_cfg.frame_perturbation = SimilarityTransform{};
      const PointCloud organ = io::read_ply(ss_organ);
      Trajectory traj;
      traj.poses = io::read_poses(ss_traj);
      const ScanResult r = simulate_scan(organ, traj, scan_cfg, c.seed);
      io::write_ply(r.scan, out_path(c, ss_scan));
      io::write_poses(r.true_poses.poses, out_path(c, ss_poses));
      io::write_file_atomic(out_path(c, ss_pert), similarity_json(r.perturbation));
      std::cerr << "captured " << r.scan.size() << " points from " << traj.poses.size() << " poses\n";
    } else if (*he) {
      auto [robot, camera] = common_frames(io::read_poses(he_robot), io::read_poses(he_camera));
      if (robot.size() < 3) throw InvalidArgument("handeye: need at least 3 frames present in both logs");
      const std::vector<Pose> a = relative_motions(robot), b = relative_motions(camera);
      std::vector<MotionPair> pairs;
      for (std::size_t i = 0; i < a.size(); ++i) pairs.push_back({a[i], b[i]});
      HandEyeOptions opts;
      opts.congruence_tolerance = he_tol;
      opts.on_warning = [](const std::string& m) { std::cerr << "warning: " << m << "\n"; };
      const Pose x = solve_hand_eye(pairs, opts);
      const HandEyeResidual res = hand_eye_residual(pairs, x);
      std::fprintf(stderr, "residual rotation %.3g rad, translation %.3g mm over %zu pairs\n", res.rotation,
                   res.translation, pairs.size());
      emit(c, he_output, io::format_poses({{0, x}}));
    } else if (*pr) {
      PointCloud cloud = io::read_ply(pr_input);
      const std::size_t before = cloud.size();
      cloud = voxel_downsample(cloud, pp.voxel);
      cloud = remove_statistical_outliers(cloud, pp.outliers).cloud;
      cloud = crop_by_centroid(cloud, pp.crop_radius);
      io::write_ply(cloud, out_path(c, pr_output));
      std::cerr << before << " -> " << cloud.size() << " points\n";
    } else if (*rg) {
      icp.validate();
      const PointCloud source = io::read_ply(rg_source);
      PointCloud target = io::read_ply(rg_target);
      if (!target.has_normals()) {
        std::cerr << "note: target has no normals; estimating them from 20 neighbours\n";
        target = estimate_normals(target, 20);
      }
      SimilarityTransform coarse;
      if (!rg_corr.empty()) {
        std::vector<Vec3> src, dst;
        for (const auto& [s, d] : io::read_correspondences(rg_corr)) {
          if (s >= source.size() || d >= target.size()) {
            throw InvalidArgument("register: correspondence index out of range");
          }
          src.push_back(source.points[s]);
          dst.push_back(target.points[d]);
        }
        coarse = umeyama(src, dst, !rg_rigid);
      }
      const PointCloud moved = transformed(source, coarse);
      const RegistrationResult r = icp_point_to_plane(moved, target, icp);
      const SimilarityTransform fine{1.0, r.transform.rotation, r.transform.translation};
      const SimilarityTransform total = compose(fine, coarse);
      io::write_ply(transformed(moved, r.transform), out_path(c, rg_output));
      io::write_poses({{0, total.rigid_part()}}, out_path(c, rg_pose));
      io::write_file_atomic(out_path(c, rg_transform), similarity_json(total));
      std::fprintf(stderr, "inlier rmse %.4f mm, fitness %.3f, %d iterations\n", r.inlier_rmse, r.fitness,
                   r.iterations_run);
    } else if (*ev) {
      io::MetricsReport report;
      report.set(cloud_metrics(io::read_ply(ev_source), io::read_ply(ev_target), ev_trim));
      emit(c, ev_output, io::metrics_json(report));
    } else if (*ep) {
      const std::vector<FramePose> pred = io::read_poses(ep_pred), gt = io::read_poses(ep_gt);
      const std::vector<FramePose> aligned = align_trajectory(pred, gt, !ep_rigid);
      const RelativePoseError err = rpe(aligned, gt);
      std::set<int> ids;
      for (const FramePose& p : pred) ids.insert(p.frame_id);
      io::MetricsReport report;
      report.rpe_rotation_rad = err.rotation;
      report.rpe_translation_mm = err.translation;
      report.coverage = pose_coverage(ids, static_cast<int>(gt.size()));
      emit(c, ep_output, io::metrics_json(report));
    } else if (*pl) {
      PipelineConfig cfg = pl_config.empty() ? PipelineConfig::defaults() : load_pipeline_config(pl_config);
      if (pl_seed) cfg.seed = *pl_seed;
      cfg.validate();
      const PipelineSummary s = run_pipeline(cfg, c.output_dir);
      for (const TrajectoryRun& r : s.runs) {
        std::fprintf(stderr, "%-10s chamfer %.4f mm  rmse %.4f mm  hausdorff %.4f mm\n",
                     std::string(to_string(r.kind)).c_str(), r.cloud.chamfer, r.cloud.rmse, r.cloud.hausdorff);
      }
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
