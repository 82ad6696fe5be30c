#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "laprecon/calibration.hpp"
#include "laprecon/errors.hpp"
#include "laprecon/io.hpp"
#include "laprecon/metrics.hpp"
#include "laprecon/parallel.hpp"
#include "laprecon/pipeline.hpp"
#include "laprecon/pointcloud.hpp"
#include "laprecon/registration.hpp"
#include "laprecon/sampling.hpp"
#include "laprecon/simulator.hpp"

namespace py = pybind11;
using namespace laprecon;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Poses = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Vec3> to_vec(const Points& m) {
  std::vector<Vec3> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m.row(i).transpose();
  return out;
}

Points to_points(const std::vector<Vec3>& v) {
  Points m(static_cast<Eigen::Index>(v.size()), 3);
  for (std::size_t i = 0; i < v.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
  return m;
}

PointCloud to_cloud(const Points& points, const std::optional<Points>& normals) {
  PointCloud c;
  c.points = to_vec(points);
  if (normals) c.normals = to_vec(*normals);
  return c;
}

py::object normals_or_none(const PointCloud& c) { return c.has_normals() ? py::cast(to_points(c.normals)) : py::none(); }

py::tuple from_cloud(const PointCloud& c) { return py::make_tuple(to_points(c.points), normals_or_none(c)); }

std::vector<Pose> to_poses(const Poses& a) {
  if (a.ndim() != 3 || a.shape(1) != 4 || a.shape(2) != 4) throw InvalidArgument("poses must have shape (n, 4, 4)");
  std::vector<Pose> out;
  auto r = a.unchecked<3>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    Mat4 m;
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) m(j, k) = r(i, j, k);
    out.push_back(Pose::from_matrix(m));
  }
  return out;
}

Poses from_poses(const std::vector<Pose>& poses) {
  Poses a({static_cast<py::ssize_t>(poses.size()), py::ssize_t{4}, py::ssize_t{4}});
  auto w = a.mutable_unchecked<3>();
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Mat4 m = poses[i].matrix();
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) w(static_cast<py::ssize_t>(i), j, k) = m(j, k);
  }
  return a;
}

std::vector<FramePose> framed(const Poses& a, const std::optional<std::vector<int>>& ids) {
  const std::vector<Pose> poses = to_poses(a);
  if (ids && ids->size() != poses.size()) throw InvalidArgument("frame_ids and poses differ in length");
  std::vector<FramePose> out;
  for (std::size_t i = 0; i < poses.size(); ++i) out.push_back({ids ? (*ids)[i] : static_cast<int>(i), poses[i]});
  return out;
}

py::dict similarity_dict(const SimilarityTransform& s) {
  py::dict d;
  d["scale"] = s.scale;
  d["rotation"] = s.rotation.matrix();
  d["translation"] = s.translation;
  return d;
}

py::dict cloud_metrics_dict(const CloudMetrics& m) {
  py::dict d;
  d["chamfer"] = m.chamfer;
  d["hausdorff"] = m.hausdorff;
  d["rmse"] = m.rmse;
  d["trim_fraction"] = m.trim_fraction;
  return d;
}

}  // namespace

PYBIND11_MODULE(_laprecon, m) {
  m.doc() = "Laparoscopic acquisition planning and reconstruction evaluation";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto invalid = py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ConstraintViolation>(m, "ConstraintViolation", error.ptr());
  py::register_exception<EmptyTrajectory>(m, "EmptyTrajectory", error.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<RankDeficiency>(m, "RankDeficiency", numerical.ptr());
  py::register_exception<NoOverlap>(m, "NoOverlap", numerical.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
  (void)invalid;

  m.def("set_thread_count", &set_thread_count, py::arg("n"), "Worker threads; 0 = all cores.");
  m.def("thread_count", &thread_count);

  m.def(
      "fibonacci_directions",
      [](int n, double theta_max) { return to_points(fibonacci_directions(n, theta_max)); }, py::arg("n"),
      py::arg("theta_max") = 90.0, "Fibonacci-sphere directions inside the cap about +y, (m, 3).");
  m.def(
      "equal_angle_directions",
      [](double d_az, double d_alt, double theta_max) { return to_points(equal_angle_directions(d_az, d_alt, theta_max)); },
      py::arg("d_azimuth"), py::arg("d_altitude"), py::arg("theta_max"));
  m.def(
      "sample_trajectory",
      [](const std::string& kind, int n_points, double theta_max, const std::string& scheme, double d_azimuth,
         double d_altitude, const Vec3& center, const Vec3& up, double rcm_height, double insertion_depth,
         std::optional<double> d_lap) {
        TrajectoryConfig cfg = TrajectoryConfig::defaults(trajectory_kind_from_string(kind));
        cfg.sample.n_points = n_points;
        cfg.sample.theta_max_deg = theta_max;
        if (scheme == "equal_angle") {
          cfg.sample.scheme = SamplingScheme::equal_angle;
        } else if (scheme != "fibonacci") {
          throw InvalidArgument("scheme must be 'fibonacci' or 'equal_angle'");
        }
        cfg.sample.d_azimuth_deg = d_azimuth;
        cfg.sample.d_altitude_deg = d_altitude;
        cfg.sample_center = center;
        cfg.up = up;
        cfg.rcm_height = rcm_height;
        cfg.insertion_depth = insertion_depth;
        if (d_lap) cfg.d_lap = *d_lap;
        const Trajectory t = generate_trajectory(cfg);
        std::vector<Pose> poses;
        for (const FramePose& f : t.poses) poses.push_back(f.pose);
        return py::make_tuple(from_poses(poses), t.rcm);
      },
      py::arg("kind"), py::arg("n_points") = 200, py::arg("theta_max") = 60.0, py::arg("scheme") = "fibonacci",
      py::arg("d_azimuth") = 30.0, py::arg("d_altitude") = 15.0, py::arg("center") = Vec3(Vec3::Zero()),
      py::arg("up") = Vec3(Vec3::UnitY()), py::arg("rcm_height") = 120.0, py::arg("insertion_depth") = 40.0,
      py::arg("d_lap") = py::none(), "Camera-to-world poses (n, 4, 4) and the remote centre of motion.");

  m.def(
      "solve_hand_eye",
      [](const Poses& a, const Poses& b, double congruence_tolerance) {
        const auto as = to_poses(a), bs = to_poses(b);
        if (as.size() != bs.size()) throw InvalidArgument("A and B differ in length");
        std::vector<MotionPair> pairs;
        for (std::size_t i = 0; i < as.size(); ++i) pairs.push_back({as[i], bs[i]});
        HandEyeOptions opt;
        opt.congruence_tolerance = congruence_tolerance;
        opt.on_warning = [](const std::string& msg) {
          if (PyErr_WarnEx(PyExc_RuntimeWarning, msg.c_str(), 1) != 0) throw py::error_already_set();
        };
        const Pose x = solve_hand_eye(pairs, opt);
        const HandEyeResidual r = hand_eye_residual(pairs, x);
        return py::make_tuple(x.matrix(), r.rotation, r.translation);
      },
      py::arg("a"), py::arg("b"), py::arg("congruence_tolerance") = HandEyeOptions{}.congruence_tolerance,
      "Solves A_i X = X B_i; returns (X 4x4, mean rotation residual rad, mean translation residual mm).");
  m.def(
      "relative_motions", [](const Poses& p) { return from_poses(relative_motions(to_poses(p))); }, py::arg("poses"));

  m.def(
      "voxel_downsample",
      [](const Points& p, double voxel, std::optional<Points> n) { return from_cloud(voxel_downsample(to_cloud(p, n), voxel)); },
      py::arg("points"), py::arg("voxel"), py::arg("normals") = py::none());
  m.def(
      "remove_statistical_outliers",
      [](const Points& p, int k, double std_ratio) {
        const OutlierResult r = remove_statistical_outliers(to_cloud(p, std::nullopt), {k, std_ratio});
        return std::vector<bool>(r.kept);
      },
      py::arg("points"), py::arg("k") = 20, py::arg("std_ratio") = 1.0, "Keep mask aligned with the input.");
  m.def(
      "crop_by_centroid",
      [](const Points& p, double radius, std::optional<Points> n) { return from_cloud(crop_by_centroid(to_cloud(p, n), radius)); },
      py::arg("points"), py::arg("radius"), py::arg("normals") = py::none());
  m.def(
      "estimate_normals",
      [](const Points& p, int k, std::optional<Vec3> viewpoint) {
        return to_points(estimate_normals(to_cloud(p, std::nullopt), k, viewpoint).normals);
      },
      py::arg("points"), py::arg("k") = 20, py::arg("viewpoint") = py::none());

  m.def(
      "umeyama", [](const Points& src, const Points& dst, bool with_scale) {
        return similarity_dict(umeyama(to_vec(src), to_vec(dst), with_scale));
      },
      py::arg("src"), py::arg("dst"), py::arg("with_scale") = true);
  m.def(
      "icp",
      [](const Points& source, const Points& target, const Points& target_normals, double max_distance, int max_iterations,
         double tolerance, double tukey_k, const Mat4& init) {
        IcpParams params;
        params.max_correspondence_distance = max_distance;
        params.max_iterations = max_iterations;
        params.relative_rmse_tolerance = tolerance;
        params.tukey_k = tukey_k;
        const RegistrationResult r =
            icp_point_to_plane(to_cloud(source, std::nullopt), to_cloud(target, target_normals), params, Pose::from_matrix(init));
        py::dict d;
        d["transform"] = r.transform.matrix();
        d["inlier_rmse"] = r.inlier_rmse;
        d["fitness"] = r.fitness;
        d["iterations"] = r.iterations_run;
        d["rmse_history"] = r.rmse_history;
        return d;
      },
      py::arg("source"), py::arg("target"), py::arg("target_normals"), py::arg("max_distance") = 5.0,
      py::arg("max_iterations") = 50, py::arg("tolerance") = 1e-6, py::arg("tukey_k") = 1.0,
      py::arg("init") = Mat4(Mat4::Identity()));

  m.def(
      "nn_distances", [](const Points& a, const Points& b) {
        return nn_distances(to_cloud(a, std::nullopt), to_cloud(b, std::nullopt));
      },
      py::arg("src"), py::arg("dst"));
  m.def(
      "cloud_metrics",
      [](const Points& a, const Points& b, double trim) {
        return cloud_metrics_dict(cloud_metrics(to_cloud(a, std::nullopt), to_cloud(b, std::nullopt), trim));
      },
      py::arg("src"), py::arg("dst"), py::arg("trim") = 0.05);
  m.def(
      "rpe",
      [](const Poses& pred, const Poses& gt, std::optional<std::vector<int>> pred_ids, std::optional<std::vector<int>> gt_ids,
         bool align, bool with_scale) {
        std::vector<FramePose> p = framed(pred, pred_ids);
        const std::vector<FramePose> g = framed(gt, gt_ids);
        if (align) p = align_trajectory(p, g, with_scale);
        const RelativePoseError e = rpe(p, g);
        py::dict d;
        d["rotation"] = e.rotation;
        d["translation"] = e.translation;
        d["pairs"] = e.pairs;
        return d;
      },
      py::arg("pred"), py::arg("gt"), py::arg("pred_ids") = py::none(), py::arg("gt_ids") = py::none(), py::arg("align") = true,
      py::arg("with_scale") = true, "Relative pose error over consecutive common frames, after optional similarity alignment.");

  m.def(
      "synth_organ",
      [](int n_points, const Vec3& semi_axes, double bump_amplitude, int bump_frequency, std::uint64_t seed) {
        OrganShape s;
        s.semi_axes = semi_axes;
        s.bump_amplitude = bump_amplitude;
        s.bump_frequency = bump_frequency;
        s.seed = seed;
        return from_cloud(synth_organ(s, n_points));
      },
      py::arg("n_points"), py::arg("semi_axes") = Vec3(OrganShape{}.semi_axes), py::arg("bump_amplitude") = 2.0,
      py::arg("bump_frequency") = 4, py::arg("seed") = 0);
  m.def(
      "simulate_scan",
      [](const Points& organ, const Points& normals, const Poses& poses, std::uint64_t seed, double fov, double max_range,
         double noise_sigma, double dropout, bool perturb) {
        Trajectory t;
        int id = 0;
        for (const Pose& p : to_poses(poses)) t.poses.push_back({id++, p});
        ScanConfig cfg;
        cfg.fov_half_angle_deg = fov;
        cfg.max_range = max_range;
        cfg.noise_sigma = noise_sigma;
        cfg.dropout_fraction = dropout;
        if (!perturb) cfg.frame_perturbation = SimilarityTransform{};
        const ScanResult r = simulate_scan(to_cloud(organ, normals), t, cfg, seed);
        py::dict d;
        d["points"] = to_points(r.scan.points);
        d["organ_index"] = r.organ_index;
        d["perturbation"] = similarity_dict(r.perturbation);
        d["visible_per_pose"] = r.visible_per_pose;
        return d;
      },
      py::arg("organ"), py::arg("normals"), py::arg("poses"), py::arg("seed") = 0, py::arg("fov") = 35.0,
      py::arg("max_range") = 300.0, py::arg("noise_sigma") = 0.1, py::arg("dropout") = 0.05, py::arg("perturb") = true);

  m.def(
      "read_ply", [](const std::string& path) { return from_cloud(io::read_ply(path)); }, py::arg("path"));
  m.def(
      "write_ply",
      [](const std::string& path, const Points& p, std::optional<Points> n, bool binary) {
        io::write_ply(to_cloud(p, n), path, binary ? io::PlyFormat::binary_little_endian : io::PlyFormat::ascii);
      },
      py::arg("path"), py::arg("points"), py::arg("normals") = py::none(), py::arg("binary") = true);

  m.def(
      "run_pipeline",
      [](const std::string& config_json, const std::string& output_dir) {
        const PipelineConfig cfg = parse_pipeline_config(config_json);
        PipelineSummary s;
        {
          py::gil_scoped_release release;
          s = run_pipeline(cfg, output_dir);
        }
        return s.metrics_json;
      },
      py::arg("config_json") = "{}", py::arg("output_dir") = "",
      "Runs the synthetic end-to-end pipeline; returns the metrics JSON text.");
}
