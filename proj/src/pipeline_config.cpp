#include <map>
#include <set>

#include <json.hpp>

#include "laprecon/errors.hpp"
#include "laprecon/io.hpp"
#include "laprecon/pipeline.hpp"

namespace laprecon {
namespace {

using nlohmann::json;

// Object view that records which keys were read so leftovers can be rejected.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidArgument("config: '" + path_ + "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw InvalidArgument("config: '" + where(key) + "' has the wrong type");
    }
  }

  void read(const std::string& key, Vec3& out) {
    std::vector<double> v;
    read(key, v);
    if (!j_.contains(key)) return;
    if (v.size() != 3) throw InvalidArgument("config: '" + where(key) + "' must hold 3 numbers");
    out = Vec3(v[0], v[1], v[2]);
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(j_.at(key), where(key));
  }

  const json& raw() const { return j_; }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw InvalidArgument("config: unknown key '" + where(item.key()) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_sampling(Section s, SampleConfig& cfg) {
  std::string scheme = cfg.scheme == SamplingScheme::fibonacci ? "fibonacci" : "equal_angle";
  s.read("scheme", scheme);
  if (scheme == "fibonacci") {
    cfg.scheme = SamplingScheme::fibonacci;
  } else if (scheme == "equal_angle") {
    cfg.scheme = SamplingScheme::equal_angle;
  } else {
    throw InvalidArgument("config: '" + s.where("scheme") + "' must be 'fibonacci' or 'equal_angle'");
  }
  s.read("n_points", cfg.n_points);
  s.read("theta_max", cfg.theta_max_deg);
  s.read("d_azimuth", cfg.d_azimuth_deg);
  s.read("d_altitude", cfg.d_altitude_deg);
  s.finish();
}

json sampling_json(const SampleConfig& s) {
  return {{"scheme", s.scheme == SamplingScheme::fibonacci ? "fibonacci" : "equal_angle"},
          {"n_points", s.n_points},
          {"theta_max", s.theta_max_deg},
          {"d_azimuth", s.d_azimuth_deg},
          {"d_altitude", s.d_altitude_deg}};
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig cfg;
  for (TrajectoryKind kind : {TrajectoryKind::trocar, TrajectoryKind::open_close, TrajectoryKind::open_far}) {
    TrajectoryConfig t = TrajectoryConfig::defaults(kind);
    t.sample.n_points = 800;
    // Caps chosen so every kind covers roughly the region the reference scan sees.
    t.sample.theta_max_deg = kind == TrajectoryKind::trocar ? 60.0 : kind == TrajectoryKind::open_close ? 25.0 : 20.0;
    cfg.trajectories.push_back(t);
  }
  return cfg;
}

void PipelineConfig::validate() const {
  organ.shape.validate();
  if (organ.n_points < 100) throw InvalidArgument("config: organ.n_points must be >= 100");
  if (ground_truth.n_views < 1) throw InvalidArgument("config: ground_truth.n_views must be >= 1");
  if (!(ground_truth.theta_max_deg > 0.0 && ground_truth.theta_max_deg <= 90.0)) {
    throw InvalidArgument("config: ground_truth.theta_max must lie in (0, 90]");
  }
  if (!(ground_truth.distance > 0.0)) throw InvalidArgument("config: ground_truth.distance must be > 0");
  if (!(ground_truth.fov_half_angle_deg > 0.0 && ground_truth.fov_half_angle_deg < 90.0)) {
    throw InvalidArgument("config: ground_truth.fov_half_angle must lie in (0, 90)");
  }
  if (!(ground_truth.max_incidence_deg > 0.0 && ground_truth.max_incidence_deg <= 90.0)) {
    throw InvalidArgument("config: ground_truth.max_incidence must lie in (0, 90]");
  }
  if (trajectories.empty()) throw InvalidArgument("config: at least one trajectory kind is required");
  for (const TrajectoryConfig& t : trajectories) t.validate();
  acquisition.scan.validate();
  if (acquisition.frames_keep < 1) throw InvalidArgument("config: scan.frames_keep must be >= 1");
  if (acquisition.pair_window < 1) throw InvalidArgument("config: scan.pair_window must be >= 1");
  if (acquisition.min_visible_points < 0) throw InvalidArgument("config: scan.min_visible_points must be >= 0");
  if (!(acquisition.pose_rotation_noise_rad >= 0.0) || !(acquisition.pose_translation_noise_mm >= 0.0)) {
    throw InvalidArgument("config: pose noise must be >= 0");
  }
  if (!(postprocess.voxel > 0.0)) throw InvalidArgument("config: postprocess.voxel must be > 0");
  if (postprocess.outliers.k < 1) throw InvalidArgument("config: postprocess.outlier_k must be >= 1");
  if (!(postprocess.outliers.std_ratio >= 0.0)) throw InvalidArgument("config: postprocess.std_ratio must be >= 0");
  if (!(postprocess.crop_radius > 0.0)) throw InvalidArgument("config: postprocess.crop_radius must be > 0");
  if (postprocess.correspondences < 3) throw InvalidArgument("config: postprocess.correspondences must be >= 3");
  icp.validate();
  if (!(trim_fraction >= 0.0 && trim_fraction < 1.0)) throw InvalidArgument("config: metrics.trim_fraction must lie in [0, 1)");
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what(), e.byte);
  }

  PipelineConfig cfg = PipelineConfig::defaults();
  Section root(doc, "");
  root.read("seed", cfg.seed);

  if (root.has("organ")) {
    Section s = root.child("organ");
    s.read("semi_axes", cfg.organ.shape.semi_axes);
    s.read("bump_amplitude", cfg.organ.shape.bump_amplitude);
    s.read("bump_frequency", cfg.organ.shape.bump_frequency);
    s.read("seed", cfg.organ.shape.seed);
    s.read("n_points", cfg.organ.n_points);
    s.finish();
  }
  if (root.has("ground_truth")) {
    Section s = root.child("ground_truth");
    s.read("n_views", cfg.ground_truth.n_views);
    s.read("theta_max", cfg.ground_truth.theta_max_deg);
    s.read("distance", cfg.ground_truth.distance);
    s.read("fov_half_angle", cfg.ground_truth.fov_half_angle_deg);
    s.read("max_incidence", cfg.ground_truth.max_incidence_deg);
    s.finish();
  }

  // Per-kind defaults, then the shared section, then per-kind overrides.
  std::map<TrajectoryKind, SampleConfig> kind_samples;
  for (const TrajectoryConfig& t : PipelineConfig::defaults().trajectories) kind_samples[t.kind] = t.sample;
  const json* shared_sampling = nullptr;
  if (root.has("sampling")) {
    shared_sampling = &root.child("sampling").raw();
    SampleConfig probe;
    read_sampling(Section(*shared_sampling, "sampling"), probe);
  }

  std::vector<std::string> kinds = {"trocar", "open_close", "open_far"};
  Vec3 center = Vec3::Zero(), up = Vec3::UnitY();
  double rcm_height = 120.0, insertion = 40.0;
  double d_close = 80.0, d_far = 120.0;
  json sampling_overrides = json::object();
  if (root.has("trajectory")) {
    Section s = root.child("trajectory");
    s.read("kinds", kinds);
    s.read("sample_center", center);
    s.read("up", up);
    s.read("rcm_height", rcm_height);
    s.read("insertion_depth", insertion);
    if (s.has("d_lap")) {
      Section d = s.child("d_lap");
      d.read("open_close", d_close);
      d.read("open_far", d_far);
      d.finish();
    }
    if (s.has("sampling")) {
      Section o = s.child("sampling");
      for (const auto& item : o.raw().items()) {
        trajectory_kind_from_string(item.key());
        o.child(item.key());
      }
      sampling_overrides = o.raw();
      o.finish();
    }
    s.finish();
  }
  cfg.trajectories.clear();
  for (const std::string& name : kinds) {
    TrajectoryConfig t = TrajectoryConfig::defaults(trajectory_kind_from_string(name));
    t.sample_center = center;
    t.up = up;
    t.rcm_height = rcm_height;
    t.insertion_depth = insertion;
    t.d_lap = t.kind == TrajectoryKind::open_far ? d_far : d_close;
    t.sample = kind_samples.at(t.kind);
    if (shared_sampling) read_sampling(Section(*shared_sampling, "sampling"), t.sample);
    const std::string key(to_string(t.kind));
    const std::string alt = key == "open_close" ? "open-close" : key == "open_far" ? "open-far" : key;
    for (const std::string& k : {key, alt}) {
      if (sampling_overrides.contains(k)) read_sampling(Section(sampling_overrides.at(k), "trajectory.sampling." + k), t.sample);
    }
    cfg.trajectories.push_back(t);
  }

  if (root.has("scan")) {
    Section s = root.child("scan");
    AcquisitionConfig& a = cfg.acquisition;
    s.read("fov_half_angle", a.scan.fov_half_angle_deg);
    s.read("max_range", a.scan.max_range);
    s.read("noise_sigma", a.scan.noise_sigma);
    s.read("dropout_fraction", a.scan.dropout_fraction);
    std::string perturbation = a.random_perturbation ? "random" : "identity";
    s.read("perturbation", perturbation);
    if (perturbation != "random" && perturbation != "identity") {
      throw InvalidArgument("config: 'scan.perturbation' must be 'random' or 'identity'");
    }
    a.random_perturbation = perturbation == "random";
    s.read("frames_keep", a.frames_keep);
    s.read("pair_window", a.pair_window);
    s.read("min_visible_points", a.min_visible_points);
    s.read("pose_rotation_noise", a.pose_rotation_noise_rad);
    s.read("pose_translation_noise", a.pose_translation_noise_mm);
    s.finish();
  }
  if (root.has("postprocess")) {
    Section s = root.child("postprocess");
    s.read("voxel", cfg.postprocess.voxel);
    s.read("outlier_k", cfg.postprocess.outliers.k);
    s.read("std_ratio", cfg.postprocess.outliers.std_ratio);
    s.read("crop_radius", cfg.postprocess.crop_radius);
    s.read("correspondences", cfg.postprocess.correspondences);
    s.read("with_scale", cfg.postprocess.with_scale);
    s.finish();
  }
  if (root.has("icp")) {
    Section s = root.child("icp");
    s.read("max_correspondence_distance", cfg.icp.max_correspondence_distance);
    s.read("max_iterations", cfg.icp.max_iterations);
    s.read("relative_rmse_tolerance", cfg.icp.relative_rmse_tolerance);
    s.read("tukey_k", cfg.icp.tukey_k);
    s.finish();
  }
  if (root.has("metrics")) {
    Section s = root.child("metrics");
    s.read("trim_fraction", cfg.trim_fraction);
    s.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) { return parse_pipeline_config(io::read_file(path)); }

std::string pipeline_config_json(const PipelineConfig& cfg) {
  const TrajectoryConfig& first = cfg.trajectories.front();
  json kinds = json::array(), overrides = json::object();
  double d_close = 80.0, d_far = 120.0;
  for (const TrajectoryConfig& t : cfg.trajectories) {
    kinds.push_back(std::string(to_string(t.kind)));
    overrides[std::string(to_string(t.kind))] = sampling_json(t.sample);
    if (t.kind == TrajectoryKind::open_close) d_close = t.d_lap;
    if (t.kind == TrajectoryKind::open_far) d_far = t.d_lap;
  }
  const AcquisitionConfig& a = cfg.acquisition;
  json doc = {
      {"seed", cfg.seed},
      {"organ",
       {{"semi_axes", vec_json(cfg.organ.shape.semi_axes)},
        {"bump_amplitude", cfg.organ.shape.bump_amplitude},
        {"bump_frequency", cfg.organ.shape.bump_frequency},
        {"seed", cfg.organ.shape.seed},
        {"n_points", cfg.organ.n_points}}},
      {"ground_truth",
       {{"n_views", cfg.ground_truth.n_views},
        {"theta_max", cfg.ground_truth.theta_max_deg},
        {"distance", cfg.ground_truth.distance},
        {"fov_half_angle", cfg.ground_truth.fov_half_angle_deg},
        {"max_incidence", cfg.ground_truth.max_incidence_deg}}},
      {"sampling", sampling_json(first.sample)},
      {"trajectory",
       {{"kinds", kinds},
        {"sample_center", vec_json(first.sample_center)},
        {"up", vec_json(first.up)},
        {"rcm_height", first.rcm_height},
        {"insertion_depth", first.insertion_depth},
        {"d_lap", {{"open_close", d_close}, {"open_far", d_far}}},
        {"sampling", overrides}}},
      {"scan",
       {{"fov_half_angle", a.scan.fov_half_angle_deg},
        {"max_range", a.scan.max_range},
        {"noise_sigma", a.scan.noise_sigma},
        {"dropout_fraction", a.scan.dropout_fraction},
        {"perturbation", a.random_perturbation ? "random" : "identity"},
        {"frames_keep", a.frames_keep},
        {"pair_window", a.pair_window},
        {"min_visible_points", a.min_visible_points},
        {"pose_rotation_noise", a.pose_rotation_noise_rad},
        {"pose_translation_noise", a.pose_translation_noise_mm}}},
      {"postprocess",
       {{"voxel", cfg.postprocess.voxel},
        {"outlier_k", cfg.postprocess.outliers.k},
        {"std_ratio", cfg.postprocess.outliers.std_ratio},
        {"crop_radius", cfg.postprocess.crop_radius},
        {"correspondences", cfg.postprocess.correspondences},
        {"with_scale", cfg.postprocess.with_scale}}},
      {"icp",
       {{"max_correspondence_distance", cfg.icp.max_correspondence_distance},
        {"max_iterations", cfg.icp.max_iterations},
        {"relative_rmse_tolerance", cfg.icp.relative_rmse_tolerance},
        {"tukey_k", cfg.icp.tukey_k}}},
      {"metrics", {{"trim_fraction", cfg.trim_fraction}}},
  };
  return doc.dump(2) + "\n";
}

}  // namespace laprecon
