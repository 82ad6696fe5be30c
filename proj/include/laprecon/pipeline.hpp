#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "laprecon/metrics.hpp"
#include "laprecon/registration.hpp"
#include "laprecon/sampling.hpp"
#include "laprecon/simulator.hpp"

namespace laprecon {

struct OrganConfig {
  OrganShape shape;
  int n_points = 40000;
};

/// The reference laser scan: a noise-free capture from a ring of views above the organ.
struct GroundTruthConfig {
  int n_views = 64;
  double theta_max_deg = 30.0;
  double distance = 250.0;
  double fov_half_angle_deg = 30.0;
  /// Laser scanners drop returns at grazing incidence.
  double max_incidence_deg = 70.0;
};

struct AcquisitionConfig {
  ScanConfig scan;
  /// false: identity frame perturbation.
  bool random_perturbation = true;
  /// Frames kept from each trajectory before reconstruction.
  int frames_keep = 100;
  int pair_window = 5;
  /// A frame gets a predicted pose when it sees at least this many organ points.
  int min_visible_points = 200;
  double pose_rotation_noise_rad = 0.002;
  double pose_translation_noise_mm = 0.1;
};

struct PostprocessConfig {
  double voxel = 0.5;
  OutlierParams outliers;
  double crop_radius = 60.0;
  /// Known scan-to-ground-truth point pairs used for the coarse alignment.
  int correspondences = 100;
  bool with_scale = true;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  OrganConfig organ;
  GroundTruthConfig ground_truth;
  /// One entry per trajectory kind to run.
  std::vector<TrajectoryConfig> trajectories;
  AcquisitionConfig acquisition;
  PostprocessConfig postprocess;
  IcpParams icp;
  double trim_fraction = 0.05;

  /// Defaults: all three trajectory kinds.
  static PipelineConfig defaults();
  void validate() const;
};

/// Parses a JSON config document; unknown keys and invalid values are rejected.
PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string pipeline_config_json(const PipelineConfig& cfg);

struct TrajectoryRun {
  TrajectoryKind kind = TrajectoryKind::open_close;
  std::size_t poses_total = 0;
  std::size_t frames_kept = 0;
  std::size_t pairs = 0;
  std::size_t scan_points = 0;
  std::size_t processed_points = 0;
  SimilarityTransform coarse;
  RegistrationResult registration;
  CloudMetrics cloud;
  /// Absent (nullopt) when fewer than three frames were predicted.
  std::optional<PoseMetrics> poses;
};

struct PipelineSummary {
  std::vector<TrajectoryRun> runs;
  std::string metrics_json;
};

/// Runs simulate -> coarse align -> post-process -> ICP -> metrics for each
/// trajectory. Writes artifacts into output_dir when it is non-empty.
PipelineSummary run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& output_dir = {});

}  // namespace laprecon
