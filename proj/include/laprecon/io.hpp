#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "laprecon/geometry.hpp"
#include "laprecon/metrics.hpp"
#include "laprecon/pointcloud.hpp"

namespace laprecon::io {

enum class PlyFormat { ascii, binary_little_endian };

/// Reads the `vertex` element: x, y, z (float or double) required, nx, ny, nz optional,
/// anything else skipped. Throws ParseError with the failing byte offset.
PointCloud read_ply(const std::filesystem::path& path);
PointCloud parse_ply(const std::string& bytes);

/// Writes x, y, z (and normals when present) as doubles; ASCII uses 17 significant digits.
void write_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyFormat format = PlyFormat::binary_little_endian);
std::string format_ply(const PointCloud& cloud, PlyFormat format);

/// Pose CSV with header `frame_id,tx,ty,tz,qx,qy,qz,qw` (quaternion scalar-last).
std::vector<FramePose> read_poses(const std::filesystem::path& path);
std::vector<FramePose> parse_poses(const std::string& text);
void write_poses(const std::vector<FramePose>& poses, const std::filesystem::path& path);
std::string format_poses(const std::vector<FramePose>& poses);

/// Correspondence CSV with header `src_index,dst_index`.
std::vector<std::pair<std::size_t, std::size_t>> read_correspondences(const std::filesystem::path& path);
void write_correspondences(const std::vector<std::pair<std::size_t, std::size_t>>& pairs, const std::filesystem::path& path);

/// Flat metrics record; absent fields are omitted from the outputs.
struct MetricsReport {
  std::optional<double> chamfer_mm;
  std::optional<double> hausdorff_mm;
  std::optional<double> rmse_mm;
  std::optional<double> trim_fraction;
  std::optional<double> rpe_rotation_rad;
  std::optional<double> rpe_translation_mm;
  std::optional<double> coverage;

  void set(const CloudMetrics& m);
};

std::string metrics_json(const MetricsReport& report);
/// One `key=value` line per present field, same key order as the JSON.
std::string metrics_text(const MetricsReport& report);

/// Writes via a temporary file and rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace laprecon::io
