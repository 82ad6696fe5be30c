#include "laprecon/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "laprecon/errors.hpp"

namespace laprecon::io {
namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

std::string fmt17(double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

// ---------------------------------------------------------------- PLY ----

enum class ScalarType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::optional<ScalarType> scalar_type(std::string_view name) {
  static const std::map<std::string_view, ScalarType> types = {
      {"char", ScalarType::i8},    {"int8", ScalarType::i8},     {"uchar", ScalarType::u8},   {"uint8", ScalarType::u8},
      {"short", ScalarType::i16},  {"int16", ScalarType::i16},   {"ushort", ScalarType::u16}, {"uint16", ScalarType::u16},
      {"int", ScalarType::i32},    {"int32", ScalarType::i32},   {"uint", ScalarType::u32},   {"uint32", ScalarType::u32},
      {"float", ScalarType::f32},  {"float32", ScalarType::f32}, {"double", ScalarType::f64}, {"float64", ScalarType::f64},
  };
  auto it = types.find(name);
  if (it == types.end()) return std::nullopt;
  return it->second;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::i8:
    case ScalarType::u8:
      return 1;
    case ScalarType::i16:
    case ScalarType::u16:
      return 2;
    case ScalarType::i32:
    case ScalarType::u32:
    case ScalarType::f32:
      return 4;
    case ScalarType::f64:
      return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::f64;
  bool is_list = false;
  ScalarType count_type = ScalarType::u8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
  std::size_t declared_at = 0;
};

template <typename T>
double load(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof v);
  return static_cast<double>(v);
}

double decode(ScalarType t, const char* p) {
  switch (t) {
    case ScalarType::i8:
      return load<std::int8_t>(p);
    case ScalarType::u8:
      return load<std::uint8_t>(p);
    case ScalarType::i16:
      return load<std::int16_t>(p);
    case ScalarType::u16:
      return load<std::uint16_t>(p);
    case ScalarType::i32:
      return load<std::int32_t>(p);
    case ScalarType::u32:
      return load<std::uint32_t>(p);
    case ScalarType::f32:
      return load<float>(p);
    case ScalarType::f64:
      return load<double>(p);
  }
  return 0.0;
}

// Sequential reader over the payload of either encoding.
class PayloadReader {
 public:
  PayloadReader(const std::string& bytes, std::size_t pos, bool ascii) : bytes_(bytes), pos_(pos), ascii_(ascii) {}

  double next(ScalarType t) {
    if (ascii_) return next_token();
    const std::size_t n = scalar_size(t);
    if (pos_ + n > bytes_.size()) throw ParseError("ply: truncated binary payload", pos_);
    const double v = decode(t, bytes_.data() + pos_);
    pos_ += n;
    return v;
  }

  std::size_t offset() const { return pos_; }

 private:
  double next_token() {
    while (pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (pos_ >= bytes_.size()) throw ParseError("ply: truncated ascii payload", pos_);
    std::size_t end = pos_;
    while (end < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[end]))) ++end;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(bytes_.data() + pos_, bytes_.data() + end, v);
    if (ec != std::errc() || ptr != bytes_.data() + end) {
      throw ParseError("ply: malformed number '" + bytes_.substr(pos_, end - pos_) + "'", pos_);
    }
    pos_ = end;
    return v;
  }

  const std::string& bytes_;
  std::size_t pos_;
  bool ascii_;
};

std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> words;
  std::istringstream in{std::string(line)};
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

}  // namespace

PointCloud parse_ply(const std::string& bytes) {
  std::size_t pos = 0;
  auto next_line = [&](std::size_t& line_start) -> std::string_view {
    line_start = pos;
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw ParseError("ply: header is not terminated by end_header", pos);
    std::string_view line(bytes.data() + pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    return line;
  };

  std::size_t at = 0;
  if (next_line(at) != "ply") throw ParseError("ply: missing 'ply' magic", 0);

  std::optional<bool> ascii;
  std::vector<Element> elements;
  for (;;) {
    const std::string_view line = next_line(at);
    const std::vector<std::string> w = split_words(line);
    if (w.empty() || w[0] == "comment" || w[0] == "obj_info") continue;
    if (w[0] == "end_header") break;
    if (w[0] == "format") {
      if (w.size() != 3) throw ParseError("ply: malformed format line", at);
      if (w[1] == "ascii") {
        ascii = true;
      } else if (w[1] == "binary_little_endian") {
        ascii = false;
      } else {
        throw ParseError("ply: unsupported format '" + w[1] + "'", at);
      }
    } else if (w[0] == "element") {
      if (w.size() != 3) throw ParseError("ply: malformed element line", at);
      std::size_t count = 0;
      const auto [ptr, ec] = std::from_chars(w[2].data(), w[2].data() + w[2].size(), count);
      if (ec != std::errc() || ptr != w[2].data() + w[2].size()) throw ParseError("ply: bad element count", at);
      elements.push_back({w[1], count, {}, at});
    } else if (w[0] == "property") {
      if (elements.empty()) throw ParseError("ply: property before any element", at);
      Property prop;
      if (w.size() == 5 && w[1] == "list") {
        const auto ct = scalar_type(w[2]);
        const auto it = scalar_type(w[3]);
        if (!ct || !it) throw ParseError("ply: unknown list property type", at);
        prop = {w[4], *it, true, *ct};
      } else if (w.size() == 3) {
        const auto t = scalar_type(w[1]);
        if (!t) throw ParseError("ply: unknown property type '" + w[1] + "'", at);
        prop = {w[2], *t, false, ScalarType::u8};
      } else {
        throw ParseError("ply: malformed property line", at);
      }
      elements.back().properties.push_back(prop);
    } else {
      throw ParseError("ply: unexpected header keyword '" + w[0] + "'", at);
    }
  }
  if (!ascii) throw ParseError("ply: header has no format line", at);

  auto vertex = std::find_if(elements.begin(), elements.end(), [](const Element& e) { return e.name == "vertex"; });
  if (vertex == elements.end()) throw ParseError("ply: no vertex element", at);

  auto find_prop = [&](const char* name) -> int {
    for (std::size_t i = 0; i < vertex->properties.size(); ++i) {
      if (vertex->properties[i].name == name) return static_cast<int>(i);
    }
    return -1;
  };
  std::array<int, 3> xyz{}, nxyz{};
  const char* coord_names[] = {"x", "y", "z"};
  const char* normal_names[] = {"nx", "ny", "nz"};
  int normal_count = 0;
  for (int a = 0; a < 3; ++a) {
    xyz[a] = find_prop(coord_names[a]);
    if (xyz[a] < 0) throw ParseError(std::string("ply: vertex element lacks property '") + coord_names[a] + "'", vertex->declared_at);
    const Property& p = vertex->properties[static_cast<std::size_t>(xyz[a])];
    if (p.is_list || (p.type != ScalarType::f32 && p.type != ScalarType::f64)) {
      throw ParseError(std::string("ply: property '") + coord_names[a] + "' must be float or double", vertex->declared_at);
    }
    nxyz[a] = find_prop(normal_names[a]);
    normal_count += nxyz[a] >= 0;
  }
  if (normal_count != 0 && normal_count != 3) throw ParseError("ply: vertex normals are incomplete", vertex->declared_at);
  const bool with_normals = normal_count == 3;

  PayloadReader reader(bytes, pos, *ascii);
  auto skip_element = [&](const Element& e) {
    for (std::size_t i = 0; i < e.count; ++i) {
      for (const Property& p : e.properties) {
        if (!p.is_list) {
          reader.next(p.type);
          continue;
        }
        const double n = reader.next(p.count_type);
        if (!(n >= 0.0)) throw ParseError("ply: negative list length", reader.offset());
        for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) reader.next(p.type);
      }
    }
  };

  PointCloud cloud;
  for (const Element& e : elements) {
    if (&e != &*vertex) {
      skip_element(e);
      continue;
    }
    cloud.points.resize(e.count);
    if (with_normals) cloud.normals.resize(e.count);
    std::vector<double> row(e.properties.size());
    for (std::size_t i = 0; i < e.count; ++i) {
      const std::size_t row_start = reader.offset();
      for (std::size_t k = 0; k < e.properties.size(); ++k) {
        const Property& p = e.properties[k];
        if (!p.is_list) {
          row[k] = reader.next(p.type);
          continue;
        }
        const double n = reader.next(p.count_type);
        for (std::size_t m = 0; m < static_cast<std::size_t>(n); ++m) reader.next(p.type);
      }
      Vec3& pt = cloud.points[i];
      for (int a = 0; a < 3; ++a) pt[a] = row[static_cast<std::size_t>(xyz[a])];
      if (!pt.allFinite()) throw ParseError("ply: non-finite vertex coordinate", row_start);
      if (with_normals) {
        Vec3 n;
        for (int a = 0; a < 3; ++a) n[a] = row[static_cast<std::size_t>(nxyz[a])];
        const double len = n.norm();
        if (!(len > 0.0) || !std::isfinite(len)) throw ParseError("ply: zero or non-finite normal", row_start);
        if (std::abs(len - 1.0) > 1e-9) n /= len;
        cloud.normals[i] = n;
      }
    }
    break;  // later elements are not needed
  }
  return cloud;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw InvalidArgument("failed writing '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

PointCloud read_ply(const std::filesystem::path& path) { return parse_ply(read_file(path)); }

std::string format_ply(const PointCloud& cloud, PlyFormat format) {
  cloud.validate();
  const bool normals = cloud.has_normals();
  std::string out = "ply\nformat ";
  out += format == PlyFormat::ascii ? "ascii" : "binary_little_endian";
  out += " 1.0\nelement vertex " + std::to_string(cloud.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  if (normals) out += "property double nx\nproperty double ny\nproperty double nz\n";
  out += "end_header\n";

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::array<double, 6> v{};
    const int n = normals ? 6 : 3;
    for (int a = 0; a < 3; ++a) v[static_cast<std::size_t>(a)] = cloud.points[i][a];
    if (normals) {
      for (int a = 0; a < 3; ++a) v[static_cast<std::size_t>(3 + a)] = cloud.normals[i][a];
    }
    if (format == PlyFormat::ascii) {
      for (int a = 0; a < n; ++a) {
        if (a) out += ' ';
        out += fmt17(v[static_cast<std::size_t>(a)]);
      }
      out += '\n';
    } else {
      out.append(reinterpret_cast<const char*>(v.data()), sizeof(double) * static_cast<std::size_t>(n));
    }
  }
  return out;
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyFormat format) {
  write_file_atomic(path, format_ply(cloud, format));
}

// ----------------------------------------------------------- pose CSV ----

namespace {

constexpr std::string_view kPoseHeader = "frame_id,tx,ty,tz,qx,qy,qz,qw";

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
    fields.push_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_field(std::string_view f, std::size_t row, const char* what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || ptr != f.data() + f.size()) {
    throw ValidationError(std::string("malformed ") + what + " '" + std::string(f) + "'", row);
  }
  return v;
}

// Yields (1-based row number, line) for non-empty lines.
std::vector<std::pair<std::size_t, std::string_view>> csv_lines(const std::string& text) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::size_t pos = 0, row = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line(text.data() + pos, (nl == std::string::npos ? text.size() : nl) - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++row;
    if (!line.empty()) lines.emplace_back(row, line);
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return lines;
}

}  // namespace

std::vector<FramePose> parse_poses(const std::string& text) {
  const auto lines = csv_lines(text);
  if (lines.empty() || lines.front().second != kPoseHeader) {
    throw ValidationError("pose CSV header must be '" + std::string(kPoseHeader) + "'", 1);
  }
  std::vector<FramePose> poses;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [row, line] = lines[i];
    const auto f = split_csv(line);
    if (f.size() != 8) throw ValidationError("expected 8 fields, got " + std::to_string(f.size()), row);
    const int id = parse_field<int>(f[0], row, "frame_id");
    double v[7];
    for (int k = 0; k < 7; ++k) v[k] = parse_field<double>(f[static_cast<std::size_t>(k + 1)], row, "number");
    const Vec3 t(v[0], v[1], v[2]);
    const Eigen::Quaterniond q(v[6], v[3], v[4], v[5]);
    if (!t.allFinite() || !q.coeffs().allFinite()) throw ValidationError("non-finite value", row);
    if (std::abs(q.norm() - 1.0) > 1e-6) throw ValidationError("quaternion is not unit within 1e-6", row);
    if (!poses.empty() && id <= poses.back().frame_id) {
      throw ValidationError(id == poses.back().frame_id ? "duplicate frame_id " + std::to_string(id)
                                                        : "frame_id " + std::to_string(id) + " is not increasing",
                            row);
    }
    poses.push_back({id, Pose{Rotation(q), t}});
  }
  return poses;
}

std::vector<FramePose> read_poses(const std::filesystem::path& path) { return parse_poses(read_file(path)); }

std::string format_poses(const std::vector<FramePose>& poses) {
  std::string out(kPoseHeader);
  out += '\n';
  for (const FramePose& fp : poses) {
    const Pose& p = fp.pose;
    out += std::to_string(fp.frame_id);
    for (double v : {p.translation.x(), p.translation.y(), p.translation.z(), p.rotation.x(), p.rotation.y(),
                     p.rotation.z(), p.rotation.w()}) {
      out += ',';
      out += fmt17(v);
    }
    out += '\n';
  }
  return out;
}

void write_poses(const std::vector<FramePose>& poses, const std::filesystem::path& path) {
  for (std::size_t i = 1; i < poses.size(); ++i) {
    if (poses[i].frame_id <= poses[i - 1].frame_id) throw InvalidArgument("write_poses: frame_ids must be strictly increasing");
  }
  write_file_atomic(path, format_poses(poses));
}

std::vector<std::pair<std::size_t, std::size_t>> read_correspondences(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto lines = csv_lines(text);
  if (lines.empty() || lines.front().second != "src_index,dst_index") {
    throw ValidationError("correspondence CSV header must be 'src_index,dst_index'", 1);
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [row, line] = lines[i];
    const auto f = split_csv(line);
    if (f.size() != 2) throw ValidationError("expected 2 fields", row);
    out.emplace_back(parse_field<std::size_t>(f[0], row, "index"), parse_field<std::size_t>(f[1], row, "index"));
  }
  return out;
}

void write_correspondences(const std::vector<std::pair<std::size_t, std::size_t>>& pairs, const std::filesystem::path& path) {
  std::string out = "src_index,dst_index\n";
  for (const auto& [s, d] : pairs) out += std::to_string(s) + ',' + std::to_string(d) + '\n';
  write_file_atomic(path, out);
}

// ------------------------------------------------------------ metrics ----

void MetricsReport::set(const CloudMetrics& m) {
  chamfer_mm = m.chamfer;
  hausdorff_mm = m.hausdorff;
  rmse_mm = m.rmse;
  trim_fraction = m.trim_fraction;
}

namespace {

std::vector<std::pair<const char*, std::optional<double>>> fields(const MetricsReport& r) {
  return {{"chamfer_mm", r.chamfer_mm},
          {"hausdorff_mm", r.hausdorff_mm},
          {"rmse_mm", r.rmse_mm},
          {"trim_fraction", r.trim_fraction},
          {"rpe_rotation_rad", r.rpe_rotation_rad},
          {"rpe_translation_mm", r.rpe_translation_mm},
          {"coverage", r.coverage}};
}

}  // namespace

std::string metrics_json(const MetricsReport& report) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [key, value] : fields(report)) {
    if (value) j[key] = *value;
  }
  return j.dump(2) + "\n";
}

std::string metrics_text(const MetricsReport& report) {
  std::string out;
  for (const auto& [key, value] : fields(report)) {
    if (value) out += std::string(key) + "=" + fmt17(*value) + "\n";
  }
  return out;
}

}  // namespace laprecon::io
