#include "semcond/geometry.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "semcond/binary_io.hpp"
#include "semcond/errors.hpp"

namespace semcond {

Mat3 mat3_identity() { return {1, 0, 0, 0, 1, 0, 0, 0, 1}; }

Mat3 mat3_multiply(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * b[k * 3 + j];
      out[i * 3 + j] = s;
    }
  }
  return out;
}

Mat3 mat3_transpose(const Mat3& a) {
  return {a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]};
}

Vec3 mat3_apply(const Mat3& a, const Vec3& v) {
  return {a[0] * v[0] + a[1] * v[1] + a[2] * v[2], a[3] * v[0] + a[4] * v[1] + a[5] * v[2],
          a[6] * v[0] + a[7] * v[1] + a[8] * v[2]};
}

double mat3_determinant(const Mat3& a) {
  return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
         a[2] * (a[3] * a[7] - a[4] * a[6]);
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  if (n == 0) return v;
  return {v[0] / n, v[1] / n, v[2] / n};
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  const Vec3 k = normalized(axis);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double t = 1 - c;
  return {c + k[0] * k[0] * t,        k[0] * k[1] * t - k[2] * s, k[0] * k[2] * t + k[1] * s,
          k[1] * k[0] * t + k[2] * s, c + k[1] * k[1] * t,        k[1] * k[2] * t - k[0] * s,
          k[2] * k[0] * t - k[1] * s, k[2] * k[1] * t + k[0] * s, c + k[2] * k[2] * t};
}

void ViewGeometry::validate() const {
  if (!(intrinsics.fx > 0) || !(intrinsics.fy > 0)) {
    throw ContractError("focal lengths must be positive");
  }
  const Mat3 rtr = mat3_multiply(mat3_transpose(rotation), rotation);
  const Mat3 eye = mat3_identity();
  for (int k = 0; k < 9; ++k) {
    if (!(std::abs(rtr[k] - eye[k]) <= 1e-6)) throw ContractError("rotation is not orthonormal");
  }
  if (!(std::abs(mat3_determinant(rotation) - 1) <= 1e-6)) {
    throw ContractError("rotation determinant is not +1");
  }
  if (!depth.empty() && (depth.width != image_width || depth.height != image_height ||
                         depth.values.size() != std::size_t{depth.width} * depth.height)) {
    throw ContractError("depth map does not cover the image");
  }
}

RelativePose relative_pose(const ViewGeometry& first, const ViewGeometry& second) {
  RelativePose pose;
  pose.rotation = mat3_multiply(second.rotation, mat3_transpose(first.rotation));
  const Vec3 rt = mat3_apply(pose.rotation, first.translation);
  pose.translation = normalized(
      {second.translation[0] - rt[0], second.translation[1] - rt[1], second.translation[2] - rt[2]});
  return pose;
}

std::vector<ProjectedKeypoint> project_keypoints(const KeypointSet& keypoints,
                                                 const ViewGeometry& first,
                                                 const ViewGeometry& second,
                                                 const ProjectionOptions& options) {
  std::vector<ProjectedKeypoint> out(keypoints.size());
  if (first.depth.empty()) return out;
  if (options.depth_check && second.depth.empty()) {
    throw ContractError("depth check requires a depth map for the second view");
  }
  const Mat3 r1t = mat3_transpose(first.rotation);
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    const auto& p = keypoints.points[i];
    const double fx = std::floor(p.x);
    const double fy = std::floor(p.y);
    if (fx < 0 || fy < 0 || fx >= first.depth.width || fy >= first.depth.height) continue;
    const double z = first.depth.at(static_cast<std::uint32_t>(fx), static_cast<std::uint32_t>(fy));
    if (!(z > 0) || !std::isfinite(z)) continue;

    const Vec3 ray = first.intrinsics.unproject(p.x, p.y);
    const Vec3 cam1{ray[0] * z - first.translation[0], ray[1] * z - first.translation[1],
                    ray[2] * z - first.translation[2]};
    const Vec3 world = mat3_apply(r1t, cam1);
    const Vec3 r2w = mat3_apply(second.rotation, world);
    const Vec3 cam2{r2w[0] + second.translation[0], r2w[1] + second.translation[1],
                    r2w[2] + second.translation[2]};
    if (!(cam2[2] > 0)) continue;

    const auto& k2 = second.intrinsics;
    const double u = k2.fx * cam2[0] / cam2[2] + k2.cx;
    const double v = k2.fy * cam2[1] / cam2[2] + k2.cy;
    if (!(u >= 0 && v >= 0 && u < second.image_width && v < second.image_height)) continue;

    if (options.depth_check) {
      const double z2 = second.depth.at(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
      if (!(z2 > 0) || std::abs(cam2[2] - z2) > options.depth_tolerance * z2) continue;
    }
    out[i] = {u, v, true};
  }
  return out;
}

// --- sidecar I/O -----------------------------------------------------------

namespace {

[[noreturn]] void sidecar_error(const std::filesystem::path& path, std::size_t line,
                                const std::string& msg) {
  throw ParseError(ParseError::Kind::malformed, line,
                   path.string() + ":" + std::to_string(line) + ": " + msg);
}

std::vector<double> parse_numbers(std::istringstream& in, std::size_t count,
                                  const std::filesystem::path& path, std::size_t line,
                                  const std::string& key) {
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v)) {
      sidecar_error(path, line, "invalid number '" + token + "' in '" + key + "'");
    }
    values.push_back(v);
  }
  if (values.size() != count) {
    sidecar_error(path, line, "'" + key + "' expects " + std::to_string(count) + " values, got " +
                                  std::to_string(values.size()));
  }
  return values;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

ViewGeometry load_geometry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(ParseError::Kind::io, 0, "cannot open geometry file " + path.string());

  ViewGeometry g;
  bool has_image = false, has_intrinsics = false, has_rotation = false, has_translation = false;
  std::filesystem::path depth_path;
  std::size_t depth_line = 0;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    std::istringstream ls(text);
    std::string key;
    if (!(ls >> key) || key[0] == '#') continue;
    if (key == "image") {
      const auto v = parse_numbers(ls, 2, path, line, key);
      if (v[0] < 1 || v[1] < 1 || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1])) {
        sidecar_error(path, line, "image size must be positive integers");
      }
      g.image_width = static_cast<std::uint32_t>(v[0]);
      g.image_height = static_cast<std::uint32_t>(v[1]);
      has_image = true;
    } else if (key == "intrinsics") {
      const auto v = parse_numbers(ls, 4, path, line, key);
      g.intrinsics = {v[0], v[1], v[2], v[3]};
      if (!(v[0] > 0) || !(v[1] > 0)) sidecar_error(path, line, "focal lengths must be positive");
      has_intrinsics = true;
    } else if (key == "rotation") {
      const auto v = parse_numbers(ls, 9, path, line, key);
      std::copy(v.begin(), v.end(), g.rotation.begin());
      has_rotation = true;
    } else if (key == "translation") {
      const auto v = parse_numbers(ls, 3, path, line, key);
      std::copy(v.begin(), v.end(), g.translation.begin());
      has_translation = true;
    } else if (key == "depth") {
      std::string p;
      if (!(ls >> p)) sidecar_error(path, line, "'depth' expects a file path");
      std::string extra;
      if (ls >> extra) sidecar_error(path, line, "unexpected token '" + extra + "'");
      depth_path = p;
      depth_line = line;
    } else {
      sidecar_error(path, line, "unknown key '" + key + "'");
    }
  }
  if (!has_image) sidecar_error(path, line, "missing 'image' line");
  if (!has_intrinsics) sidecar_error(path, line, "missing 'intrinsics' line");
  if (!has_rotation) sidecar_error(path, line, "missing 'rotation' line");
  if (!has_translation) sidecar_error(path, line, "missing 'translation' line");
  try {
    g.validate();
  } catch (const ContractError& e) {
    sidecar_error(path, line, e.what());
  }
  if (!depth_path.empty()) {
    if (depth_path.is_relative()) depth_path = path.parent_path() / depth_path;
    try {
      g.depth = load_depth(depth_path, g.image_width, g.image_height);
    } catch (const ParseError& e) {
      sidecar_error(path, depth_line, e.what());
    }
  }
  return g;
}

void save_geometry(const std::filesystem::path& path, const ViewGeometry& g,
                   const std::string& depth_file) {
  std::string out;
  out += "image " + std::to_string(g.image_width) + " " + std::to_string(g.image_height) + "\n";
  out += "intrinsics " + format_double(g.intrinsics.fx) + " " + format_double(g.intrinsics.fy) + " " +
         format_double(g.intrinsics.cx) + " " + format_double(g.intrinsics.cy) + "\n";
  out += "rotation";
  for (double v : g.rotation) out += " " + format_double(v);
  out += "\ntranslation";
  for (double v : g.translation) out += " " + format_double(v);
  out += "\n";
  if (!depth_file.empty()) out += "depth " + depth_file + "\n";
  write_file_atomic(path, std::string_view(out));
}

DepthMap load_depth(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height) {
  const auto bytes = read_file_bytes(path);
  ByteReader reader(bytes, path.string());
  DepthMap d;
  d.width = width;
  d.height = height;
  d.values.resize(std::size_t{width} * height);
  reader.f32_array(d.values);
  reader.expect_end();
  for (std::size_t k = 0; k < d.values.size(); ++k) {
    if (d.values[k] < 0) {
      throw ParseError(ParseError::Kind::invalid_value, k * 4,
                       path.string() + ": negative depth at byte offset " + std::to_string(k * 4));
    }
  }
  return d;
}

void save_depth(const std::filesystem::path& path, const DepthMap& depth) {
  ByteWriter w;
  w.f32_array(depth.values);
  write_file_atomic(path, w.buffer());
}

}  // namespace semcond
