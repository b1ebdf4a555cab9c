#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "semcond/features.hpp"

namespace semcond {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

Mat3 mat3_identity();
Mat3 mat3_multiply(const Mat3& a, const Mat3& b);
Mat3 mat3_transpose(const Mat3& a);
Vec3 mat3_apply(const Mat3& a, const Vec3& v);
double mat3_determinant(const Mat3& a);
Vec3 cross(const Vec3& a, const Vec3& b);
double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& v);
Vec3 normalized(const Vec3& v);
/// Rotation of `angle_rad` about `axis` (need not be unit).
Mat3 axis_angle(const Vec3& axis, double angle_rad);

struct Intrinsics {
  double fx = 1;
  double fy = 1;
  double cx = 0;
  double cy = 0;

  Vec3 unproject(double u, double v) const { return {(u - cx) / fx, (v - cy) / fy, 1.0}; }

  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

/// Metric depth per pixel, 0 marks an invalid pixel.
struct DepthMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<float> values;  // row-major

  bool empty() const noexcept { return values.empty(); }
  float at(std::uint32_t x, std::uint32_t y) const { return values[std::size_t{y} * width + x]; }

  friend bool operator==(const DepthMap&, const DepthMap&) = default;
};

/// World-to-camera pose: X_cam = R * X_world + t.
struct ViewGeometry {
  Intrinsics intrinsics;
  Mat3 rotation = mat3_identity();
  Vec3 translation{0, 0, 0};
  std::uint32_t image_width = 0;
  std::uint32_t image_height = 0;
  DepthMap depth;

  /// Throws ContractError unless R is a proper rotation, focal lengths are
  /// positive and the depth map (if any) covers the image.
  void validate() const;

  friend bool operator==(const ViewGeometry&, const ViewGeometry&) = default;
};

/// Rotation and unit translation direction taking camera-1 coordinates to
/// camera 2.
struct RelativePose {
  Mat3 rotation = mat3_identity();
  Vec3 translation{0, 0, 1};
};

RelativePose relative_pose(const ViewGeometry& first, const ViewGeometry& second);

struct ProjectedKeypoint {
  double x = 0;
  double y = 0;
  bool valid = false;
};

struct ProjectionOptions {
  bool depth_check = false;
  double depth_tolerance = 0.05;  // relative
};

/// Reprojects keypoints of view 1 into view 2 using view-1 depth read at the
/// containing pixel.
std::vector<ProjectedKeypoint> project_keypoints(const KeypointSet& keypoints,
                                                 const ViewGeometry& first,
                                                 const ViewGeometry& second,
                                                 const ProjectionOptions& options = {});

/// Text sidecar:
///   image W H
///   intrinsics fx fy cx cy
///   rotation r00 r01 r02 r10 r11 r12 r20 r21 r22
///   translation tx ty tz
///   depth <path>          (optional; raw little-endian f32, H x W)
/// Blank lines and lines starting with '#' are ignored. Relative depth paths
/// resolve against the sidecar's directory.
ViewGeometry load_geometry(const std::filesystem::path& path);
void save_geometry(const std::filesystem::path& path, const ViewGeometry& geometry,
                   const std::string& depth_file = {});

DepthMap load_depth(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height);
void save_depth(const std::filesystem::path& path, const DepthMap& depth);

}  // namespace semcond
