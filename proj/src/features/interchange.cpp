#include <cmath>
#include <string>

#include "semcond/binary_io.hpp"
#include "semcond/errors.hpp"
#include "semcond/features.hpp"

namespace semcond {
namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 8 * 4;

}  // namespace

void KeypointSet::validate() const {
  if (scores.size() != points.size()) {
    throw ContractError("KeypointSet: " + std::to_string(points.size()) + " points but " +
                        std::to_string(scores.size()) + " scores");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.x >= 0.0f && p.x < static_cast<float>(image_width) && p.y >= 0.0f &&
          p.y < static_cast<float>(image_height))) {
      throw ContractError("KeypointSet: keypoint " + std::to_string(i) + " outside the " +
                          std::to_string(image_width) + "x" + std::to_string(image_height) +
                          " image");
    }
    if (!std::isfinite(scores[i])) {
      throw ContractError("KeypointSet: non-finite score at " + std::to_string(i));
    }
  }
}

std::vector<std::byte> encode_interchange(const ImageFeatures& f) {
  const auto n = f.keypoints.size();
  if (f.texture.values.rows() != n) throw ContractError("encode_interchange: texture row count");
  const auto& map = f.semantic_map;
  if (map.values.size() != std::size_t{map.grid_height} * map.grid_width * map.channels) {
    throw ContractError("encode_interchange: semantic grid size");
  }
  ByteWriter w;
  w.magic("SCF1");
  w.u32(kVersion);
  w.u32(f.keypoints.image_width);
  w.u32(f.keypoints.image_height);
  w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(f.texture.values.cols()));
  w.u32(map.grid_height);
  w.u32(map.grid_width);
  w.u32(map.channels);
  for (const auto& p : f.keypoints.points) {
    w.f32(p.x);
    w.f32(p.y);
  }
  w.f32_array(f.keypoints.scores);
  w.f32_array(f.texture.values.values());
  w.f32_array(map.values);
  return w.take();
}

ImageFeatures decode_interchange(std::span<const std::byte> bytes) {
  ByteReader r(bytes, "SCF1");
  r.expect_magic("SCF1");
  const auto version = r.u32();
  if (version != kVersion) {
    throw ParseError(ParseError::Kind::unsupported_version, 4,
                     "SCF1: unsupported version " + std::to_string(version) + " at byte offset 4");
  }
  ImageFeatures f;
  f.keypoints.image_width = r.u32();
  f.keypoints.image_height = r.u32();
  const std::uint64_t n = r.u32();
  const std::uint64_t d_in = r.u32();
  f.semantic_map.grid_height = r.u32();
  f.semantic_map.grid_width = r.u32();
  f.semantic_map.channels = r.u32();
  f.semantic_map.image_width = f.keypoints.image_width;
  f.semantic_map.image_height = f.keypoints.image_height;
  const auto& map = f.semantic_map;

  if (f.keypoints.image_width == 0 || f.keypoints.image_height == 0) {
    throw ParseError(ParseError::Kind::invalid_value, 8, "SCF1: image size must be positive");
  }
  if (map.grid_height == 0 || map.grid_width == 0 || map.channels == 0) {
    throw ParseError(ParseError::Kind::invalid_value, 24, "SCF1: semantic grid dimensions must be positive");
  }

  const std::uint64_t floats = n * 2 + n + n * d_in +
                               std::uint64_t{map.grid_height} * map.grid_width * map.channels;
  const std::uint64_t expected = kHeaderBytes + 4 * floats;
  if (bytes.size() < expected) {
    throw ParseError(ParseError::Kind::truncated, bytes.size(),
                     "SCF1: truncated payload at byte offset " + std::to_string(bytes.size()) +
                         " (header declares " + std::to_string(expected) + " bytes)");
  }

  f.keypoints.points.resize(n);
  for (auto& p : f.keypoints.points) {
    p.x = r.f32();
    p.y = r.f32();
  }
  f.keypoints.scores.resize(n);
  r.f32_array(f.keypoints.scores);
  f.texture.kind = DescriptorKind::texture;
  f.texture.values = Matrix<float>(n, d_in);
  r.f32_array(f.texture.values.values());
  f.semantic_map.values.resize(std::size_t{map.grid_height} * map.grid_width * map.channels);
  r.f32_array(f.semantic_map.values);
  r.expect_end();

  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = f.keypoints.points[i];
    if (!(p.x >= 0.0f && p.x < static_cast<float>(f.keypoints.image_width) && p.y >= 0.0f &&
          p.y < static_cast<float>(f.keypoints.image_height))) {
      const auto at = kHeaderBytes + 8 * i;
      throw ParseError(ParseError::Kind::invalid_value, at,
                       "SCF1: keypoint " + std::to_string(i) + " outside the image at byte offset " +
                           std::to_string(at));
    }
  }
  return f;
}

ImageFeatures load_interchange(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_interchange(bytes);
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.offset(), path.string() + ": " + e.what());
  }
}

void save_interchange(const std::filesystem::path& path, const ImageFeatures& features) {
  write_file_atomic(path, encode_interchange(features));
}

}  // namespace semcond
