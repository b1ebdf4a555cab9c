#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "semcond/linalg.hpp"
#include "semcond/matrix.hpp"

namespace semcond {

/// Pixel position; origin at the top-left corner of the top-left pixel.
struct Keypoint {
  float x = 0;
  float y = 0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct KeypointSet {
  std::vector<Keypoint> points;
  std::vector<float> scores;
  std::uint32_t image_width = 0;
  std::uint32_t image_height = 0;

  std::size_t size() const noexcept { return points.size(); }

  /// Throws ContractError if a point falls outside the image, a score is
  /// non-finite, or points and scores disagree in length.
  void validate() const;

  friend bool operator==(const KeypointSet&, const KeypointSet&) = default;
};

enum class DescriptorKind : std::uint8_t { texture, semantic };

struct RawDescriptors {
  Matrix<float> values;  // N x D
  DescriptorKind kind = DescriptorKind::texture;

  friend bool operator==(const RawDescriptors&, const RawDescriptors&) = default;
};

/// H' x W' x C grid of semantic features computed for a W x H source image.
struct DenseSemanticMap {
  std::uint32_t grid_height = 0;
  std::uint32_t grid_width = 0;
  std::uint32_t channels = 0;
  std::uint32_t image_width = 0;
  std::uint32_t image_height = 0;
  std::vector<float> values;  // row-major (gy, gx, c)

  std::span<const float> cell(std::size_t gy, std::size_t gx) const noexcept {
    return {values.data() + (gy * grid_width + gx) * channels, channels};
  }
  std::span<float> cell(std::size_t gy, std::size_t gx) noexcept {
    return {values.data() + (gy * grid_width + gx) * channels, channels};
  }

  friend bool operator==(const DenseSemanticMap&, const DenseSemanticMap&) = default;
};

/// One image's worth of extractor output, as stored in an interchange file.
struct ImageFeatures {
  KeypointSet keypoints;
  RawDescriptors texture;
  DenseSemanticMap semantic_map;

  friend bool operator==(const ImageFeatures&, const ImageFeatures&) = default;
};

/// Refined, unit-norm texture and semantic descriptors: what gets cached.
struct RefinedFeatures {
  KeypointSet keypoints;
  Matrix<float> texture;   // N x d
  Matrix<float> semantic;  // N x d

  std::size_t dim() const noexcept { return texture.cols(); }
  std::size_t size() const noexcept { return keypoints.size(); }

  friend bool operator==(const RefinedFeatures&, const RefinedFeatures&) = default;
};

// --- interchange ("SCF1") -------------------------------------------------

std::vector<std::byte> encode_interchange(const ImageFeatures& features);
ImageFeatures decode_interchange(std::span<const std::byte> bytes);

ImageFeatures load_interchange(const std::filesystem::path& path);
void save_interchange(const std::filesystem::path& path, const ImageFeatures& features);

// --- descriptors ----------------------------------------------------------

/// Catmull-Rom (a = -0.5) bicubic sample of the semantic map at every keypoint,
/// using half-pixel-centre alignment and clamp-to-edge borders.
RawDescriptors sample_semantic(const DenseSemanticMap& map, const KeypointSet& keypoints);

/// Samples one channel vector at fractional grid coordinates.
void sample_grid(const DenseSemanticMap& map, double gx, double gy, std::span<float> out);

Matrix<float> project_raw(const RawDescriptors& raw, const AffineMap<float>& projection);

/// Divides each row by max(||row||, 1e-12); zero rows stay zero.
template <typename T>
Matrix<T> l2_normalize(const Matrix<T>& rows);

/// Keeps the `max_keypoints` highest-scoring keypoints (ties by index),
/// preserving their original order. No-op when already within the limit.
ImageFeatures select_top_keypoints(const ImageFeatures& features, std::size_t max_keypoints);

}  // namespace semcond
