#pragma once

#include <cstdint>
#include <vector>

#include "semcond/features.hpp"
#include "semcond/matches.hpp"

namespace semcond {

/// Settings for the texture-ambiguity scene generator.
struct SyntheticConfig {
  std::uint32_t keypoints = 256;
  std::uint32_t regions = 8;
  std::uint32_t texture_dim = 32;
  std::uint32_t semantic_channels = 32;
  double noise = 0.05;
  double dropout = 0.0;
  std::uint32_t image_width = 512;
  std::uint32_t image_height = 512;
  std::uint32_t grid_width = 32;
  std::uint32_t grid_height = 32;
};

/// Two views of a scene where every keypoint has a near-identical texture
/// twin in a different semantic region. Texture alone cannot tell twins
/// apart; the region prototypes can.
struct SyntheticScenePair {
  ImageFeatures first;
  ImageFeatures second;
  GroundTruthMatches ground_truth;           // (index in first, index in second)
  std::vector<std::uint32_t> regions_first;  // region id per keypoint
  std::vector<std::uint32_t> regions_second;
  Matrix<float> prototypes;  // R x C, unit rows
};

/// Deterministic in (config, seed). Throws ContractError if regions < 2 or
/// keypoints < 2 * regions.
SyntheticScenePair generate_synthetic_pair(const SyntheticConfig& config, std::uint64_t seed);

/// Per-keypoint region prototype rows (the noiseless semantics).
Matrix<float> oracle_semantics(const Matrix<float>& prototypes,
                               const std::vector<std::uint32_t>& regions);

}  // namespace semcond
