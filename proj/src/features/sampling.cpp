#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "semcond/features.hpp"

namespace semcond {
namespace {

constexpr double kCubicA = -0.5;

// Catmull-Rom tap weights for taps at offsets -1, 0, 1, 2 from floor(g).
std::array<double, 4> cubic_weights(double t) {
  auto near = [](double x) { return ((kCubicA + 2) * x - (kCubicA + 3)) * x * x + 1; };
  auto far = [](double x) { return ((kCubicA * x - 5 * kCubicA) * x + 8 * kCubicA) * x - 4 * kCubicA; };
  return {far(t + 1), near(t), near(1 - t), far(2 - t)};
}

std::size_t clamp_index(long i, std::size_t n) {
  return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(n) - 1));
}

}  // namespace

void sample_grid(const DenseSemanticMap& map, double gx, double gy, std::span<float> out) {
  const double fx = std::floor(gx);
  const double fy = std::floor(gy);
  const auto wx = cubic_weights(gx - fx);
  const auto wy = cubic_weights(gy - fy);
  const long ix = static_cast<long>(fx);
  const long iy = static_cast<long>(fy);
  std::array<double, 1024> stack_acc;
  std::vector<double> heap_acc;
  double* acc = stack_acc.data();
  if (map.channels > stack_acc.size()) {
    heap_acc.assign(map.channels, 0.0);
    acc = heap_acc.data();
  }
  std::fill(acc, acc + map.channels, 0.0);
  for (int ty = 0; ty < 4; ++ty) {
    const auto row = clamp_index(iy - 1 + ty, map.grid_height);
    for (int tx = 0; tx < 4; ++tx) {
      const double w = wy[ty] * wx[tx];
      if (w == 0.0) continue;
      const auto col = clamp_index(ix - 1 + tx, map.grid_width);
      const auto cell = map.cell(row, col);
      for (std::size_t c = 0; c < map.channels; ++c) acc[c] += w * cell[c];
    }
  }
  for (std::size_t c = 0; c < map.channels; ++c) out[c] = static_cast<float>(acc[c]);
}

RawDescriptors sample_semantic(const DenseSemanticMap& map, const KeypointSet& keypoints) {
  if (map.image_width != keypoints.image_width || map.image_height != keypoints.image_height) {
    throw ContractError("sample_semantic: map is for a " + std::to_string(map.image_width) + "x" +
                        std::to_string(map.image_height) + " image but keypoints are for " +
                        std::to_string(keypoints.image_width) + "x" +
                        std::to_string(keypoints.image_height));
  }
  if (map.grid_width == 0 || map.grid_height == 0 || map.channels == 0) {
    throw ContractError("sample_semantic: empty semantic map");
  }
  RawDescriptors out{Matrix<float>(keypoints.size(), map.channels), DescriptorKind::semantic};
  const double sx = static_cast<double>(map.grid_width) / map.image_width;
  const double sy = static_cast<double>(map.grid_height) / map.image_height;
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    const auto& p = keypoints.points[i];
    const double gx = (static_cast<double>(p.x) + 0.5) * sx - 0.5;
    const double gy = (static_cast<double>(p.y) + 0.5) * sy - 0.5;
    sample_grid(map, gx, gy, out.values.row(i));
  }
  return out;
}

}  // namespace semcond
