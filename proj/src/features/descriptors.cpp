#include <algorithm>
#include <cmath>
#include <numeric>

#include "semcond/features.hpp"

namespace semcond {

Matrix<float> project_raw(const RawDescriptors& raw, const AffineMap<float>& projection) {
  if (raw.values.cols() != projection.in_dim()) {
    throw ContractError("project_raw: descriptors have " + std::to_string(raw.values.cols()) +
                        " columns, projection expects " + std::to_string(projection.in_dim()));
  }
  return apply_affine(raw.values, projection);
}

template <typename T>
Matrix<T> l2_normalize(const Matrix<T>& rows) {
  constexpr double kEps = 1e-12;
  Matrix<T> out = rows;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    double sq = 0;
    for (T v : r) sq += static_cast<double>(v) * v;
    const double norm = std::max(std::sqrt(sq), kEps);
    for (auto& v : r) v = static_cast<T>(v / norm);
  }
  return out;
}

template Matrix<float> l2_normalize(const Matrix<float>&);
template Matrix<double> l2_normalize(const Matrix<double>&);

ImageFeatures select_top_keypoints(const ImageFeatures& features, std::size_t max_keypoints) {
  const auto n = features.keypoints.size();
  if (n <= max_keypoints) return features;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& scores = features.keypoints.scores;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(max_keypoints);
  std::sort(order.begin(), order.end());

  ImageFeatures out;
  out.semantic_map = features.semantic_map;
  out.keypoints.image_width = features.keypoints.image_width;
  out.keypoints.image_height = features.keypoints.image_height;
  out.texture.kind = features.texture.kind;
  out.texture.values = Matrix<float>(max_keypoints, features.texture.values.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    out.keypoints.points.push_back(features.keypoints.points[order[k]]);
    out.keypoints.scores.push_back(scores[order[k]]);
    std::ranges::copy(features.texture.values.row(order[k]), out.texture.values.row(k).begin());
  }
  return out;
}

}  // namespace semcond
