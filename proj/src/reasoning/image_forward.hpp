#pragma once

#include <vector>

#include "attention_internal.hpp"

namespace semcond::detail {

/// Full forward state of the layer stack for one image.
template <typename T>
struct ImageForward {
  Matrix<T> anchor_texture;   // projected raw texture (keys on odd layers)
  Matrix<T> anchor_semantic;  // projected raw semantic (keys for the semantic branch)
  std::vector<Matrix<T>> texture_states;   // unnormalized output of each layer
  std::vector<Matrix<T>> semantic_states;
  std::vector<AttentionCache<T>> texture_caches;
  std::vector<AttentionCache<T>> semantic_caches;
  LayerTrace<T> trace;
};

template <typename T>
ImageForward<T> run_image(const Matrix<T>& raw_texture, const Matrix<T>& raw_semantic,
                          const ReasoningWeights<T>& weights, bool keep_caches);

}  // namespace semcond::detail
