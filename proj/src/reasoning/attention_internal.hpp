#pragma once

#include <vector>

#include "semcond/reasoning.hpp"

namespace semcond::detail {

/// Intermediates of one attention layer needed by the backward pass.
template <typename T>
struct AttentionCache {
  Matrix<T> input;
  Matrix<T> query;
  Matrix<T> key;
  Matrix<T> value;
  std::vector<Matrix<T>> probs;  // per head, N x N row-stochastic
  Matrix<T> context;             // concatenated heads
  Matrix<T> joined;              // [input | message]
  Matrix<T> normalized;          // layer-norm output before gain/bias
  std::vector<T> inv_std;
  Matrix<T> pre_activation;
  Matrix<T> activated;
};

template <typename T>
Matrix<T> attention_forward(const Matrix<T>& keys_source, const Matrix<T>& x,
                            const AttentionLayerParams<T>& params, std::size_t heads,
                            AttentionCache<T>* cache);

/// Returns d(loss)/d(input). Parameter gradients are added to `grad` and the
/// keys-source gradient to `grad_keys`.
template <typename T>
Matrix<T> attention_backward(const Matrix<T>& keys_source, const AttentionLayerParams<T>& params,
                             std::size_t heads, const AttentionCache<T>& cache,
                             const Matrix<T>& grad_out, AttentionLayerParams<T>& grad,
                             Matrix<T>& grad_keys);

/// Row-wise L2 normalization backward: returns d/dx given y = x / max(|x|, eps).
template <typename T>
Matrix<T> l2_normalize_backward(const Matrix<T>& x, const Matrix<T>& y, const Matrix<T>& grad_y);

}  // namespace semcond::detail
