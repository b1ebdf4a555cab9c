#pragma once

#include <cstddef>
#include <vector>

#include "semcond/matrix.hpp"

namespace semcond {

/// y = x * weight^T + bias, with weight stored out x in and bias 1 x out.
template <typename T>
struct AffineMap {
  Matrix<T> weight;
  Matrix<T> bias;

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }

  friend bool operator==(const AffineMap&, const AffineMap&) = default;
};

/// a * b^T
template <typename T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b);

/// a * b
template <typename T>
Matrix<T> matmul_nn(const Matrix<T>& a, const Matrix<T>& b);

/// a^T * b
template <typename T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b);

/// out += a^T * b
template <typename T>
void accumulate_tn(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out);

/// Element-wise product.
template <typename T>
Matrix<T> hadamard(const Matrix<T>& a, const Matrix<T>& b);

template <typename T>
Matrix<T> transpose(const Matrix<T>& a);

template <typename T>
Matrix<T> apply_affine(const Matrix<T>& x, const AffineMap<T>& map);

/// out(0, j) += sum_i a(i, j)
template <typename T>
void accumulate_column_sums(const Matrix<T>& a, Matrix<T>& out);

/// First-maximum column per row / row per column (ties go to the smallest index).
template <typename T>
std::vector<std::size_t> row_argmax(const Matrix<T>& a);
template <typename T>
std::vector<std::size_t> column_argmax(const Matrix<T>& a);

}  // namespace semcond
