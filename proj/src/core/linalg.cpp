#include "semcond/linalg.hpp"

#include <cstdint>
#include <limits>

#include "semcond/kernels.hpp"

namespace semcond {

template <typename T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.cols()) throw ContractError("matmul_nt: inner dimensions differ");
  const auto& k = kernels<T>();
  Matrix<T> c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const T* ai = a.row(i).data();
    T* ci = c.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) ci[j] = k.dot(ai, b.row(j).data(), a.cols());
  }
  return c;
}

template <typename T>
Matrix<T> matmul_nn(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) throw ContractError("matmul_nn: inner dimensions differ");
  const auto& k = kernels<T>();
  Matrix<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T* ci = c.row(i).data();
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const T s = a(i, p);
      if (s != T{0}) k.axpy(s, b.row(p).data(), ci, b.cols());
    }
  }
  return c;
}

template <typename T>
void accumulate_tn(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
    throw ContractError("accumulate_tn: shape mismatch");
  }
  const auto& k = kernels<T>();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const T* br = b.row(r).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const T s = a(r, i);
      if (s != T{0}) k.axpy(s, br, out.row(i).data(), b.cols());
    }
  }
}

template <typename T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b) {
  Matrix<T> c(a.cols(), b.cols());
  accumulate_tn(a, b, c);
  return c;
}

template <typename T>
Matrix<T> hadamard(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractError("hadamard: shape mismatch");
  }
  Matrix<T> c(a.rows(), a.cols());
  kernels<T>().multiply(a.data(), b.data(), c.data(), a.size());
  return c;
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

template <typename T>
Matrix<T> apply_affine(const Matrix<T>& x, const AffineMap<T>& map) {
  if (x.cols() != map.in_dim()) throw ContractError("apply_affine: input dimension mismatch");
  if (map.bias.rows() != 1 || map.bias.cols() != map.out_dim()) {
    throw ContractError("apply_affine: bias shape mismatch");
  }
  Matrix<T> y = matmul_nt(x, map.weight);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto row = y.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += map.bias(0, j);
  }
  return y;
}

template <typename T>
void accumulate_column_sums(const Matrix<T>& a, Matrix<T>& out) {
  if (out.rows() != 1 || out.cols() != a.cols()) {
    throw ContractError("accumulate_column_sums: shape mismatch");
  }
  const auto& k = kernels<T>();
  for (std::size_t i = 0; i < a.rows(); ++i) k.axpy(T{1}, a.row(i).data(), out.data(), a.cols());
}

template <typename T>
std::vector<std::size_t> row_argmax(const Matrix<T>& a) {
  std::vector<std::size_t> out(a.rows(), 0);
  if (a.cols() == 0) return out;
  const auto& k = kernels<T>();
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = k.argmax(a.row(i).data(), a.cols());
  return out;
}

template <typename T>
std::vector<std::size_t> column_argmax(const Matrix<T>& a) {
  std::vector<std::size_t> out(a.cols(), 0);
  if (a.rows() == 0) return out;
  if (a.rows() > std::numeric_limits<std::uint32_t>::max()) {
    throw ContractError("column_argmax: too many rows");
  }
  const auto& k = kernels<T>();
  std::vector<T> best(a.row(0).begin(), a.row(0).end());
  std::vector<std::uint32_t> index(a.cols(), 0);
  for (std::size_t i = 1; i < a.rows(); ++i) {
    k.column_argmax_update(a.row(i).data(), static_cast<std::uint32_t>(i), best.data(),
                           index.data(), a.cols());
  }
  for (std::size_t j = 0; j < a.cols(); ++j) out[j] = index[j];
  return out;
}

#define SEMCOND_INSTANTIATE(T)                                                        \
  template Matrix<T> matmul_nt(const Matrix<T>&, const Matrix<T>&);                   \
  template Matrix<T> matmul_nn(const Matrix<T>&, const Matrix<T>&);                   \
  template Matrix<T> matmul_tn(const Matrix<T>&, const Matrix<T>&);                   \
  template void accumulate_tn(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);        \
  template Matrix<T> hadamard(const Matrix<T>&, const Matrix<T>&);                    \
  template Matrix<T> transpose(const Matrix<T>&);                                     \
  template Matrix<T> apply_affine(const Matrix<T>&, const AffineMap<T>&);             \
  template void accumulate_column_sums(const Matrix<T>&, Matrix<T>&);                 \
  template std::vector<std::size_t> row_argmax(const Matrix<T>&);                     \
  template std::vector<std::size_t> column_argmax(const Matrix<T>&);

SEMCOND_INSTANTIATE(float)
SEMCOND_INSTANTIATE(double)

#undef SEMCOND_INSTANTIATE

}  // namespace semcond
