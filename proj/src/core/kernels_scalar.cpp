#include "kernel_tables.hpp"

namespace semcond::detail {
namespace {

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void multiply(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
std::size_t argmax(const T* x, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

template <typename T>
void column_argmax_update(const T* row, std::uint32_t row_index, T* best,
                          std::uint32_t* best_index, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    if (row[j] > best[j]) {
      best[j] = row[j];
      best_index[j] = row_index;
    }
  }
}

template <typename T>
constexpr KernelTable<T> make_table() {
  return {&dot<T>, &axpy<T>, &multiply<T>, &argmax<T>, &column_argmax_update<T>};
}

constexpr KernelTable<float> kScalarF32 = make_table<float>();
constexpr KernelTable<double> kScalarF64 = make_table<double>();

}  // namespace

const KernelTable<float>& scalar_kernels_f32() { return kScalarF32; }
const KernelTable<double>& scalar_kernels_f64() { return kScalarF64; }

}  // namespace semcond::detail
