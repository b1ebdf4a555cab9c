// Compiled with -mavx2 -mfma. Only reached after a CPUID check, so nothing in
// this translation unit may be inlined into generic code: keep it to raw
// pointers and intrinsics.
#include <immintrin.h>

#include "kernel_tables.hpp"

namespace semcond::detail {
namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d high64 = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
}

float dot_f32(const float* a, const float* b, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
  }
  float acc = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_f32(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_f64(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void multiply_f32(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void multiply_f64(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

// Per-lane running maximum with strict comparison keeps the smallest index
// within each lane; the final reduction picks the smallest index among lanes
// that reached the global maximum.
std::size_t argmax_f32(const float* x, std::size_t n) {
  if (n < 8) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (x[i] > x[best]) best = i;
    }
    return best;
  }
  __m256 best = _mm256_loadu_ps(x);
  __m256i best_idx = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
  __m256i idx = best_idx;
  const __m256i step = _mm256_set1_epi32(8);
  std::size_t i = 8;
  for (; i + 8 <= n; i += 8) {
    idx = _mm256_add_epi32(idx, step);
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256 gt = _mm256_cmp_ps(v, best, _CMP_GT_OQ);
    best = _mm256_blendv_ps(best, v, gt);
    best_idx = _mm256_blendv_epi8(best_idx, idx, _mm256_castps_si256(gt));
  }
  alignas(32) float lane_val[8];
  alignas(32) std::int32_t lane_idx[8];
  _mm256_store_ps(lane_val, best);
  _mm256_store_si256(reinterpret_cast<__m256i*>(lane_idx), best_idx);
  float value = lane_val[0];
  std::size_t index = static_cast<std::size_t>(lane_idx[0]);
  for (int l = 1; l < 8; ++l) {
    const auto li = static_cast<std::size_t>(lane_idx[l]);
    if (lane_val[l] > value || (lane_val[l] == value && li < index)) {
      value = lane_val[l];
      index = li;
    }
  }
  for (; i < n; ++i) {
    if (x[i] > value) {
      value = x[i];
      index = i;
    }
  }
  return index;
}

std::size_t argmax_f64(const double* x, std::size_t n) {
  if (n < 4) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (x[i] > x[best]) best = i;
    }
    return best;
  }
  __m256d best = _mm256_loadu_pd(x);
  __m256i best_idx = _mm256_setr_epi64x(0, 1, 2, 3);
  __m256i idx = best_idx;
  const __m256i step = _mm256_set1_epi64x(4);
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) {
    idx = _mm256_add_epi64(idx, step);
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d gt = _mm256_cmp_pd(v, best, _CMP_GT_OQ);
    best = _mm256_blendv_pd(best, v, gt);
    best_idx = _mm256_castpd_si256(
        _mm256_blendv_pd(_mm256_castsi256_pd(best_idx), _mm256_castsi256_pd(idx), gt));
  }
  alignas(32) double lane_val[4];
  alignas(32) std::int64_t lane_idx[4];
  _mm256_store_pd(lane_val, best);
  _mm256_store_si256(reinterpret_cast<__m256i*>(lane_idx), best_idx);
  double value = lane_val[0];
  std::size_t index = static_cast<std::size_t>(lane_idx[0]);
  for (int l = 1; l < 4; ++l) {
    const auto li = static_cast<std::size_t>(lane_idx[l]);
    if (lane_val[l] > value || (lane_val[l] == value && li < index)) {
      value = lane_val[l];
      index = li;
    }
  }
  for (; i < n; ++i) {
    if (x[i] > value) {
      value = x[i];
      index = i;
    }
  }
  return index;
}

void column_argmax_update_f32(const float* row, std::uint32_t row_index, float* best,
                              std::uint32_t* best_index, std::size_t n) {
  const __m256i vrow = _mm256_set1_epi32(static_cast<int>(row_index));
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    const __m256 v = _mm256_loadu_ps(row + j);
    const __m256 b = _mm256_loadu_ps(best + j);
    const __m256 gt = _mm256_cmp_ps(v, b, _CMP_GT_OQ);
    _mm256_storeu_ps(best + j, _mm256_blendv_ps(b, v, gt));
    auto* idx_ptr = reinterpret_cast<__m256i*>(best_index + j);
    const __m256i bi = _mm256_loadu_si256(idx_ptr);
    _mm256_storeu_si256(idx_ptr, _mm256_blendv_epi8(bi, vrow, _mm256_castps_si256(gt)));
  }
  for (; j < n; ++j) {
    if (row[j] > best[j]) {
      best[j] = row[j];
      best_index[j] = row_index;
    }
  }
}

void column_argmax_update_f64(const double* row, std::uint32_t row_index, double* best,
                              std::uint32_t* best_index, std::size_t n) {
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d v = _mm256_loadu_pd(row + j);
    const __m256d b = _mm256_loadu_pd(best + j);
    const __m256d gt = _mm256_cmp_pd(v, b, _CMP_GT_OQ);
    _mm256_storeu_pd(best + j, _mm256_blendv_pd(b, v, gt));
    int mask = _mm256_movemask_pd(gt);
    while (mask != 0) {
      const int lane = __builtin_ctz(static_cast<unsigned>(mask));
      best_index[j + static_cast<std::size_t>(lane)] = row_index;
      mask &= mask - 1;
    }
  }
  for (; j < n; ++j) {
    if (row[j] > best[j]) {
      best[j] = row[j];
      best_index[j] = row_index;
    }
  }
}

constexpr KernelTable<float> kAvx2F32{&dot_f32, &axpy_f32, &multiply_f32, &argmax_f32,
                                      &column_argmax_update_f32};
constexpr KernelTable<double> kAvx2F64{&dot_f64, &axpy_f64, &multiply_f64, &argmax_f64,
                                       &column_argmax_update_f64};

}  // namespace

const KernelTable<float>& avx2_kernels_f32() { return kAvx2F32; }
const KernelTable<double>& avx2_kernels_f64() { return kAvx2F64; }

}  // namespace semcond::detail
