#pragma once

// Inner-loop kernels. Every kernel has a portable scalar reference and, on
// x86-64, an AVX2+FMA variant. The active table is chosen once at startup
// from CPUID; SEMCOND_ISA=scalar forces the reference path.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace semcond {

enum class KernelIsa { scalar, avx2 };

template <typename T>
struct KernelTable {
  // sum_i a[i] * b[i]
  T (*dot)(const T* a, const T* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(T alpha, const T* x, T* y, std::size_t n);
  // out[i] = a[i] * b[i]
  void (*multiply)(const T* a, const T* b, T* out, std::size_t n);
  // Index of the first maximum; n must be > 0.
  std::size_t (*argmax)(const T* x, std::size_t n);
  // For each j: if row[j] > best[j] then best[j] = row[j], best_index[j] = row_index.
  void (*column_argmax_update)(const T* row, std::uint32_t row_index, T* best,
                               std::uint32_t* best_index, std::size_t n);
};

bool isa_available(KernelIsa isa) noexcept;
KernelIsa active_isa() noexcept;
std::string_view isa_name(KernelIsa isa) noexcept;

template <typename T>
const KernelTable<T>& kernels_for(KernelIsa isa);

/// Table for the active ISA.
template <typename T>
const KernelTable<T>& kernels();

}  // namespace semcond
