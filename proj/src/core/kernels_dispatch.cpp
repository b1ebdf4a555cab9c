#include <cstdlib>
#include <string_view>

#include "kernel_tables.hpp"
#include "semcond/errors.hpp"

namespace semcond {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(SEMCOND_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

KernelIsa detect() noexcept {
  if (const char* forced = std::getenv("SEMCOND_ISA")) {
    if (std::string_view(forced) == "scalar") return KernelIsa::scalar;
  }
  return cpu_has_avx2() ? KernelIsa::avx2 : KernelIsa::scalar;
}

}  // namespace

bool isa_available(KernelIsa isa) noexcept {
  switch (isa) {
    case KernelIsa::scalar:
      return true;
    case KernelIsa::avx2:
      return cpu_has_avx2();
  }
  return false;
}

KernelIsa active_isa() noexcept {
  static const KernelIsa isa = detect();
  return isa;
}

std::string_view isa_name(KernelIsa isa) noexcept {
  return isa == KernelIsa::avx2 ? "avx2" : "scalar";
}

template <>
const KernelTable<float>& kernels_for<float>(KernelIsa isa) {
#ifdef SEMCOND_HAVE_AVX2
  if (isa == KernelIsa::avx2) {
    if (!isa_available(isa)) throw ContractError("AVX2 kernels requested on a CPU without AVX2");
    return detail::avx2_kernels_f32();
  }
#else
  if (isa == KernelIsa::avx2) throw ContractError("AVX2 kernels were not built");
#endif
  return detail::scalar_kernels_f32();
}

template <>
const KernelTable<double>& kernels_for<double>(KernelIsa isa) {
#ifdef SEMCOND_HAVE_AVX2
  if (isa == KernelIsa::avx2) {
    if (!isa_available(isa)) throw ContractError("AVX2 kernels requested on a CPU without AVX2");
    return detail::avx2_kernels_f64();
  }
#else
  if (isa == KernelIsa::avx2) throw ContractError("AVX2 kernels were not built");
#endif
  return detail::scalar_kernels_f64();
}

template <>
const KernelTable<float>& kernels<float>() {
  static const KernelTable<float>& table = kernels_for<float>(active_isa());
  return table;
}

template <>
const KernelTable<double>& kernels<double>() {
  static const KernelTable<double>& table = kernels_for<double>(active_isa());
  return table;
}

}  // namespace semcond
