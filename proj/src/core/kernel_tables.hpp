#pragma once

#include "semcond/kernels.hpp"

namespace semcond::detail {

const KernelTable<float>& scalar_kernels_f32();
const KernelTable<double>& scalar_kernels_f64();

#ifdef SEMCOND_HAVE_AVX2
const KernelTable<float>& avx2_kernels_f32();
const KernelTable<double>& avx2_kernels_f64();
#endif

}  // namespace semcond::detail
