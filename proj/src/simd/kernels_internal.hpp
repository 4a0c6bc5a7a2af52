#pragma once

#include "toxscreen/simd/kernels.hpp"

namespace toxscreen::simd::detail {

#if defined(TOXSCREEN_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif

}  // namespace toxscreen::simd::detail
