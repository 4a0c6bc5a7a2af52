// Compiled with -mavx2 (no FMA); selected at runtime only when the CPU reports AVX2.

#include <immintrin.h>

#include "kernels_internal.hpp"

namespace toxscreen::simd::detail {
namespace {

float dot_avx2(const float* a, const float* b, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  const std::size_t n8 = n - n % 8;
  for (std::size_t i = 0; i < n8; i += 8) {
    const __m256 prod = _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    acc = _mm256_add_ps(acc, prod);
  }
  // (s0+s4, s1+s5, s2+s6, s3+s7)
  __m128 quad = _mm_add_ps(_mm256_castps256_ps128(acc), _mm256_extractf128_ps(acc, 1));
  // ((s0+s4)+(s2+s6), (s1+s5)+(s3+s7), ...)
  __m128 pair = _mm_add_ps(quad, _mm_movehl_ps(quad, quad));
  __m128 single = _mm_add_ss(pair, _mm_shuffle_ps(pair, pair, 0x1));
  float total = _mm_cvtss_f32(single);
  for (std::size_t i = n8; i < n; ++i) total += a[i] * b[i];
  return total;
}

double squared_distance_avx2(const float* a, const float* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d da = _mm256_cvtps_pd(_mm_loadu_ps(a + i));
    const __m256d db = _mm256_cvtps_pd(_mm_loadu_ps(b + i));
    const __m256d diff = _mm256_sub_pd(da, db);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
  }
  // (s0+s2, s1+s3)
  __m128d pair = _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
  __m128d single = _mm_add_sd(pair, _mm_unpackhi_pd(pair, pair));
  double total = _mm_cvtsd_f64(single);
  for (std::size_t i = n4; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    total += d * d;
  }
  return total;
}

void axpy_avx2(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  const std::size_t n8 = n - n % 8;
  for (std::size_t i = 0; i < n8; i += 8) {
    const __m256 prod = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
  }
  for (std::size_t i = n8; i < n; ++i) y[i] += alpha * x[i];
}

void accumulate_avx2(const float* x, double* acc, std::size_t n) {
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d v = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), v));
  }
  for (std::size_t i = n4; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

void running_max_avx2(const float* x, float* acc, std::size_t n) {
  const std::size_t n8 = n - n % 8;
  for (std::size_t i = 0; i < n8; i += 8) {
    // max_ps(a, b) yields b unless a > b, matching the scalar select.
    _mm256_storeu_ps(acc + i, _mm256_max_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(acc + i)));
  }
  for (std::size_t i = n8; i < n; ++i) acc[i] = x[i] > acc[i] ? x[i] : acc[i];
}

}  // namespace

const KernelTable avx2_table{dot_avx2, squared_distance_avx2, axpy_avx2, accumulate_avx2,
                             running_max_avx2};

}  // namespace toxscreen::simd::detail
