#pragma once

// Data-parallel inner loops shared by pooling, kNN and the autoencoder.
//
// Every kernel has a scalar reference implementation and, where the CPU
// supports it, an AVX2 variant chosen at runtime. Reductions follow one
// canonical summation order so that both variants return bit-identical
// results:
//
//   dot            8 float partial sums, lane l takes indices i = l (mod 8)
//                  over the largest multiple of 8; lanes are combined as
//                  ((s0+s4)+(s2+s6)) + ((s1+s5)+(s3+s7)); the tail is added
//                  sequentially afterwards.
//   squared_distance
//                  same scheme with 4 double partial sums, combined as
//                  (s0+s2)+(s1+s3), differences taken in double.
//
// Element-wise kernels (axpy, accumulate, running max) have no reduction and
// are exact in either variant.

#include <cstddef>
#include <span>
#include <string_view>

namespace toxscreen::simd {

enum class Backend { scalar, avx2 };

const char* to_string(Backend b);

// Best backend supported by this CPU and build.
Backend detected_backend();

// Backend currently used by the dispatching entry points. Initialised from
// TOXSCREEN_SIMD ("scalar" or "avx2") when set, else detected_backend().
Backend active_backend();

// Select a backend; requesting one the CPU lacks falls back to scalar.
// Returns the backend actually installed.
Backend set_backend(Backend b);

float dot(const float* a, const float* b, std::size_t n);
double squared_distance(const float* a, const float* b, std::size_t n);
// y[i] += alpha * x[i]
void axpy(float alpha, const float* x, float* y, std::size_t n);
// acc[i] += double(x[i])
void accumulate(const float* x, double* acc, std::size_t n);
// acc[i] = max(acc[i], x[i])
void running_max(const float* x, float* acc, std::size_t n);

// Direct access to one variant, used by equivalence tests.
struct KernelTable {
  float (*dot)(const float*, const float*, std::size_t);
  double (*squared_distance)(const float*, const float*, std::size_t);
  void (*axpy)(float, const float*, float*, std::size_t);
  void (*accumulate)(const float*, double*, std::size_t);
  void (*running_max)(const float*, float*, std::size_t);
};

const KernelTable& scalar_kernels();
// nullptr when the build or CPU has no AVX2.
const KernelTable* avx2_kernels();

inline float dot(std::span<const float> a, std::span<const float> b) {
  return dot(a.data(), b.data(), a.size());
}
inline double squared_distance(std::span<const float> a, std::span<const float> b) {
  return squared_distance(a.data(), b.data(), a.size());
}

}  // namespace toxscreen::simd
