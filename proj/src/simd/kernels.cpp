#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace toxscreen::simd {
namespace {

float dot_scalar(const float* a, const float* b, std::size_t n) {
  float s[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  const std::size_t n8 = n - n % 8;
  for (std::size_t i = 0; i < n8; i += 8) {
    for (std::size_t l = 0; l < 8; ++l) s[l] += a[i + l] * b[i + l];
  }
  float total = ((s[0] + s[4]) + (s[2] + s[6])) + ((s[1] + s[5]) + (s[3] + s[7]));
  for (std::size_t i = n8; i < n; ++i) total += a[i] * b[i];
  return total;
}

double squared_distance_scalar(const float* a, const float* b, std::size_t n) {
  double s[4] = {0, 0, 0, 0};
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const double d = static_cast<double>(a[i + l]) - static_cast<double>(b[i + l]);
      s[l] += d * d;
    }
  }
  double total = (s[0] + s[2]) + (s[1] + s[3]);
  for (std::size_t i = n4; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    total += d * d;
  }
  return total;
}

void axpy_scalar(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void accumulate_scalar(const float* x, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

void running_max_scalar(const float* x, float* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] = x[i] > acc[i] ? x[i] : acc[i];
}

const KernelTable scalar_table{dot_scalar, squared_distance_scalar, axpy_scalar,
                               accumulate_scalar, running_max_scalar};

bool cpu_has_avx2() {
#if defined(TOXSCREEN_HAVE_AVX2)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* table_for(Backend b) {
#if defined(TOXSCREEN_HAVE_AVX2)
  if (b == Backend::avx2 && cpu_has_avx2()) return &detail::avx2_table;
#endif
  (void)b;
  return &scalar_table;
}

Backend initial_backend() {
  if (const char* env = std::getenv("TOXSCREEN_SIMD")) {
    const std::string_view v(env);
    if (v == "scalar") return Backend::scalar;
    if (v == "avx2" && cpu_has_avx2()) return Backend::avx2;
  }
  return detected_backend();
}

struct Active {
  std::atomic<const KernelTable*> table;
  std::atomic<Backend> backend;
  Active() {
    const Backend b = initial_backend();
    table.store(table_for(b));
    backend.store(table_for(b) == &scalar_table ? Backend::scalar : b);
  }
};

Active& active() {
  static Active a;
  return a;
}

}  // namespace

const char* to_string(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

Backend detected_backend() { return cpu_has_avx2() ? Backend::avx2 : Backend::scalar; }

Backend active_backend() { return active().backend.load(); }

Backend set_backend(Backend b) {
  const KernelTable* t = table_for(b);
  const Backend installed = t == &scalar_table ? Backend::scalar : b;
  active().table.store(t);
  active().backend.store(installed);
  return installed;
}

const KernelTable& scalar_kernels() { return scalar_table; }

const KernelTable* avx2_kernels() {
  const KernelTable* t = table_for(Backend::avx2);
  return t == &scalar_table ? nullptr : t;
}

float dot(const float* a, const float* b, std::size_t n) {
  return active().table.load(std::memory_order_relaxed)->dot(a, b, n);
}

double squared_distance(const float* a, const float* b, std::size_t n) {
  return active().table.load(std::memory_order_relaxed)->squared_distance(a, b, n);
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  active().table.load(std::memory_order_relaxed)->axpy(alpha, x, y, n);
}

void accumulate(const float* x, double* acc, std::size_t n) {
  active().table.load(std::memory_order_relaxed)->accumulate(x, acc, n);
}

void running_max(const float* x, float* acc, std::size_t n) {
  active().table.load(std::memory_order_relaxed)->running_max(x, acc, n);
}

}  // namespace toxscreen::simd
