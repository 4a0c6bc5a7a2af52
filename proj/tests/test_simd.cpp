#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <vector>

#include "toxscreen/rng.hpp"
#include "toxscreen/simd/kernels.hpp"

using namespace toxscreen;

namespace {

std::vector<float> random_vector(Rng& rng, std::size_t n) {
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.uniform(-3, 3));
  return v;
}

// Canonical order spelled out independently of the kernels.
float reference_dot(const std::vector<float>& a, const std::vector<float>& b) {
  float s[8] = {};
  const std::size_t main = a.size() / 8 * 8;
  for (std::size_t i = 0; i < main; ++i) s[i % 8] += a[i] * b[i];
  float total = ((s[0] + s[4]) + (s[2] + s[6])) + ((s[1] + s[5]) + (s[3] + s[7]));
  for (std::size_t i = main; i < a.size(); ++i) total += a[i] * b[i];
  return total;
}

double reference_squared_distance(const std::vector<float>& a, const std::vector<float>& b) {
  double s[4] = {};
  const std::size_t main = a.size() / 4 * 4;
  for (std::size_t i = 0; i < main; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s[i % 4] += d * d;
  }
  double total = (s[0] + s[2]) + (s[1] + s[3]);
  for (std::size_t i = main; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    total += d * d;
  }
  return total;
}

const std::size_t kSizes[] = {0, 1, 3, 4, 7, 8, 9, 15, 16, 17, 31, 64, 100, 1024, 1031};

}  // namespace

TEST(Simd, ScalarMatchesCanonicalOrder) {
  Rng rng(1);
  const auto& k = simd::scalar_kernels();
  for (std::size_t n : kSizes) {
    const auto a = random_vector(rng, n), b = random_vector(rng, n);
    EXPECT_EQ(std::bit_cast<std::uint32_t>(k.dot(a.data(), b.data(), n)),
              std::bit_cast<std::uint32_t>(reference_dot(a, b)))
        << n;
    EXPECT_EQ(k.squared_distance(a.data(), b.data(), n), reference_squared_distance(a, b)) << n;
  }
}

TEST(Simd, Avx2BitIdenticalToScalar) {
  const auto* avx = simd::avx2_kernels();
  if (avx == nullptr) GTEST_SKIP() << "no AVX2 on this machine";
  const auto& sc = simd::scalar_kernels();
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    for (std::size_t n : kSizes) {
      const auto a = random_vector(rng, n), b = random_vector(rng, n);
      EXPECT_EQ(std::bit_cast<std::uint32_t>(sc.dot(a.data(), b.data(), n)),
                std::bit_cast<std::uint32_t>(avx->dot(a.data(), b.data(), n)));
      EXPECT_EQ(std::bit_cast<std::uint64_t>(sc.squared_distance(a.data(), b.data(), n)),
                std::bit_cast<std::uint64_t>(avx->squared_distance(a.data(), b.data(), n)));

      auto y1 = random_vector(rng, n);
      auto y2 = y1;
      sc.axpy(0.37f, a.data(), y1.data(), n);
      avx->axpy(0.37f, a.data(), y2.data(), n);
      EXPECT_EQ(y1, y2);

      std::vector<double> acc1(n, 0.5), acc2(n, 0.5);
      sc.accumulate(a.data(), acc1.data(), n);
      avx->accumulate(a.data(), acc2.data(), n);
      EXPECT_EQ(acc1, acc2);

      auto m1 = b;
      auto m2 = b;
      sc.running_max(a.data(), m1.data(), n);
      avx->running_max(a.data(), m2.data(), n);
      EXPECT_EQ(m1, m2);
    }
  }
}

TEST(Simd, ElementwiseKernelsExact) {
  Rng rng(3);
  const auto& k = simd::scalar_kernels();
  const auto x = random_vector(rng, 13);
  auto y = random_vector(rng, 13);
  const auto y0 = y;
  k.axpy(2.0f, x.data(), y.data(), x.size());
  std::vector<double> acc(13, 0.0);
  k.accumulate(x.data(), acc.data(), x.size());
  auto mx = y0;
  k.running_max(x.data(), mx.data(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(y[i], y0[i] + 2.0f * x[i]);
    EXPECT_EQ(acc[i], static_cast<double>(x[i]));
    EXPECT_EQ(mx[i], std::max(x[i], y0[i]));
  }
}

TEST(Simd, BackendSelection) {
  const auto before = simd::active_backend();
  EXPECT_EQ(simd::set_backend(simd::Backend::scalar), simd::Backend::scalar);
  EXPECT_EQ(simd::active_backend(), simd::Backend::scalar);
  const auto got = simd::set_backend(simd::Backend::avx2);
  EXPECT_EQ(got, simd::avx2_kernels() ? simd::Backend::avx2 : simd::Backend::scalar);
  simd::set_backend(before);
}

TEST(Simd, SquaredDistanceKnownValue) {
  const float a[] = {0, 0}, b[] = {3, 4};
  EXPECT_EQ(simd::squared_distance(a, b, 2), 25.0);
  const float c[] = {1, 2, 3}, d[] = {4, 5, 6};
  EXPECT_EQ(simd::dot(c, d, 3), 32.0f);
}
