#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "tsne_oracles.hpp"
#include "toxscreen/error.hpp"
#include "toxscreen/parallel.hpp"
#include "toxscreen/projection.hpp"

using namespace toxscreen;

namespace {

FloatMatrix clustered_points(Rng& rng, std::size_t n, std::size_t dim) {
  FloatMatrix m = testkit::random_matrix(rng, n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 2) {
      for (float& v : m.row(i)) v += 4.0f;
    }
  }
  return m;
}

}  // namespace

TEST(Affinities, RowEntropyMatchesPerplexity) {
  Rng rng(1);
  for (double perplexity : {2.0, 5.0, 12.5, 30.0}) {
    const FloatMatrix m = testkit::random_matrix(rng, 100, 16);
    const auto d = pairwise_squared_distances(m);
    const auto c = conditional_affinities(d, m.rows, perplexity);
    const auto h = testkit::row_entropy_bits(c);
    for (std::size_t i = 0; i < m.rows; ++i) {
      EXPECT_NEAR(h[i], std::log2(perplexity), 1e-4) << "row " << i;
      EXPECT_EQ(c.p[i * m.rows + i], 0.0);
    }
  }
}

TEST(Affinities, JointIsSymmetricAndNormalised) {
  Rng rng(2);
  const FloatMatrix m = testkit::random_matrix(rng, 60, 8);
  const auto p = joint_affinities(conditional_affinities(pairwise_squared_distances(m), 60, 10));
  double sum = 0;
  for (std::size_t i = 0; i < 60; ++i) {
    EXPECT_EQ(p[i * 60 + i], 0.0);
    for (std::size_t j = 0; j < 60; ++j) {
      EXPECT_EQ(p[i * 60 + j], p[j * 60 + i]);
      sum += p[i * 60 + j];
    }
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(KlGradient, MatchesFiniteDifferences) {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const FloatMatrix m = testkit::random_matrix(rng, 6, 5);
    const auto p = joint_affinities(conditional_affinities(pairwise_squared_distances(m), 6, 1.5));
    std::vector<double> y(12);
    for (double& v : y) v = rng.normal();
    const auto check = testkit::check_kl_gradient(p, y, 6, 1e-5, 1e-4);
    EXPECT_TRUE(check.ok) << "worst relative " << check.worst_relative;
  }
}

TEST(Tsne, SquareCornersKeepNeighbours) {
  FloatMatrix square(4, 2);
  square.values = {0, 0, 1, 0, 1, 1, 0, 1};
  TsneConfig cfg;
  cfg.perplexity = 2.2;  // mass mostly on the two adjacent corners
  cfg.enforce_perplexity_rule = false;
  int good = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.seed = seed;
    const auto r = tsne_project(square, cfg);
    bool ok = true;
    for (double v : r.coords) ok &= std::isfinite(v);
    auto dist = [&](int a, int b) { return std::hypot(r.coords[2 * a] - r.coords[2 * b], r.coords[2 * a + 1] - r.coords[2 * b + 1]); };
    for (int i = 0; i < 4; ++i) {
      const int next = (i + 1) % 4, prev = (i + 3) % 4, opposite = (i + 2) % 4;
      ok &= dist(i, next) < dist(i, opposite) && dist(i, prev) < dist(i, opposite);
    }
    good += ok;
  }
  EXPECT_GE(good, 9);
}

TEST(Tsne, KlFiniteAndNonIncreasingInSmallStepRegime) {
  Rng rng(4);
  const FloatMatrix m = clustered_points(rng, 40, 10);
  TsneConfig cfg;
  cfg.perplexity = 8;
  cfg.iterations = 400;
  cfg.learning_rate = 10;
  cfg.initial_momentum = 0;
  cfg.final_momentum = 0;
  cfg.kl_every = 1;
  const auto r = tsne_project(m, cfg);
  ASSERT_EQ(r.kl_trace.size(), 400u);
  for (const auto& [it, kl] : r.kl_trace) EXPECT_TRUE(std::isfinite(kl));
  for (std::size_t k = 300; k < 400; ++k) {
    EXPECT_LE(r.kl_trace[k].second, r.kl_trace[k - 1].second) << "iteration " << r.kl_trace[k].first;
  }
}

TEST(Tsne, DeterministicCentredAndThreadIndependent) {
  Rng rng(5);
  const FloatMatrix m = clustered_points(rng, 30, 6);
  TsneConfig cfg;
  cfg.perplexity = 5;
  cfg.iterations = 300;
  cfg.seed = 9;
  const auto before = thread_count();
  set_thread_count(1);
  const auto a = tsne_project(m, cfg);
  set_thread_count(4);
  const auto b = tsne_project(m, cfg);
  set_thread_count(before);
  EXPECT_EQ(a.coords, b.coords);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < 30; ++i) {
    mx += a.coords[2 * i];
    my += a.coords[2 * i + 1];
  }
  EXPECT_NEAR(mx / 30, 0.0, 1e-9);
  EXPECT_NEAR(my / 30, 0.0, 1e-9);
  cfg.seed = 10;
  EXPECT_NE(tsne_project(m, cfg).coords, a.coords);
}

TEST(Tsne, SeparatesClusters) {
  Rng rng(6);
  const FloatMatrix m = clustered_points(rng, 40, 10);
  TsneConfig cfg;
  cfg.perplexity = 5;
  const auto r = tsne_project(m, cfg);
  // Nearest embedded neighbour of each point comes from its own cluster.
  int same = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    double best = INFINITY;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < 40; ++j) {
      if (j == i) continue;
      const double d = std::hypot(r.coords[2 * i] - r.coords[2 * j], r.coords[2 * i + 1] - r.coords[2 * j + 1]);
      if (d < best) best = d, arg = j;
    }
    same += (arg % 2) == (i % 2);
  }
  EXPECT_GE(same, 38);
}

TEST(Tsne, InfeasiblePerplexityRejectedBeforeIterating) {
  Rng rng(7);
  const FloatMatrix m = testkit::random_matrix(rng, 10, 4);
  TsneConfig cfg;
  cfg.perplexity = 3.0;  // (10 - 1) / 3 = 3 is not strictly above
  EXPECT_THROW(tsne_project(m, cfg), Error);
  cfg.perplexity = 2.9;
  cfg.iterations = 10;
  EXPECT_NO_THROW(tsne_project(m, cfg));
  cfg.iterations = 0;
  EXPECT_THROW(tsne_project(m, cfg), Error);
  EXPECT_THROW(tsne_project(testkit::random_matrix(rng, 3, 4), TsneConfig{}), Error);
}
