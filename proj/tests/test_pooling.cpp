#include <gtest/gtest.h>

#include "test_support.hpp"
#include "toxscreen/error.hpp"
#include "toxscreen/parallel.hpp"
#include "toxscreen/pooling.hpp"
#include "toxscreen/text_io.hpp"

using namespace toxscreen;
using toxscreen::testkit::TempDir;

namespace {

PatchEmbeddingSet patches_of(FloatMatrix m) { return {"s", std::move(m)}; }

}  // namespace

TEST(Pool, SinglePatchIsIdentity) {
  Rng rng(1);
  const FloatMatrix m = testkit::random_matrix(rng, 1, 9);
  for (auto method : {PoolMethod::mean, PoolMethod::max}) {
    EXPECT_EQ(pool(patches_of(m), method).vector, m.values);
  }
}

TEST(Pool, TwoUnitRows) {
  FloatMatrix m(2, 2);
  m.values = {1, 0, 0, 1};
  EXPECT_EQ(pool(patches_of(m), PoolMethod::max).vector, (std::vector<float>{1, 1}));
  EXPECT_EQ(pool(patches_of(m), PoolMethod::mean).vector, (std::vector<float>{0.5f, 0.5f}));
}

TEST(Pool, MatchesNaiveColumnScan) {
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const FloatMatrix m = testkit::random_matrix(rng, 7, 5, 10.0);
    const auto mean = pool(patches_of(m), PoolMethod::mean).vector;
    const auto mx = pool(patches_of(m), PoolMethod::max).vector;
    for (std::size_t c = 0; c < 5; ++c) {
      double sum = 0;
      float best = m.values[c];
      for (std::size_t r = 0; r < 7; ++r) {
        sum += static_cast<double>(m.values[r * 5 + c]);
        best = std::max(best, m.values[r * 5 + c]);
      }
      EXPECT_EQ(mean[c], static_cast<float>(sum / 7.0));
      EXPECT_EQ(mx[c], best);
    }
  }
}

TEST(Pool, EmptySetIsError) {
  PatchEmbeddingSet empty{"s", FloatMatrix(0, 4)};
  EXPECT_THROW(pool(empty, PoolMethod::mean), Error);
}

TEST(Pool, MethodNames) {
  EXPECT_EQ(parse_pool_method("max"), PoolMethod::max);
  EXPECT_EQ(parse_pool_method("mean"), PoolMethod::mean);
  EXPECT_THROW(parse_pool_method("median"), Error);
}

TEST(Pool, SlidesIndependentOfThreadCount) {
  TempDir dir("pool");
  Rng rng(3);
  std::vector<SlideEntry> entries;
  for (int i = 0; i < 13; ++i) {
    const std::string id = "s" + std::to_string(i);
    write_embeddings(dir / (id + ".emb"), testkit::random_matrix(rng, 1 + rng.below(6), 16));
    entries.push_back({id, "A" + std::to_string(i), "C", (dir / (id + ".emb")).string()});
  }
  const auto before = thread_count();
  set_thread_count(1);
  const PooledSet one = pool_slides(entries, PoolMethod::mean);
  set_thread_count(5);
  const PooledSet five = pool_slides(entries, PoolMethod::mean);
  set_thread_count(before);
  EXPECT_EQ(one.vectors, five.vectors);
  EXPECT_EQ(one.slide_ids, five.slide_ids);

  write_pooled(one, dir / "p.emb", default_index_path(dir / "p.emb"));
  EXPECT_TRUE(std::filesystem::exists(dir / "p.csv"));
  const PooledSet back = read_pooled(dir / "p.emb");
  EXPECT_EQ(back.vectors, one.vectors);
  EXPECT_EQ(back.slide_ids, one.slide_ids);
  EXPECT_EQ(back.find("s4"), std::optional<std::size_t>(4));
  EXPECT_FALSE(back.find("zz").has_value());
}

TEST(Pool, DimensionMismatchAcrossSlides) {
  TempDir dir("pool_dim");
  Rng rng(4);
  write_embeddings(dir / "a.emb", testkit::random_matrix(rng, 2, 4));
  write_embeddings(dir / "b.emb", testkit::random_matrix(rng, 2, 5));
  std::vector<SlideEntry> entries{{"a", "A", "C", (dir / "a.emb").string()}, {"b", "B", "C", (dir / "b.emb").string()}};
  EXPECT_THROW(pool_slides(entries, PoolMethod::max), Error);
}

TEST(Pool, IndexMismatchRejected) {
  TempDir dir("pool_idx");
  Rng rng(5);
  PooledSet set{{"a", "b"}, testkit::random_matrix(rng, 2, 3)};
  write_pooled(set, dir / "p.emb", dir / "p.csv");
  write_file(dir / "p.csv", "row,slide_id\n0,a\n");
  EXPECT_THROW(read_pooled(dir / "p.emb"), Error);
}
