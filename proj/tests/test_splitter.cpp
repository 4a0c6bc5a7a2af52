#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "test_support.hpp"
#include "toxscreen/error.hpp"
#include "toxscreen/parallel.hpp"
#include "toxscreen/splitter.hpp"
#include "toxscreen/text_io.hpp"

using namespace toxscreen;
using toxscreen::testkit::make_records;
using toxscreen::testkit::TempDir;

namespace {

// Second, slide-by-slide implementation of the balance objective.
double naive_objective(const std::map<std::string, Subset>& m, const std::vector<SlideRecord>& records,
                       const SplitConfig& cfg) {
  int n_all = 0, n_test = 0, a_test = 0, n_val = 0, a_val = 0, n_train_list = 0;
  for (const auto& r : records) {
    ++n_all;
    const Subset s = m.at(r.compound_id);
    if (s == Subset::test) {
      ++n_test;
      a_test += r.abnormal();
    } else if (s == Subset::validation) {
      ++n_val;
      a_val += r.abnormal();
    } else if (!r.abnormal()) {
      ++n_train_list;
    }
  }
  if (n_test == 0 || n_val == 0 || n_train_list == 0) return std::numeric_limits<double>::infinity();
  const double pv = double(a_val) / n_val, pt = double(a_test) / n_test, pp = double(a_val + a_test) / (n_val + n_test);
  return std::fabs(pv - pt) + std::fabs(pv - pp) + std::fabs(pt - pp) +
         cfg.size_weight * (std::fabs(double(n_test) / n_all - cfg.test_fraction) +
                            std::fabs(double(n_val) / (n_val + n_train_list) - cfg.val_fraction_of_nontest));
}

std::vector<SlideRecord> random_instance(Rng& rng, std::size_t compounds) {
  std::vector<int> normal, abnormal;
  for (std::size_t c = 0; c < compounds; ++c) {
    normal.push_back(1 + static_cast<int>(rng.below(15)));
    abnormal.push_back(static_cast<int>(rng.below(5)));
  }
  return make_records(normal, abnormal);
}

}  // namespace

TEST(SplitObjective, PerfectBalanceIsZero) {
  // test: 20 slides / 4 abnormal; val: 20 / 4; train: 40 normal.
  const auto records = make_records({16, 16, 40}, {4, 4, 0});
  SplitConfig cfg;
  cfg.test_fraction = 0.25;
  cfg.val_fraction_of_nontest = 20.0 / 60.0;
  const std::map<std::string, Subset> m{{"C0", Subset::test}, {"C1", Subset::validation}, {"C2", Subset::train}};
  EXPECT_EQ(split_objective(m, records, cfg), 0.0);
}

TEST(SplitObjective, WorkedExample) {
  // val 10% abnormal, test 20%, pool 15%, size fractions exact.
  const auto records = make_records({18, 16, 40}, {2, 4, 0});
  SplitConfig cfg;
  cfg.test_fraction = 0.25;
  cfg.val_fraction_of_nontest = 20.0 / 60.0;
  const std::map<std::string, Subset> m{{"C0", Subset::validation}, {"C1", Subset::test}, {"C2", Subset::train}};
  EXPECT_NEAR(split_objective(m, records, cfg), 0.20, 1e-12);
}

TEST(SplitObjective, EmptySubsetIsInfinite) {
  const auto records = make_records({5, 5, 5}, {1, 1, 0});
  const SplitConfig cfg;
  EXPECT_TRUE(std::isinf(split_objective({{"C0", Subset::test}, {"C1", Subset::test}, {"C2", Subset::train}}, records, cfg)));
  EXPECT_TRUE(std::isinf(split_objective({{"C0", Subset::test}, {"C1", Subset::validation}, {"C2", Subset::validation}}, records, cfg)));
  // train compound holding only abnormal slides leaves the train list empty
  const auto all_abn = make_records({5, 5, 0}, {1, 1, 3});
  EXPECT_TRUE(std::isinf(split_objective({{"C0", Subset::test}, {"C1", Subset::validation}, {"C2", Subset::train}}, all_abn, cfg)));
}

TEST(SplitObjective, MatchesSecondImplementation) {
  Rng rng(7);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t nc = 3 + rng.below(5);
    const auto records = random_instance(rng, nc);
    SplitConfig cfg;
    cfg.test_fraction = rng.uniform(0.05, 0.95);
    cfg.val_fraction_of_nontest = rng.uniform(0.05, 0.95);
    cfg.size_weight = rng.uniform(0, 2);
    std::map<std::string, Subset> m;
    for (std::size_t c = 0; c < nc; ++c) m["C" + std::to_string(c)] = static_cast<Subset>(rng.below(3));
    const double got = split_objective(m, records, cfg);
    const double want = naive_objective(m, records, cfg);
    if (std::isinf(want)) {
      EXPECT_TRUE(std::isinf(got));
    } else {
      EXPECT_NEAR(got, want, 1e-12);
    }
  }
}

TEST(BuildSplit, TwoIdenticalCompounds) {
  const auto records = make_records({10, 10}, {2, 2});
  SplitConfig cfg;
  cfg.test_fraction = 0.5;
  cfg.trials = 50;
  const auto a = build_split(records, cfg);
  std::size_t in_test = 0;
  for (const auto& [id, s] : a.compounds) in_test += s == Subset::test;
  EXPECT_EQ(in_test, 1u);
  const auto test = a.summary(Subset::test, records);
  EXPECT_NEAR(double(test.abnormal) / double(test.slides), 2.0 / 12.0, 1e-12);
  EXPECT_FALSE(a.warnings.empty());
}

TEST(BuildSplit, InvariantsOnRandomInstances) {
  Rng rng(8);
  for (int rep = 0; rep < 100; ++rep) {
    const auto records = random_instance(rng, 3 + rng.below(10));
    SplitConfig cfg;
    cfg.trials = 20;
    cfg.seed = rng.next_u64();
    const auto a = build_split(records, cfg);
    std::set<std::string> compounds;
    for (const auto& r : records) compounds.insert(r.compound_id);
    ASSERT_EQ(a.compounds.size(), compounds.size());
    std::map<std::string, const SlideRecord*> by_id;
    for (const auto& r : records) by_id[r.slide_id] = &r;
    for (const auto& id : a.train_slides) {
      EXPECT_FALSE(by_id.at(id)->abnormal());
      EXPECT_EQ(a.compounds.at(by_id.at(id)->compound_id), Subset::train);
    }
    std::size_t listed = a.train_slides.size() + a.validation_slides.size() + a.test_slides.size();
    std::size_t dropped = a.summary(Subset::train, records).dropped_abnormal;
    EXPECT_EQ(listed + dropped, records.size());
    for (const auto& id : a.validation_slides) EXPECT_EQ(a.compounds.at(by_id.at(id)->compound_id), Subset::validation);
    for (const auto& id : a.test_slides) EXPECT_EQ(a.compounds.at(by_id.at(id)->compound_id), Subset::test);
    EXPECT_EQ(a.objective_value, naive_objective(a.compounds, records, cfg));
  }
}

TEST(BuildSplit, BestOfTrialsAndMonotone) {
  Rng rng(9);
  for (int rep = 0; rep < 30; ++rep) {
    const auto records = random_instance(rng, 4 + rng.below(8));
    SplitConfig cfg;
    cfg.seed = rng.next_u64();
    double prev = std::numeric_limits<double>::infinity();
    for (std::uint64_t trials : {1, 2, 5, 10, 40}) {
      cfg.trials = trials;
      const auto a = build_split(records, cfg);
      for (std::uint64_t t = 0; t < trials; ++t) EXPECT_LE(a.objective_value, greedy_trial_objective(records, cfg, t));
      EXPECT_EQ(a.objective_value, greedy_trial_objective(records, cfg, a.trial_index));
      for (std::uint64_t t = 0; t < a.trial_index; ++t) EXPECT_LT(a.objective_value, greedy_trial_objective(records, cfg, t));
      EXPECT_LE(a.objective_value, prev);
      prev = a.objective_value;
    }
  }
}

TEST(BuildSplit, DeterministicAcrossThreadCounts) {
  Rng rng(10);
  const auto records = random_instance(rng, 12);
  SplitConfig cfg;
  cfg.trials = 200;
  cfg.seed = 42;
  const auto before = thread_count();
  set_thread_count(1);
  const auto a = build_split(records, cfg);
  set_thread_count(4);
  const auto b = build_split(records, cfg);
  set_thread_count(before);
  EXPECT_EQ(a.compounds, b.compounds);
  EXPECT_EQ(format_split_csv(a, records, cfg), format_split_csv(b, records, cfg));
}

TEST(BuildSplit, StudyScaleTargets) {
  // 40 compounds with ~15% abnormal slides: the best split lands near the targets.
  Rng rng(11);
  std::vector<int> normal, abnormal;
  for (int c = 0; c < 40; ++c) {
    const int n = 20 + static_cast<int>(rng.below(21));
    const int a = static_cast<int>(std::lround(n * rng.uniform(0.0, 0.3)));
    normal.push_back(n - a);
    abnormal.push_back(a);
  }
  const auto records = make_records(normal, abnormal);
  SplitConfig cfg;
  const auto a = build_split(records, cfg);
  const auto test = a.summary(Subset::test, records);
  const auto val = a.summary(Subset::validation, records);
  const auto train = a.summary(Subset::train, records);
  EXPECT_NEAR(double(test.slides) / double(records.size()), 0.25, 0.03);
  EXPECT_NEAR(double(val.slides) / double(val.slides + train.slides), 0.37, 0.03);
  EXPECT_NEAR(double(test.abnormal) / double(test.slides), double(val.abnormal) / double(val.slides), 0.03);
  EXPECT_EQ(train.abnormal, 0u);
  EXPECT_LT(a.objective_value, 0.1);
}

TEST(BuildSplit, Preconditions) {
  SplitConfig cfg;
  EXPECT_THROW(build_split(make_records({5}, {1}), cfg), Error);
  EXPECT_THROW(build_split(make_records({0, 0, 0}, {2, 2, 2}), cfg), Error);
  cfg.test_fraction = 1.0;
  EXPECT_THROW(build_split(make_records({5, 5, 5}, {1, 1, 1}), cfg), Error);
}

TEST(BuildSplit, OversizedCompoundWarns) {
  const auto records = make_records({100, 5, 5, 5}, {10, 1, 1, 0});
  SplitConfig cfg;
  cfg.trials = 10;
  const auto a = build_split(records, cfg);
  bool warned = false;
  for (const auto& w : a.warnings) warned |= w.find("C0") != std::string::npos;
  EXPECT_TRUE(warned);
}

TEST(SplitCsv, RoundTripAndHeader) {
  TempDir dir("split");
  Rng rng(12);
  const auto records = random_instance(rng, 8);
  SplitConfig cfg;
  cfg.trials = 30;
  const auto a = build_split(records, cfg);
  const std::string text = format_split_csv(a, records, cfg);
  EXPECT_NE(text.find("# rng=mt19937_64 seed=0 trials=30"), std::string::npos);
  EXPECT_NE(text.find("objective=balance_v1"), std::string::npos);
  write_file(dir / "split.csv", text);
  EXPECT_EQ(read_split_csv(dir / "split.csv"), a.compounds);
  EXPECT_EQ(parse_subset("val"), Subset::validation);
}
