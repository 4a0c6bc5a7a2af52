#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toxscreen/corpus.hpp"

namespace toxscreen {

enum class Subset : std::uint8_t { train, validation, test };

const char* to_string(Subset s);
Subset parse_subset(std::string_view s);

struct SplitConfig {
  double test_fraction = 0.25;            // share of all WSIs placed in test
  double val_fraction_of_nontest = 0.37;  // |val| / (|val| + |train list|)
  std::uint64_t trials = 1000;
  std::uint64_t seed = 0;
  double size_weight = 1.0;  // weight of the size terms in the objective

  void validate() const;
};

struct SubsetSummary {
  std::size_t compounds = 0;
  std::size_t slides = 0;  // slides in the subset's slide list
  std::size_t abnormal = 0;
  std::size_t dropped_abnormal = 0;  // train only: abnormal slides excluded from the list
};

struct SplitAssignment {
  std::map<std::string, Subset> compounds;
  std::vector<std::string> train_slides;  // normal slides of train compounds only
  std::vector<std::string> validation_slides;
  std::vector<std::string> test_slides;
  double objective_value = 0.0;
  std::uint64_t trial_index = 0;
  std::vector<std::string> warnings;

  SubsetSummary summary(Subset s, std::span<const SlideRecord> records) const;
};

// Balance objective (lower is better):
//
//   |a_val - a_test| + |a_val - a_pool| + |a_test - a_pool|
//     + w * (|f_test - test_fraction| + |f_val - val_fraction_of_nontest|)
//
// a_X is the abnormal share of subset X; the pool is validation + test (all
// slides not eligible for training). f_test = |test| / |all slides| and
// f_val = |val| / (|val| + |train list|). Any empty subset gives +inf.
double split_objective(const std::map<std::string, Subset>& compounds, std::span<const SlideRecord> records,
                       const SplitConfig& cfg);

// Repeated randomized greedy construction; see README for the procedure.
// Never aborts on an unbalanceable corpus: the best trial is returned and
// `warnings` says why it is poor.
SplitAssignment build_split(std::span<const SlideRecord> records, const SplitConfig& cfg);

// Objective of one greedy trial (exposed for tests of the best-of-trials rule).
double greedy_trial_objective(std::span<const SlideRecord> records, const SplitConfig& cfg,
                              std::uint64_t trial_index);

// Rebuilds slide lists for a compound mapping (abnormal train slides dropped).
SplitAssignment assignment_from_compounds(std::map<std::string, Subset> compounds,
                                          std::span<const SlideRecord> records, const SplitConfig& cfg);

// "compound_id,subset" CSV preceded by '#' header lines carrying the
// configuration, generator, objective and abnormal-share summary.
std::string format_split_csv(const SplitAssignment& a, std::span<const SlideRecord> records, const SplitConfig& cfg);
std::map<std::string, Subset> read_split_csv(const std::filesystem::path& path);

}  // namespace toxscreen
