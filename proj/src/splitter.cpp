#include "toxscreen/splitter.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "toxscreen/error.hpp"
#include "toxscreen/parallel.hpp"
#include "toxscreen/rng.hpp"
#include "toxscreen/text_io.hpp"

namespace toxscreen {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct CompoundCounts {
  std::string id;
  std::size_t slides = 0;
  std::size_t abnormal = 0;
};

std::vector<CompoundCounts> count_compounds(std::span<const SlideRecord> records) {
  std::map<std::string, CompoundCounts> by_id;
  for (const auto& r : records) {
    auto& c = by_id[r.compound_id];
    c.id = r.compound_id;
    ++c.slides;
    if (r.abnormal()) ++c.abnormal;
  }
  std::vector<CompoundCounts> out;
  out.reserve(by_id.size());
  for (auto& [id, c] : by_id) out.push_back(std::move(c));
  return out;
}

// Slide totals of one candidate partition.
struct Tally {
  double test = 0, test_abn = 0;
  double val = 0, val_abn = 0;
  double train_normal = 0;
  double all = 0;
};

double share(double abn, double n) { return abn / n; }

double label_terms(double a_val, double a_test, double a_pool) {
  return std::abs(a_val - a_test) + std::abs(a_val - a_pool) + std::abs(a_test - a_pool);
}

double objective_of(const Tally& t, const SplitConfig& cfg) {
  if (t.test == 0 || t.val == 0 || t.train_normal == 0) return kInf;
  const double a_val = share(t.val_abn, t.val);
  const double a_test = share(t.test_abn, t.test);
  const double a_pool = share(t.val_abn + t.test_abn, t.val + t.test);
  const double f_test = t.test / t.all;
  const double f_val = t.val / (t.val + t.train_normal);
  return label_terms(a_val, a_test, a_pool) +
         cfg.size_weight * (std::abs(f_test - cfg.test_fraction) + std::abs(f_val - cfg.val_fraction_of_nontest));
}

// Running objective of the first stage over the compounds placed so far.
// An empty side is +inf, as in the final objective.
double stage_one_objective(double test, double test_abn, double rest, double rest_abn, const SplitConfig& cfg) {
  if (test == 0 || rest == 0) return kInf;
  return std::abs(share(test_abn, test) - share(rest_abn, rest)) +
         cfg.size_weight * std::abs(test / (test + rest) - cfg.test_fraction);
}

// Running objective of the second stage; the test subset is already fixed.
double stage_two_objective(double val, double val_abn, double train_normal, double test, double test_abn,
                           const SplitConfig& cfg) {
  if (val == 0 || train_normal == 0 || test == 0) return kInf;
  return label_terms(share(val_abn, val), share(test_abn, test), share(val_abn + test_abn, val + test)) +
         cfg.size_weight * std::abs(val / (val + train_normal) - cfg.val_fraction_of_nontest);
}

// Picks `first` when strictly better, the other when strictly worse, a coin flip on ties.
bool prefer_first(double first, double second, Rng& rng) {
  if (first < second) return true;
  if (second < first) return false;
  return rng.below(2) == 0;
}

std::vector<Subset> greedy_trial(const std::vector<CompoundCounts>& compounds, const SplitConfig& cfg,
                                 std::uint64_t trial_index) {
  Rng rng(cfg.seed + trial_index);
  std::vector<std::size_t> order(compounds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<Subset> placed(compounds.size(), Subset::train);
  std::vector<bool> in_test(compounds.size(), false);

  double test = 0, test_abn = 0, rest = 0, rest_abn = 0;
  for (std::size_t idx : order) {
    const double n = static_cast<double>(compounds[idx].slides);
    const double a = static_cast<double>(compounds[idx].abnormal);
    const double if_test = stage_one_objective(test + n, test_abn + a, rest, rest_abn, cfg);
    const double if_rest = stage_one_objective(test, test_abn, rest + n, rest_abn + a, cfg);
    if (prefer_first(if_test, if_rest, rng)) {
      in_test[idx] = true;
      placed[idx] = Subset::test;
      test += n;
      test_abn += a;
    } else {
      rest += n;
      rest_abn += a;
    }
  }

  double val = 0, val_abn = 0, train_normal = 0;
  for (std::size_t idx : order) {
    if (in_test[idx]) continue;
    const double n = static_cast<double>(compounds[idx].slides);
    const double a = static_cast<double>(compounds[idx].abnormal);
    const double if_val = stage_two_objective(val + n, val_abn + a, train_normal, test, test_abn, cfg);
    const double if_train = stage_two_objective(val, val_abn, train_normal + (n - a), test, test_abn, cfg);
    if (prefer_first(if_val, if_train, rng)) {
      placed[idx] = Subset::validation;
      val += n;
      val_abn += a;
    } else {
      placed[idx] = Subset::train;
      train_normal += n - a;
    }
  }
  return placed;
}

double objective_of_placement(const std::vector<CompoundCounts>& compounds, const std::vector<Subset>& placed,
                              const SplitConfig& cfg) {
  Tally t;
  for (std::size_t i = 0; i < compounds.size(); ++i) {
    const double n = static_cast<double>(compounds[i].slides);
    const double a = static_cast<double>(compounds[i].abnormal);
    t.all += n;
    switch (placed[i]) {
      case Subset::test: t.test += n; t.test_abn += a; break;
      case Subset::validation: t.val += n; t.val_abn += a; break;
      case Subset::train: t.train_normal += n - a; break;
    }
  }
  return objective_of(t, cfg);
}

}  // namespace

const char* to_string(Subset s) {
  switch (s) {
    case Subset::train: return "train";
    case Subset::validation: return "validation";
    case Subset::test: return "test";
  }
  return "train";
}

Subset parse_subset(std::string_view s) {
  if (s == "train") return Subset::train;
  if (s == "validation" || s == "val") return Subset::validation;
  if (s == "test") return Subset::test;
  fail(ErrorKind::validation, "unknown subset '" + std::string(s) + "'");
}

void SplitConfig::validate() const {
  if (!(test_fraction > 0 && test_fraction < 1)) fail(ErrorKind::validation, "test fraction must lie in (0, 1)");
  if (!(val_fraction_of_nontest > 0 && val_fraction_of_nontest < 1)) {
    fail(ErrorKind::validation, "validation fraction must lie in (0, 1)");
  }
  if (trials < 1) fail(ErrorKind::validation, "trials must be at least 1");
  if (!(size_weight >= 0) || !std::isfinite(size_weight)) fail(ErrorKind::validation, "size weight must be >= 0");
}

SubsetSummary SplitAssignment::summary(Subset s, std::span<const SlideRecord> records) const {
  SubsetSummary out;
  for (const auto& [id, sub] : compounds) {
    if (sub == s) ++out.compounds;
  }
  for (const auto& r : records) {
    const auto it = compounds.find(r.compound_id);
    if (it == compounds.end() || it->second != s) continue;
    if (s == Subset::train && r.abnormal()) {
      ++out.dropped_abnormal;
      continue;
    }
    ++out.slides;
    if (r.abnormal()) ++out.abnormal;
  }
  return out;
}

double split_objective(const std::map<std::string, Subset>& compounds, std::span<const SlideRecord> records,
                       const SplitConfig& cfg) {
  Tally t;
  for (const auto& r : records) {
    const auto it = compounds.find(r.compound_id);
    if (it == compounds.end()) {
      fail(ErrorKind::validation, "compound '" + r.compound_id + "' is not assigned to any subset");
    }
    t.all += 1;
    const double abn = r.abnormal() ? 1 : 0;
    switch (it->second) {
      case Subset::test: t.test += 1; t.test_abn += abn; break;
      case Subset::validation: t.val += 1; t.val_abn += abn; break;
      case Subset::train: t.train_normal += 1 - abn; break;
    }
  }
  return objective_of(t, cfg);
}

double greedy_trial_objective(std::span<const SlideRecord> records, const SplitConfig& cfg,
                              std::uint64_t trial_index) {
  const auto compounds = count_compounds(records);
  return objective_of_placement(compounds, greedy_trial(compounds, cfg, trial_index), cfg);
}

SplitAssignment assignment_from_compounds(std::map<std::string, Subset> compounds,
                                          std::span<const SlideRecord> records, const SplitConfig& cfg) {
  SplitAssignment a;
  a.compounds = std::move(compounds);
  for (const auto& r : records) {
    const auto it = a.compounds.find(r.compound_id);
    if (it == a.compounds.end()) {
      fail(ErrorKind::validation, "compound '" + r.compound_id + "' is not assigned to any subset");
    }
    switch (it->second) {
      case Subset::train:
        if (!r.abnormal()) a.train_slides.push_back(r.slide_id);
        break;
      case Subset::validation: a.validation_slides.push_back(r.slide_id); break;
      case Subset::test: a.test_slides.push_back(r.slide_id); break;
    }
  }
  a.objective_value = split_objective(a.compounds, records, cfg);
  return a;
}

SplitAssignment build_split(std::span<const SlideRecord> records, const SplitConfig& cfg) {
  cfg.validate();
  const auto compounds = count_compounds(records);
  if (compounds.size() < 2) fail(ErrorKind::validation, "splitting needs at least two compounds");
  std::size_t total = 0, normal = 0;
  for (const auto& c : compounds) {
    total += c.slides;
    normal += c.slides - c.abnormal;
  }
  if (normal == 0) fail(ErrorKind::validation, "splitting needs at least one normal slide");

  std::vector<double> objectives(cfg.trials);
  parallel_for(cfg.trials, [&](std::size_t t) {
    objectives[t] = objective_of_placement(compounds, greedy_trial(compounds, cfg, t), cfg);
  });
  std::uint64_t best = 0;
  for (std::uint64_t t = 1; t < cfg.trials; ++t) {
    if (objectives[t] < objectives[best]) best = t;
  }

  const auto placed = greedy_trial(compounds, cfg, best);
  std::map<std::string, Subset> mapping;
  for (std::size_t i = 0; i < compounds.size(); ++i) mapping.emplace(compounds[i].id, placed[i]);
  SplitAssignment a = assignment_from_compounds(std::move(mapping), records, cfg);
  a.trial_index = best;

  if (compounds.size() < 3) a.warnings.push_back("fewer than three compounds; a subset is necessarily empty");
  if (!std::isfinite(a.objective_value)) {
    a.warnings.push_back("best split leaves the train list, validation or test subset empty");
  }
  for (const auto& c : compounds) {
    if (static_cast<double>(c.slides) > cfg.test_fraction * static_cast<double>(total)) {
      a.warnings.push_back("compound '" + c.id + "' alone exceeds the test fraction of slides");
    }
  }
  return a;
}

std::string format_split_csv(const SplitAssignment& a, std::span<const SlideRecord> records,
                             const SplitConfig& cfg) {
  std::ostringstream out;
  out << "# toxscreen split\n";
  out << "# rng=" << Rng::algorithm << " seed=" << cfg.seed << " trials=" << cfg.trials
      << " trial_seed=seed+trial_index\n";
  out << "# test_fraction=" << format_real(cfg.test_fraction)
      << " val_fraction_of_nontest=" << format_real(cfg.val_fraction_of_nontest)
      << " size_weight=" << format_real(cfg.size_weight) << "\n";
  out << "# objective=balance_v1 value=" << format_real(a.objective_value) << " trial_index=" << a.trial_index
      << "\n";
  for (Subset s : {Subset::train, Subset::validation, Subset::test}) {
    const auto sum = a.summary(s, records);
    out << "# " << to_string(s) << ": compounds=" << sum.compounds << " slides=" << sum.slides
        << " abnormal=" << sum.abnormal << " abnormal_share="
        << format_real(sum.slides ? static_cast<double>(sum.abnormal) / static_cast<double>(sum.slides) : 0.0);
    if (s == Subset::train) out << " dropped_abnormal=" << sum.dropped_abnormal;
    out << "\n";
  }
  for (const auto& w : a.warnings) out << "# warning: " << w << "\n";
  out << "compound_id,subset\n";
  for (const auto& [id, sub] : a.compounds) out << csv_escape(id) << "," << to_string(sub) << "\n";
  return out.str();
}

std::map<std::string, Subset> read_split_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  require_columns(table, {"compound_id", "subset"}, path.string());
  std::map<std::string, Subset> out;
  for (const auto& row : table.rows) {
    if (!out.emplace(row[0], parse_subset(row[1])).second) {
      fail(ErrorKind::validation, path.string() + ": compound '" + row[0] + "' listed twice");
    }
  }
  return out;
}

}  // namespace toxscreen
