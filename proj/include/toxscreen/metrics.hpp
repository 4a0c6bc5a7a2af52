#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toxscreen/corpus.hpp"
#include "toxscreen/scores.hpp"

namespace toxscreen {

// Decision rule: score >= threshold  =>  predicted abnormal.
struct OperatingPoint {
  double threshold = 0;
  double j = 0;  // sensitivity + specificity - 1 at the threshold (on the fitting set)
  double sensitivity = 0;
  double specificity = 0;
};

// Mann-Whitney AUC: (#(abnormal > normal) + 0.5 #ties) / (n_abnormal n_normal),
// from sorted rank sums in O(n log n). Throws a validation error unless both
// classes are present.
double auc(std::span<const double> scores, std::span<const Label> labels);

// Maximises J over the thresholds {-inf, midpoints of adjacent distinct
// scores, +inf}. Ties go to higher specificity, then to the lower threshold.
OperatingPoint youden_threshold(std::span<const double> scores, std::span<const Label> labels);

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion_at(std::span<const double> scores, std::span<const Label> labels, double threshold);

struct CategorySensitivity {
  ScaleCategory category = ScaleCategory::unspecified;
  std::size_t samples = 0;   // abnormal slides whose category set contains the category
  std::size_t detected = 0;  // ... of which predicted abnormal
  std::optional<double> sensitivity;
};

struct Provenance {
  std::string subset;
  std::string split_id;
  std::string model_id;
  std::string pooling;
  std::string scorer;
};

struct EvalReport {
  std::size_t n = 0;
  std::size_t n_abnormal = 0;
  std::optional<double> auc;
  OperatingPoint operating_point;
  ConfusionCounts counts;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> ppv;
  std::optional<double> npv;
  std::array<CategorySensitivity, kCategoryCount> by_category{};
  Provenance provenance;
};

// Applies a fixed, externally chosen operating point. `categories` is
// parallel to `scores`; a slide counts toward every category it carries.
// Zero denominators leave the metric absent.
EvalReport confusion_report(std::span<const double> scores, std::span<const Label> labels,
                            const OperatingPoint& op, std::span<const CategorySet> categories);

struct PredictiveValues {
  double ppv = 0;
  double npv = 0;
};

// Bayes identities: PPV = s p / (s p + (1 - c)(1 - p)), NPV = c (1 - p) / (c (1 - p) + (1 - s) p).
PredictiveValues predictive_values(double sensitivity, double specificity, double prevalence);

// Scores joined to slide labels and categories, in score-table order.
struct LabeledScores {
  std::vector<std::string> slide_ids;
  std::vector<double> scores;
  std::vector<Label> labels;
  std::vector<CategorySet> categories;
};

// Throws a validation error for a score whose slide is not in `corpus`.
LabeledScores join_labels(const ScoreTable& table, const Corpus& corpus);

std::string operating_point_json(const OperatingPoint& op);
OperatingPoint parse_operating_point_json(std::string_view text, std::string_view source_name);
std::string report_json(const EvalReport& report);

}  // namespace toxscreen
