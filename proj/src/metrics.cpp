#include "toxscreen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "json.hpp"
#include "toxscreen/error.hpp"
#include "toxscreen/text_io.hpp"

namespace toxscreen {
namespace {

using ordered_json = nlohmann::ordered_json;

void check_inputs(std::span<const double> scores, std::span<const Label> labels, const char* what) {
  if (scores.size() != labels.size()) fail(ErrorKind::validation, std::string(what) + ": scores and labels differ in length");
  std::size_t abn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) fail(ErrorKind::data, std::string(what) + ": non-finite score");
    if (labels[i] == Label::abnormal) ++abn;
  }
  if (abn == 0 || abn == scores.size()) {
    fail(ErrorKind::validation, std::string(what) + " is undefined unless both normal and abnormal slides are present");
  }
}

std::vector<std::size_t> sorted_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

ordered_json optional_number(const std::optional<double>& v) {
  if (!v) return "n/a";
  return *v;
}

ordered_json threshold_json(double t) {
  if (std::isfinite(t)) return t;
  return format_real(t);
}

}  // namespace

double auc(std::span<const double> scores, std::span<const Label> labels) {
  check_inputs(scores, labels, "AUC");
  const auto order = sorted_order(scores);
  // Twice the rank sum of the abnormal class, kept in integers so tie halves are exact.
  std::int64_t twice_rank_sum = 0;
  std::int64_t n_abn = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const std::int64_t twice_mean_rank = static_cast<std::int64_t>(i + 1 + j);  // ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == Label::abnormal) {
        twice_rank_sum += twice_mean_rank;
        ++n_abn;
      }
    }
    i = j;
  }
  const std::int64_t n_norm = static_cast<std::int64_t>(scores.size()) - n_abn;
  const std::int64_t twice_u = twice_rank_sum - n_abn * (n_abn + 1);
  return static_cast<double>(twice_u) / static_cast<double>(2 * n_abn * n_norm);
}

OperatingPoint youden_threshold(std::span<const double> scores, std::span<const Label> labels) {
  check_inputs(scores, labels, "Youden threshold");
  const auto order = sorted_order(scores);
  std::size_t pos = 0;
  for (Label l : labels) pos += l == Label::abnormal;
  const std::size_t neg = labels.size() - pos;
  const double p = static_cast<double>(pos), n = static_cast<double>(neg);

  // Walk thresholds upward; `below_*` count slides predicted normal.
  std::size_t below_abn = 0, below_norm = 0;
  auto evaluate = [&](double threshold) {
    const std::size_t tp = pos - below_abn;
    const std::size_t tn = below_norm;
    const double sens = static_cast<double>(tp) / p;
    const double spec = static_cast<double>(tn) / n;
    return OperatingPoint{threshold, sens + spec - 1.0, sens, spec};
  };

  OperatingPoint best = evaluate(-std::numeric_limits<double>::infinity());
  auto consider = [&](const OperatingPoint& cand) {
    if (cand.j > best.j || (cand.j == best.j && cand.specificity > best.specificity)) best = cand;
  };

  for (std::size_t i = 0; i < order.size();) {
    const double value = scores[order[i]];
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == value) {
      if (labels[order[j]] == Label::abnormal) ++below_abn; else ++below_norm;
      ++j;
    }
    if (j < order.size()) {
      const double next = scores[order[j]];
      double mid = value + (next - value) / 2;
      if (!(mid > value)) mid = next;
      consider(evaluate(mid));
    } else {
      consider(evaluate(std::numeric_limits<double>::infinity()));
    }
    i = j;
  }
  return best;
}

ConfusionCounts confusion_at(std::span<const double> scores, std::span<const Label> labels, double threshold) {
  if (scores.size() != labels.size()) fail(ErrorKind::validation, "scores and labels differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == Label::abnormal) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

EvalReport confusion_report(std::span<const double> scores, std::span<const Label> labels,
                            const OperatingPoint& op, std::span<const CategorySet> categories) {
  if (categories.size() != scores.size()) fail(ErrorKind::validation, "categories must be parallel to scores");
  EvalReport r;
  r.n = scores.size();
  r.operating_point = op;
  r.counts = confusion_at(scores, labels, op.threshold);
  r.n_abnormal = r.counts.tp + r.counts.fn;
  if (r.n_abnormal > 0 && r.n_abnormal < r.n) r.auc = auc(scores, labels);

  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.sensitivity = ratio(r.counts.tp, r.counts.tp + r.counts.fn);
  r.specificity = ratio(r.counts.tn, r.counts.tn + r.counts.fp);
  r.ppv = ratio(r.counts.tp, r.counts.tp + r.counts.fp);
  r.npv = ratio(r.counts.tn, r.counts.tn + r.counts.fn);

  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    CategorySensitivity& cs = r.by_category[c];
    cs.category = kAllCategories[c];
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (labels[i] != Label::abnormal || !categories[i].test(c)) continue;
      ++cs.samples;
      if (scores[i] >= op.threshold) ++cs.detected;
    }
    cs.sensitivity = ratio(cs.detected, cs.samples);
  }
  return r;
}

PredictiveValues predictive_values(double sensitivity, double specificity, double prevalence) {
  const double tp = sensitivity * prevalence;
  const double fp = (1 - specificity) * (1 - prevalence);
  const double tn = specificity * (1 - prevalence);
  const double fn = (1 - sensitivity) * prevalence;
  return {tp / (tp + fp), tn / (tn + fn)};
}

LabeledScores join_labels(const ScoreTable& table, const Corpus& corpus) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) index.emplace(corpus.records[i].slide_id, i);
  LabeledScores out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto it = index.find(table.slide_ids[i]);
    if (it == index.end()) fail(ErrorKind::validation, "scored slide '" + table.slide_ids[i] + "' is not in the manifest");
    out.slide_ids.push_back(table.slide_ids[i]);
    out.scores.push_back(table.scores[i]);
    out.labels.push_back(corpus.records[it->second].label);
    out.categories.push_back(corpus.categories[it->second]);
  }
  return out;
}

std::string operating_point_json(const OperatingPoint& op) {
  ordered_json j;
  j["convention"] = "score >= threshold => abnormal";
  j["threshold"] = threshold_json(op.threshold);
  j["youden_j"] = op.j;
  j["sensitivity"] = op.sensitivity;
  j["specificity"] = op.specificity;
  return j.dump(2) + "\n";
}

OperatingPoint parse_operating_point_json(std::string_view text, std::string_view source_name) {
  const std::string src(source_name);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, src + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("threshold")) fail(ErrorKind::format, src + ": missing 'threshold'");
  OperatingPoint op;
  const auto& t = j["threshold"];
  if (t.is_number()) {
    op.threshold = t.get<double>();
  } else if (t.is_string()) {
    op.threshold = parse_real(t.get<std::string>(), "threshold");
  } else {
    fail(ErrorKind::format, src + ": 'threshold' must be a number or \"inf\"/\"-inf\"");
  }
  auto number = [&](const char* key) {
    return j.contains(key) && j[key].is_number() ? j[key].get<double>() : 0.0;
  };
  op.j = number("youden_j");
  op.sensitivity = number("sensitivity");
  op.specificity = number("specificity");
  return op;
}

std::string report_json(const EvalReport& r) {
  ordered_json j;
  j["subset"] = r.provenance.subset;
  j["n"] = r.n;
  j["n_abnormal"] = r.n_abnormal;
  j["auc"] = optional_number(r.auc);
  j["operating_point"] = {{"threshold", threshold_json(r.operating_point.threshold)},
                          {"convention", "score >= threshold => abnormal"}};
  j["sensitivity"] = optional_number(r.sensitivity);
  j["specificity"] = optional_number(r.specificity);
  j["ppv"] = optional_number(r.ppv);
  j["npv"] = optional_number(r.npv);
  j["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn}, {"fn", r.counts.fn}};
  ordered_json cats = ordered_json::array();
  for (const auto& c : r.by_category) {
    cats.push_back({{"category", to_string(c.category)},
                    {"samples", c.samples},
                    {"detected", c.detected},
                    {"sensitivity", optional_number(c.sensitivity)}});
  }
  j["sensitivity_by_scale"] = cats;
  j["provenance"] = {{"split_id", r.provenance.split_id},
                     {"model_id", r.provenance.model_id},
                     {"pooling", r.provenance.pooling},
                     {"scorer", r.provenance.scorer}};
  return j.dump(2) + "\n";
}

}  // namespace toxscreen
