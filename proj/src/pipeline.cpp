#include "toxscreen/pipeline.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "toxscreen/error.hpp"
#include "toxscreen/knn.hpp"
#include "toxscreen/text_io.hpp"

namespace toxscreen {

std::string corpus_summary(const Corpus& corpus, const CorpusStats& stats) {
  std::ostringstream out;
  out << "slides: " << stats.slides << "\n";
  out << "animals: " << stats.animals << "\n";
  out << "compounds: " << stats.compounds << "\n";
  out << "abnormal_slides: " << stats.abnormal_slides << "\n";
  out << "patches: " << stats.patches << "\n";
  out << "dim: " << stats.dim << "\n";
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    out << "category." << to_string(kAllCategories[c]) << ": " << stats.category_slides[c] << "\n";
  }
  for (const auto& w : corpus.warnings) out << "warning: " << w << "\n";
  return out.str();
}

std::vector<SlideEntry> subset_entries(const Corpus& corpus, const SplitAssignment& split, Subset subset) {
  const auto& ids = subset == Subset::train        ? split.train_slides
                    : subset == Subset::validation ? split.validation_slides
                                                   : split.test_slides;
  std::unordered_map<std::string, const SlideRecord*> by_id;
  for (const auto& r : corpus.records) by_id.emplace(r.slide_id, &r);
  std::vector<SlideEntry> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) fail(ErrorKind::validation, "split lists unknown slide '" + id + "'");
    const SlideRecord& r = *it->second;
    out.push_back({r.slide_id, r.animal_id, r.compound_id, r.embedding_path});
  }
  return out;
}

void write_labels(const std::filesystem::path& path, std::span<const std::string> slide_ids,
                  std::span<const Label> labels) {
  if (slide_ids.size() != labels.size()) fail(ErrorKind::validation, "labels must be parallel to slide ids");
  std::string text = "slide_id,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) text += csv_escape(slide_ids[i]) + "," + to_string(labels[i]) + "\n";
  write_file(path, text);
}

std::vector<Label> read_labels_for(const std::filesystem::path& path, const PooledSet& set) {
  const CsvTable table = read_csv(path);
  require_columns(table, {"slide_id", "label"}, path.string());
  std::unordered_map<std::string, Label> by_id;
  for (const auto& row : table.rows) {
    Label l;
    if (row[1] == "normal") {
      l = Label::normal;
    } else if (row[1] == "abnormal") {
      l = Label::abnormal;
    } else {
      fail(ErrorKind::format, path.string() + ": label must be normal or abnormal, got '" + row[1] + "'");
    }
    if (!by_id.emplace(row[0], l).second) fail(ErrorKind::validation, path.string() + ": duplicate slide '" + row[0] + "'");
  }
  std::vector<Label> out;
  out.reserve(set.size());
  for (const auto& id : set.slide_ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) fail(ErrorKind::validation, path.string() + ": no label for slide '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

std::map<std::string, std::string> score_provenance(const std::filesystem::path& scores_path) {
  std::map<std::string, std::string> out;
  for (const auto& line : read_csv(scores_path).comments) {
    for (const auto& field : split(trim(line), ' ')) {
      const auto eq = field.find('=');
      if (eq != std::string::npos) out[field.substr(0, eq)] = field.substr(eq + 1);
    }
  }
  return out;
}

ProjectionLabel parse_projection_label(std::string_view s) {
  if (s == "abnormality") return ProjectionLabel::abnormality;
  if (s == "compound") return ProjectionLabel::compound;
  if (s == "scale") return ProjectionLabel::scale;
  if (s == "none") return ProjectionLabel::none;
  fail(ErrorKind::validation, "unknown projection label '" + std::string(s) + "' (abnormality|compound|scale|none)");
}

namespace {

const char* label_name(ProjectionLabel l) {
  switch (l) {
    case ProjectionLabel::abnormality: return "abnormality";
    case ProjectionLabel::compound: return "compound";
    case ProjectionLabel::scale: return "scale";
    case ProjectionLabel::none: return "none";
  }
  return "none";
}

}  // namespace

std::string format_projection_csv(const PooledSet& pooled, const TsneResult& result, const TsneConfig& cfg,
                                  const Corpus* corpus, ProjectionLabel label, std::size_t top_compounds) {
  if (result.n != pooled.size()) fail(ErrorKind::validation, "projection does not match the pooled set");
  if ((label != ProjectionLabel::none || top_compounds > 0) && corpus == nullptr) {
    fail(ErrorKind::validation, "labels and compound filtering need the manifest");
  }
  std::unordered_map<std::string, std::size_t> record_of;
  if (corpus) {
    for (std::size_t i = 0; i < corpus->records.size(); ++i) record_of.emplace(corpus->records[i].slide_id, i);
  }
  auto record = [&](std::size_t row) -> std::size_t {
    const auto it = record_of.find(pooled.slide_ids[row]);
    if (it == record_of.end()) fail(ErrorKind::validation, "slide '" + pooled.slide_ids[row] + "' is not in the manifest");
    return it->second;
  };

  std::unordered_set<std::string> kept_compounds;
  if (top_compounds > 0) {
    std::map<std::string, std::size_t> counts;
    for (std::size_t i = 0; i < pooled.size(); ++i) ++counts[corpus->records[record(i)].compound_id];
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (std::size_t i = 0; i < std::min(top_compounds, ranked.size()); ++i) kept_compounds.insert(ranked[i].first);
  }

  std::ostringstream out;
  out << "# toxscreen t-SNE (exact)\n";
  out << "# perplexity=" << format_real(cfg.perplexity) << " iterations=" << cfg.iterations
      << " learning_rate=" << format_real(cfg.learning_rate) << " exaggeration=" << format_real(cfg.exaggeration)
      << " exaggeration_iterations=" << cfg.exaggeration_iterations << "\n";
  out << "# momentum=" << format_real(cfg.initial_momentum) << "->" << format_real(cfg.final_momentum)
      << " momentum_switch_iteration=" << cfg.momentum_switch_iteration
      << " adaptive_gains=" << (cfg.adaptive_gains ? "true" : "false") << " seed=" << cfg.seed << "\n";
  if (!result.kl_trace.empty()) out << "# final_kl=" << format_real(result.kl_trace.back().second) << "\n";
  out << "# label=" << label_name(label) << " top_compounds=" << top_compounds << "\n";
  out << "slide_id,x,y,label\n";
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    std::string text;
    if (corpus) {
      const SlideRecord& r = corpus->records[record(i)];
      if (top_compounds > 0 && !kept_compounds.contains(r.compound_id)) continue;
      switch (label) {
        case ProjectionLabel::abnormality: text = to_string(r.label); break;
        case ProjectionLabel::compound: text = r.compound_id; break;
        case ProjectionLabel::scale: {
          const auto c = largest_category(corpus->categories[record(i)]);
          text = c ? to_string(*c) : "normal";
          break;
        }
        case ProjectionLabel::none: break;
      }
    }
    out << csv_escape(pooled.slide_ids[i]) << "," << format_real(result.coords[2 * i]) << ","
        << format_real(result.coords[2 * i + 1]) << "," << csv_escape(text) << "\n";
  }
  return out.str();
}

TsneConfig tsne_config_from(const KeyValueConfig& kv) {
  TsneConfig c;
  c.perplexity = kv.get_real("tsne_perplexity", c.perplexity);
  c.iterations = kv.get_u64("tsne_iterations", c.iterations);
  c.learning_rate = kv.get_real("tsne_learning_rate", c.learning_rate);
  c.exaggeration = kv.get_real("tsne_exaggeration", c.exaggeration);
  c.exaggeration_iterations = kv.get_u64("tsne_exaggeration_iterations", c.exaggeration_iterations);
  c.initial_momentum = kv.get_real("tsne_initial_momentum", c.initial_momentum);
  c.final_momentum = kv.get_real("tsne_final_momentum", c.final_momentum);
  c.momentum_switch_iteration = kv.get_u64("tsne_momentum_switch_iteration", c.momentum_switch_iteration);
  c.adaptive_gains = kv.get_bool("tsne_adaptive_gains", c.adaptive_gains);
  c.seed = kv.get_u64("tsne_seed", c.seed);
  return c;
}

SplitConfig split_config_from(const KeyValueConfig& kv) {
  SplitConfig c;
  c.test_fraction = kv.get_real("test_fraction", c.test_fraction);
  c.val_fraction_of_nontest = kv.get_real("val_fraction_of_nontest", c.val_fraction_of_nontest);
  c.trials = kv.get_u64("trials", c.trials);
  c.seed = kv.get_u64("split_seed", c.seed);
  c.size_weight = kv.get_real("size_weight", c.size_weight);
  return c;
}

PipelineConfig PipelineConfig::from(const KeyValueConfig& kv) {
  PipelineConfig c;
  c.split = split_config_from(kv);
  c.pooling = parse_pool_method(kv.get_string("pooling", "mean"));
  c.train = TrainConfig::from(kv);
  c.run_knn = kv.get_bool("run_knn", c.run_knn);
  c.run_projection = kv.get_bool("run_projection", c.run_projection);
  c.tsne = tsne_config_from(kv);
  c.top_compounds = kv.get_u64("top_compounds", c.top_compounds);
  c.projection_label = parse_projection_label(kv.get_string("projection_label", "abnormality"));
  c.strict = kv.get_bool("strict", c.strict);
  return c;
}

void PipelineConfig::validate() const {
  for (const auto* p : {&manifest, &diagnoses, &taxonomy}) {
    if (p->empty() || !std::filesystem::exists(*p)) fail(ErrorKind::io, "input file not found: " + p->string());
  }
  if (out_dir.empty()) fail(ErrorKind::validation, "output directory is required");
  split.validate();
  train.validate();
}

namespace {

template <class F>
auto run_stage(const char* name, std::ostream* log, F&& body) {
  if (log) *log << "[" << name << "]\n";
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(name) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::io, std::string(name) + ": " + e.what());
  }
}

Corpus reload(const PipelineConfig& cfg) {
  return load_corpus(cfg.manifest, cfg.diagnoses, cfg.taxonomy,
                     cfg.strict ? UnknownTermPolicy::strict : UnknownTermPolicy::warn_unspecified);
}

EvalReport evaluate(const std::filesystem::path& scores_path, const Corpus& corpus, Subset subset, const OperatingPoint& op, const std::string& split_id, PoolMethod pooling) {
  const ScoreTable table = read_scores(scores_path);
  const LabeledScores ls = join_labels(table, corpus);
  EvalReport report = confusion_report(ls.scores, ls.labels, op, ls.categories);
  const auto prov = score_provenance(scores_path);
  report.provenance = {to_string(subset), split_id, prov.contains("model_id") ? prov.at("model_id") : "",
                       to_string(pooling), prov.contains("scorer") ? prov.at("scorer") : ""};
  return report;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg, std::ostream* log) {
  cfg.validate();
  const auto dir = cfg.out_dir;
  std::filesystem::create_directories(dir);
  PipelineResult result;

  run_stage("ingest", log, [&] {
    const Corpus corpus = reload(cfg);
    const CorpusStats stats = validate_embeddings(corpus);
    write_file(dir / "ingest.txt", corpus_summary(corpus, stats));
    return 0;
  });

  run_stage("split", log, [&] {
    const Corpus corpus = reload(cfg);
    const SplitAssignment split = build_split(corpus.records, cfg.split);
    write_file(dir / "split.csv", format_split_csv(split, corpus.records, cfg.split));
    return 0;
  });

  // Subset manifests; the training list holds normal slides only.
  run_stage("pool", log, [&] {
    const Corpus corpus = reload(cfg);
    const SplitAssignment split =
        assignment_from_compounds(read_split_csv(dir / "split.csv"), corpus.records, cfg.split);
    for (Subset s : {Subset::train, Subset::validation, Subset::test}) {
      const auto entries = subset_entries(corpus, split, s);
      const std::string name = to_string(s);
      write_manifest(dir / (name + "_manifest.csv"), entries);
    }
    for (Subset s : {Subset::train, Subset::validation, Subset::test}) {
      const std::string name = to_string(s);
      const auto entries = read_manifest(dir / (name + "_manifest.csv"));
      const PooledSet pooled = pool_slides(entries, cfg.pooling);
      write_pooled(pooled, dir / (name + "_pooled.emb"), dir / (name + "_pooled.csv"));
    }
    const PooledSet val = read_pooled(dir / "validation_pooled.emb");
    const LabeledScores ls = join_labels(ScoreTable{val.slide_ids, std::vector<double>(val.size(), 0.0)}, corpus);
    write_labels(dir / "validation_labels.csv", ls.slide_ids, ls.labels);
    return 0;
  });

  run_stage("train", log, [&] {
    const PooledSet train = read_pooled(dir / "train_pooled.emb");
    const PooledSet val = read_pooled(dir / "validation_pooled.emb");
    const auto labels = read_labels_for(dir / "validation_labels.csv", val);
    const TrainResult trained = train_sae(train, val, cfg.train, labels);
    save_checkpoint(dir / "model.sae", trained.model);
    write_file(dir / "trace.csv", format_trace_csv(trained.trace));
    return 0;
  });

  const auto score_with_model = [&](const char* stage, const std::string& subset) {
    run_stage(stage, log, [&] {
      const SaeModel model = load_checkpoint(dir / "model.sae");
      const std::string model_id = fnv1a_hex(read_file(dir / "model.sae"));
      const PooledSet pooled = read_pooled(dir / (subset + "_pooled.emb"));
      write_scores(dir / ("scores_" + subset + ".csv"), score_pooled(model, pooled),
                   {"scorer=sae_mse model_id=" + model_id});
      return 0;
    });
  };
  score_with_model("score-validation", "validation");

  run_stage("fit-operating-point", log, [&] {
    const Corpus corpus = reload(cfg);
    const LabeledScores ls = join_labels(read_scores(dir / "scores_validation.csv"), corpus);
    write_file(dir / "op.json", operating_point_json(youden_threshold(ls.scores, ls.labels)));
    return 0;
  });

  score_with_model("score-test", "test");

  run_stage("eval", log, [&] {
    const Corpus corpus = reload(cfg);
    const std::string split_text = read_file(dir / "split.csv");
    const std::string split_id = fnv1a_hex(split_text);
    const OperatingPoint op = parse_operating_point_json(read_file(dir / "op.json"), (dir / "op.json").string());
    result.validation = evaluate(dir / "scores_validation.csv", corpus, Subset::validation, op, split_id,
                                 cfg.pooling);
    result.test = evaluate(dir / "scores_test.csv", corpus, Subset::test, op, split_id, cfg.pooling);
    write_file(dir / "report_validation.json", report_json(result.validation));
    write_file(dir / "report.json", report_json(result.test));
    return 0;
  });

  if (cfg.run_knn) {
    run_stage("knn", log, [&] {
      const Corpus corpus = reload(cfg);
      const std::string split_id = fnv1a_hex(read_file(dir / "split.csv"));
      const ReferenceSet refs(read_pooled(dir / "train_pooled.emb"));
      const std::string refs_id = fnv1a_hex(read_file(dir / "train_pooled.emb"));
      for (const std::string subset : {"validation", "test"}) {
        write_scores(dir / ("knn_scores_" + subset + ".csv"),
                     knn_score_table(read_pooled(dir / (subset + "_pooled.emb")), refs),
                     {"scorer=knn_l2 model_id=" + refs_id});
      }
      const LabeledScores val = join_labels(read_scores(dir / "knn_scores_validation.csv"), corpus);
      const OperatingPoint op = youden_threshold(val.scores, val.labels);
      write_file(dir / "knn_op.json", operating_point_json(op));
      const OperatingPoint applied =
          parse_operating_point_json(read_file(dir / "knn_op.json"), (dir / "knn_op.json").string());
      result.knn_test =
          evaluate(dir / "knn_scores_test.csv", corpus, Subset::test, applied, split_id, cfg.pooling);
      write_file(dir / "report_knn.json", report_json(*result.knn_test));
      return 0;
    });
  }

  if (cfg.run_projection) {
    run_stage("project", log, [&] {
      const Corpus corpus = reload(cfg);
      // Every slide of the corpus, abnormal training slides included, is projected.
      std::vector<SlideEntry> entries;
      for (const auto& r : corpus.records) entries.push_back({r.slide_id, r.animal_id, r.compound_id, r.embedding_path});
      write_manifest(dir / "projection_manifest.csv", entries);
      const PooledSet pooled = pool_slides(read_manifest(dir / "projection_manifest.csv"), cfg.pooling);
      write_pooled(pooled, dir / "projection_pooled.emb", dir / "projection_pooled.csv");
      const PooledSet reread = read_pooled(dir / "projection_pooled.emb");
      const TsneResult tsne = tsne_project(reread.vectors, cfg.tsne);
      write_file(dir / "tsne.csv",
                 format_projection_csv(reread, tsne, cfg.tsne, &corpus, cfg.projection_label, cfg.top_compounds));
      return 0;
    });
  }
  return result;
}

}  // namespace toxscreen
