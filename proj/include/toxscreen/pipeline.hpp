#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toxscreen/config.hpp"
#include "toxscreen/corpus.hpp"
#include "toxscreen/metrics.hpp"
#include "toxscreen/pooling.hpp"
#include "toxscreen/projection.hpp"
#include "toxscreen/sae_train.hpp"
#include "toxscreen/splitter.hpp"

namespace toxscreen {

// ---- building blocks shared by the CLI stages ---------------------------

std::string corpus_summary(const Corpus& corpus, const CorpusStats& stats);

// Manifest rows of the slides listed for a subset (train lists normal slides only).
std::vector<SlideEntry> subset_entries(const Corpus& corpus, const SplitAssignment& split, Subset subset);

// "slide_id,label" with label normal|abnormal.
void write_labels(const std::filesystem::path& path, std::span<const std::string> slide_ids,
                  std::span<const Label> labels);
// Labels for every row of `set`, in row order; throws a validation error on a missing slide.
std::vector<Label> read_labels_for(const std::filesystem::path& path, const PooledSet& set);

// '#' comment lines of a score file, as "key=value" strings.
std::map<std::string, std::string> score_provenance(const std::filesystem::path& scores_path);

enum class ProjectionLabel { abnormality, compound, scale, none };
ProjectionLabel parse_projection_label(std::string_view s);

// "slide_id,x,y,label" with the t-SNE settings in '#' header lines. When
// top_compounds > 0 only slides of the compounds with the most slides in
// `pooled` are emitted (ties broken by compound id).
std::string format_projection_csv(const PooledSet& pooled, const TsneResult& result, const TsneConfig& cfg,
                                  const Corpus* corpus, ProjectionLabel label, std::size_t top_compounds);

TsneConfig tsne_config_from(const KeyValueConfig& kv);
SplitConfig split_config_from(const KeyValueConfig& kv);

// ---- end-to-end driver ----------------------------------------------------

struct PipelineConfig {
  std::filesystem::path manifest;
  std::filesystem::path diagnoses;
  std::filesystem::path taxonomy;
  bool strict = false;
  SplitConfig split;
  PoolMethod pooling = PoolMethod::mean;
  TrainConfig train;
  bool run_knn = true;
  bool run_projection = true;
  TsneConfig tsne;
  std::size_t top_compounds = 0;
  ProjectionLabel projection_label = ProjectionLabel::abnormality;
  std::filesystem::path out_dir;

  // Paths are taken from the command line; everything else from `kv`.
  static PipelineConfig from(const KeyValueConfig& kv);
  void validate() const;
};

struct PipelineResult {
  EvalReport test;
  EvalReport validation;
  std::optional<EvalReport> knn_test;
};

// ingest -> split -> pool -> train -> score(val) -> fit operating point ->
// score(test) -> eval(test) [-> kNN baseline] [-> project]. Every stage reads
// its inputs from the files the previous stage wrote under out_dir. A failing
// stage is reported as "<stage>: <message>" with its original error kind;
// files already written are kept.
PipelineResult run_pipeline(const PipelineConfig& cfg, std::ostream* log = nullptr);

}  // namespace toxscreen
