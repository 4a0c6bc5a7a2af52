#pragma once

#include <filesystem>

#include "toxscreen/pipeline.hpp"
#include "toxscreen/synth.hpp"

namespace toxscreen::testkit {

inline SynthConfig small_synth(std::uint64_t seed) {
  SynthConfig c;
  c.n_compounds = 16;
  c.animals_per_compound = 6;
  c.slides_per_animal = 2;
  c.patches_per_slide = 8;
  c.dim = 48;
  c.manifold_rank = 4;
  c.abnormal_fraction = 0.25;
  c.seed = seed;
  return c;
}

// A pipeline sized for unit tests: a small model trained fast.
inline PipelineConfig small_pipeline(const std::filesystem::path& corpus_dir, const std::filesystem::path& out_dir) {
  PipelineConfig c;
  c.manifest = corpus_dir / "manifest.csv";
  c.diagnoses = corpus_dir / "diagnoses.csv";
  c.taxonomy = corpus_dir / "taxonomy.csv";
  c.out_dir = out_dir;
  c.split.trials = 50;
  c.train.epochs = 15;
  c.train.learning_rate = 1e-3;
  c.train.hidden_dim = 32;
  c.train.latent_dim = 8;
  c.train.reduction_ratio = 4;
  c.train.batch_size = 16;
  c.train.sparsity_weight = 1e-3;
  c.tsne.perplexity = 10;
  c.tsne.iterations = 300;
  return c;
}

}  // namespace toxscreen::testkit
