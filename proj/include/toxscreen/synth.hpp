#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "toxscreen/config.hpp"
#include "toxscreen/corpus.hpp"

namespace toxscreen {

// Synthetic corpus: normal patches lie near a random k-dimensional linear
// subspace; abnormal slides add an off-subspace shift to some of their patches.
struct SynthConfig {
  std::uint64_t n_compounds = 40;
  std::uint64_t animals_per_compound = 10;
  std::uint64_t slides_per_animal = 3;
  std::uint64_t patches_per_slide = 16;
  std::uint64_t dim = 1024;
  std::uint64_t manifold_rank = 32;
  double abnormal_fraction = 0.15;  // share of animals with findings
  double perturbation_scale = 2.0;  // RMS per coordinate of the abnormal shift
  double noise_scale = 0.1;         // iid noise per coordinate
  double abnormal_patch_fraction = 0.5;
  double slide_spread = 1.0;  // std of the per-slide manifold coordinates
  double patch_spread = 0.5;  // std of per-patch jitter around them
  double compound_offset_scale = 0.0;
  // Multipliers of perturbation_scale per category (subcellular .. unspecified).
  std::array<double, kCategoryCount> category_scales{1, 1, 1, 1, 1};
  std::array<double, kCategoryCount> category_weights{1, 1, 1, 1, 1};
  double extra_finding_prob = 0.3;  // chance of a second finding of equal or smaller scale
  std::uint64_t seed = 1;

  void validate() const;
  static SynthConfig from(const KeyValueConfig& kv);
  std::string to_text() const;
};

struct SynthSummary {
  std::size_t slides = 0;
  std::size_t animals = 0;
  std::size_t abnormal_animals = 0;
  std::size_t abnormal_slides = 0;
};

// Writes manifest.csv, diagnoses.csv, taxonomy.csv, synth.cfg and
// embeddings/<slide_id>.emb under `out_dir`.
SynthSummary generate_corpus(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace toxscreen
