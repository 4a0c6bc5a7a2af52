#include "toxscreen/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "toxscreen/error.hpp"
#include "toxscreen/rng.hpp"
#include "toxscreen/text_io.hpp"

namespace toxscreen {
namespace {

std::string padded(std::uint64_t value, std::uint64_t count) {
  const int width = static_cast<int>(std::to_string(count).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*llu", width, static_cast<unsigned long long>(value));
  return buf;
}

std::size_t weighted_pick(Rng& rng, std::span<const double> weights) {
  double total = 0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  for (std::size_t i = weights.size(); i > 0; --i) {
    if (weights[i - 1] > 0) return i - 1;
  }
  return 0;
}

// Orthonormal basis (columns of a d x k row-major matrix) of span(A).
std::vector<double> orthonormal_basis(const std::vector<double>& a, std::size_t d, std::size_t k) {
  std::vector<double> q = a;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t prev = 0; prev < c; ++prev) {
      double proj = 0;
      for (std::size_t r = 0; r < d; ++r) proj += q[r * k + prev] * q[r * k + c];
      for (std::size_t r = 0; r < d; ++r) q[r * k + c] -= proj * q[r * k + prev];
    }
    double norm = 0;
    for (std::size_t r = 0; r < d; ++r) norm += q[r * k + c] * q[r * k + c];
    norm = std::sqrt(norm);
    if (norm < 1e-12) fail(ErrorKind::numeric, "degenerate manifold map");
    for (std::size_t r = 0; r < d; ++r) q[r * k + c] /= norm;
  }
  return q;
}

}  // namespace

void SynthConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) fail(ErrorKind::validation, "synth: " + msg);
  };
  check(n_compounds >= 1 && animals_per_compound >= 1 && slides_per_animal >= 1 && patches_per_slide >= 1,
        "counts must be positive");
  check(dim >= 1, "dim must be positive");
  check(manifold_rank >= 1 && manifold_rank <= dim, "manifold_rank must be in [1, dim]");
  check(abnormal_fraction >= 0 && abnormal_fraction <= 1, "abnormal_fraction must be in [0, 1]");
  check(abnormal_patch_fraction >= 0 && abnormal_patch_fraction <= 1, "abnormal_patch_fraction must be in [0, 1]");
  check(extra_finding_prob >= 0 && extra_finding_prob <= 1, "extra_finding_prob must be in [0, 1]");
  check(perturbation_scale >= 0 && noise_scale >= 0 && slide_spread >= 0 && patch_spread >= 0 &&
            compound_offset_scale >= 0,
        "scales must be non-negative");
  double weight_total = 0;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    check(category_scales[c] >= 0 && std::isfinite(category_scales[c]), "category_scales must be non-negative");
    check(category_weights[c] >= 0 && std::isfinite(category_weights[c]), "category_weights must be non-negative");
    weight_total += category_weights[c];
  }
  check(weight_total > 0, "category_weights must not all be zero");
}

SynthConfig SynthConfig::from(const KeyValueConfig& kv) {
  SynthConfig c;
  c.n_compounds = kv.get_u64("n_compounds", c.n_compounds);
  c.animals_per_compound = kv.get_u64("animals_per_compound", c.animals_per_compound);
  c.slides_per_animal = kv.get_u64("slides_per_animal", c.slides_per_animal);
  c.patches_per_slide = kv.get_u64("patches_per_slide", c.patches_per_slide);
  c.dim = kv.get_u64("dim", c.dim);
  c.manifold_rank = kv.get_u64("manifold_rank", c.manifold_rank);
  c.abnormal_fraction = kv.get_real("abnormal_fraction", c.abnormal_fraction);
  c.perturbation_scale = kv.get_real("perturbation_scale", c.perturbation_scale);
  c.noise_scale = kv.get_real("noise_scale", c.noise_scale);
  c.abnormal_patch_fraction = kv.get_real("abnormal_patch_fraction", c.abnormal_patch_fraction);
  c.slide_spread = kv.get_real("slide_spread", c.slide_spread);
  c.patch_spread = kv.get_real("patch_spread", c.patch_spread);
  c.compound_offset_scale = kv.get_real("compound_offset_scale", c.compound_offset_scale);
  c.extra_finding_prob = kv.get_real("extra_finding_prob", c.extra_finding_prob);
  c.seed = kv.get_u64("seed", c.seed);
  auto read_array = [&](const char* key, std::array<double, kCategoryCount>& out) {
    const auto v = kv.get_reals(key, std::vector<double>(out.begin(), out.end()));
    if (v.size() != kCategoryCount) {
      fail(ErrorKind::validation, std::string(key) + " needs " + std::to_string(kCategoryCount) + " values");
    }
    std::copy(v.begin(), v.end(), out.begin());
  };
  read_array("category_scales", c.category_scales);
  read_array("category_weights", c.category_weights);
  c.validate();
  return c;
}

std::string SynthConfig::to_text() const {
  auto list = [](const std::array<double, kCategoryCount>& a) {
    std::string s;
    for (std::size_t i = 0; i < a.size(); ++i) s += (i ? "," : "") + format_real(a[i]);
    return s;
  };
  std::string s;
  s += "n_compounds = " + std::to_string(n_compounds) + "\n";
  s += "animals_per_compound = " + std::to_string(animals_per_compound) + "\n";
  s += "slides_per_animal = " + std::to_string(slides_per_animal) + "\n";
  s += "patches_per_slide = " + std::to_string(patches_per_slide) + "\n";
  s += "dim = " + std::to_string(dim) + "\n";
  s += "manifold_rank = " + std::to_string(manifold_rank) + "\n";
  s += "abnormal_fraction = " + format_real(abnormal_fraction) + "\n";
  s += "perturbation_scale = " + format_real(perturbation_scale) + "\n";
  s += "noise_scale = " + format_real(noise_scale) + "\n";
  s += "abnormal_patch_fraction = " + format_real(abnormal_patch_fraction) + "\n";
  s += "slide_spread = " + format_real(slide_spread) + "\n";
  s += "patch_spread = " + format_real(patch_spread) + "\n";
  s += "compound_offset_scale = " + format_real(compound_offset_scale) + "\n";
  s += "category_scales = " + list(category_scales) + "\n";
  s += "category_weights = " + list(category_weights) + "\n";
  s += "extra_finding_prob = " + format_real(extra_finding_prob) + "\n";
  s += "seed = " + std::to_string(seed) + "\n";
  return s;
}

SynthSummary generate_corpus(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const std::size_t d = cfg.dim;
  const std::size_t k = cfg.manifold_rank;
  Rng rng(cfg.seed);

  std::vector<double> map(d * k);
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(k));
  for (double& v : map) v = map_scale * rng.normal();
  const auto basis = orthonormal_basis(map, d, k);

  std::vector<std::vector<double>> offsets(cfg.n_compounds, std::vector<double>(d, 0.0));
  if (cfg.compound_offset_scale > 0) {
    for (auto& off : offsets) {
      for (double& v : off) v = cfg.compound_offset_scale * rng.normal();
    }
  }

  const std::size_t n_animals = cfg.n_compounds * cfg.animals_per_compound;
  const auto n_abnormal = static_cast<std::size_t>(std::llround(cfg.abnormal_fraction * static_cast<double>(n_animals)));
  std::vector<std::size_t> order(n_animals);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<bool> abnormal(n_animals, false);
  for (std::size_t i = 0; i < n_abnormal; ++i) abnormal[order[i]] = true;

  const auto& taxonomy = ScaleTaxonomy::builtin();
  std::array<std::vector<std::string>, kCategoryCount> terms;
  for (std::size_t c = 0; c < kCategoryCount; ++c) terms[c] = taxonomy.terms_in(kAllCategories[c]);

  std::vector<SlideEntry> entries;
  std::vector<AnimalDiagnosis> diagnoses;
  SynthSummary summary;
  summary.animals = n_animals;
  summary.abnormal_animals = n_abnormal;

  const auto emb_dir = out_dir / "embeddings";
  std::filesystem::create_directories(emb_dir);
  FloatMatrix patches(cfg.patches_per_slide, d);
  std::vector<double> latent(k), jitter(k), direction(d);

  for (std::size_t c = 0; c < cfg.n_compounds; ++c) {
    const std::string compound_id = "CMP" + padded(c + 1, cfg.n_compounds);
    for (std::size_t a = 0; a < cfg.animals_per_compound; ++a) {
      const std::size_t animal_index = c * cfg.animals_per_compound + a;
      const std::string animal_id = compound_id + "-A" + padded(a + 1, cfg.animals_per_compound);
      double severity = 0;
      if (abnormal[animal_index]) {
        const std::size_t primary = weighted_pick(rng, cfg.category_weights);
        AnimalDiagnosis dx{animal_id, compound_id, {}};
        dx.findings.insert(terms[primary][rng.below(terms[primary].size())]);
        if (rng.uniform() < cfg.extra_finding_prob) {
          const std::size_t extra = rng.below(primary + 1);
          dx.findings.insert(terms[extra][rng.below(terms[extra].size())]);
        }
        diagnoses.push_back(std::move(dx));
        severity = cfg.perturbation_scale * cfg.category_scales[primary];
      }
      for (std::size_t s = 0; s < cfg.slides_per_animal; ++s) {
        const std::string slide_id = animal_id + "-S" + padded(s + 1, cfg.slides_per_animal);
        for (double& v : latent) v = cfg.slide_spread * rng.normal();
        for (std::size_t p = 0; p < cfg.patches_per_slide; ++p) {
          for (std::size_t j = 0; j < k; ++j) jitter[j] = latent[j] + cfg.patch_spread * rng.normal();
          auto row = patches.row(p);
          for (std::size_t r = 0; r < d; ++r) {
            double v = offsets[c][r] + cfg.noise_scale * rng.normal();
            for (std::size_t j = 0; j < k; ++j) v += map[r * k + j] * jitter[j];
            row[r] = static_cast<float>(v);
          }
        }
        if (abnormal[animal_index]) {
          ++summary.abnormal_slides;
          for (double& v : direction) v = rng.normal();
          for (std::size_t j = 0; j < k; ++j) {
            double proj = 0;
            for (std::size_t r = 0; r < d; ++r) proj += basis[r * k + j] * direction[r];
            for (std::size_t r = 0; r < d; ++r) direction[r] -= proj * basis[r * k + j];
          }
          double norm = 0;
          for (double v : direction) norm += v * v;
          const double scale = norm > 0 ? severity * std::sqrt(static_cast<double>(d) / norm) : 0.0;
          std::vector<std::size_t> picked(cfg.patches_per_slide);
          std::iota(picked.begin(), picked.end(), std::size_t{0});
          rng.shuffle(std::span<std::size_t>(picked));
          const auto n_hit = std::max<std::size_t>(
              1, static_cast<std::size_t>(std::llround(cfg.abnormal_patch_fraction * static_cast<double>(picked.size()))));
          for (std::size_t h = 0; h < n_hit && cfg.abnormal_patch_fraction > 0; ++h) {
            auto row = patches.row(picked[h]);
            for (std::size_t r = 0; r < d; ++r) row[r] = static_cast<float>(row[r] + scale * direction[r]);
          }
        }
        const auto path = emb_dir / (slide_id + ".emb");
        write_embeddings(path, patches);
        entries.push_back({slide_id, animal_id, compound_id, path.string()});
        ++summary.slides;
      }
    }
  }

  write_manifest(out_dir / "manifest.csv", entries);
  write_diagnoses(out_dir / "diagnoses.csv", diagnoses);
  write_file(out_dir / "taxonomy.csv", builtin_taxonomy_csv());
  write_file(out_dir / "synth.cfg", cfg.to_text());
  return summary;
}

}  // namespace toxscreen
