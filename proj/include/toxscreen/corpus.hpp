#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace toxscreen {

// Row-major matrix of 32-bit reals.
struct FloatMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  FloatMatrix() = default;
  FloatMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0f) {}

  std::span<float> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const float> row(std::size_t i) const { return {values.data() + i * cols, cols}; }

  bool operator==(const FloatMatrix&) const = default;
};

// Per-patch feature vectors of one slide.
struct PatchEmbeddingSet {
  std::string slide_id;
  FloatMatrix patches;  // n_patches x dim

  std::size_t n_patches() const { return patches.rows; }
  std::size_t dim() const { return patches.cols; }
};

// ---- EMB1 binary format -------------------------------------------------
//
//   offset 0   "EMB1"
//   offset 4   u32 LE version (= 1)
//   offset 8   u32 LE rows
//   offset 12  u32 LE cols
//   offset 16  rows*cols IEEE-754 binary32 LE, row-major
//
// Rows must be >= 1, cols >= 1, values finite.

inline constexpr std::uint32_t kEmbVersion = 1;

std::vector<std::uint8_t> encode_emb1(const FloatMatrix& m);
FloatMatrix decode_emb1(std::span<const std::uint8_t> bytes, std::string_view source_name);

// slide_id defaults to the file stem.
PatchEmbeddingSet read_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const FloatMatrix& m);

// ---- labels and taxonomy ------------------------------------------------

enum class Label : std::uint8_t { normal, abnormal };

enum class ScaleCategory : std::uint8_t { subcellular, cellular, multicellular, tissue_lesion, unspecified };
inline constexpr std::size_t kCategoryCount = 5;
inline constexpr std::array<ScaleCategory, kCategoryCount> kAllCategories{
    ScaleCategory::subcellular, ScaleCategory::cellular, ScaleCategory::multicellular,
    ScaleCategory::tissue_lesion, ScaleCategory::unspecified};

// Indexed by static_cast<size_t>(ScaleCategory).
using CategorySet = std::bitset<kCategoryCount>;

const char* to_string(ScaleCategory c);
const char* to_string(Label l);
std::optional<ScaleCategory> parse_category(std::string_view name);

enum class UnknownTermPolicy { warn_unspecified, strict };

class ScaleTaxonomy {
 public:
  ScaleTaxonomy() = default;
  explicit ScaleTaxonomy(std::map<std::string, ScaleCategory, std::less<>> terms);

  static ScaleTaxonomy load(const std::filesystem::path& path);
  static ScaleTaxonomy parse(std::string_view csv_text, std::string_view source_name);
  // Abnormality-by-scale grouping shipped with the tool (data/taxonomy_default.csv).
  static const ScaleTaxonomy& builtin();

  std::optional<ScaleCategory> find(std::string_view term) const;
  const std::map<std::string, ScaleCategory, std::less<>>& terms() const { return terms_; }
  std::vector<std::string> terms_in(ScaleCategory c) const;

 private:
  std::map<std::string, ScaleCategory, std::less<>> terms_;
};

// CSV text of the built-in taxonomy, byte-identical to data/taxonomy_default.csv.
std::string_view builtin_taxonomy_csv();

// ---- manifests and diagnoses --------------------------------------------

struct SlideEntry {
  std::string slide_id;
  std::string animal_id;
  std::string compound_id;
  std::string embedding_path;  // resolved against the manifest's directory
};

struct AnimalDiagnosis {
  std::string animal_id;
  std::string compound_id;
  std::set<std::string> findings;
};

struct SlideRecord {
  std::string slide_id;
  std::string animal_id;
  std::string compound_id;
  Label label = Label::normal;
  std::set<std::string> findings;
  std::string embedding_path;

  bool abnormal() const { return label == Label::abnormal; }
};

std::vector<SlideEntry> read_manifest(const std::filesystem::path& path);
// Paths are written relative to the new manifest's directory.
void write_manifest(const std::filesystem::path& path, std::span<const SlideEntry> entries);
std::vector<AnimalDiagnosis> read_diagnoses(const std::filesystem::path& path);
void write_diagnoses(const std::filesystem::path& path, std::span<const AnimalDiagnosis> diagnoses);

// Every slide inherits the full finding set of its animal; slides of animals
// absent from the diagnosis table are normal. Throws a validation error on a
// duplicate animal_id in `diagnoses`. Non-fatal inconsistencies (a diagnosis
// whose compound differs from the manifest) are appended to `warnings`.
std::vector<SlideRecord> propagate_labels(std::span<const SlideEntry> slides,
                                          std::span<const AnimalDiagnosis> diagnoses,
                                          std::vector<std::string>* warnings = nullptr);

// Union of the categories of the slide's findings. Unknown terms map to
// `unspecified` with a warning, or throw under the strict policy.
CategorySet slide_categories(const SlideRecord& record, const ScaleTaxonomy& taxonomy,
                             UnknownTermPolicy policy = UnknownTermPolicy::warn_unspecified,
                             std::vector<std::string>* warnings = nullptr);

// Largest-scale category of a slide (the last set bit), if any.
std::optional<ScaleCategory> largest_category(const CategorySet& set);

// ---- whole corpus --------------------------------------------------------

struct Corpus {
  std::vector<SlideRecord> records;
  ScaleTaxonomy taxonomy;
  std::vector<CategorySet> categories;  // parallel to records
  std::vector<std::string> warnings;
};

// An empty taxonomy path selects the built-in taxonomy.
Corpus load_corpus(const std::filesystem::path& manifest, const std::filesystem::path& diagnoses,
                   const std::filesystem::path& taxonomy, UnknownTermPolicy policy);

struct CorpusStats {
  std::size_t slides = 0;
  std::size_t animals = 0;
  std::size_t compounds = 0;
  std::size_t abnormal_slides = 0;
  std::size_t patches = 0;
  std::size_t dim = 0;
  std::array<std::size_t, kCategoryCount> category_slides{};
};

// Reads every embedding file, checks format and a common dimension.
CorpusStats validate_embeddings(const Corpus& corpus);

}  // namespace toxscreen
