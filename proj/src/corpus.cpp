#include "toxscreen/corpus.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <unordered_map>
#include <unordered_set>

#include "toxscreen/error.hpp"
#include "toxscreen/parallel.hpp"
#include "toxscreen/text_io.hpp"

namespace toxscreen {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> encode_emb1(const FloatMatrix& m) {
  if (m.values.size() != m.rows * m.cols) fail(ErrorKind::data, "matrix storage does not match its shape");
  if (m.rows > UINT32_MAX || m.cols > UINT32_MAX) fail(ErrorKind::length, "matrix too large for EMB1");
  std::vector<std::uint8_t> out;
  out.reserve(16 + 4 * m.values.size());
  for (char c : std::string_view("EMB1")) out.push_back(static_cast<std::uint8_t>(c));
  put_u32(out, kEmbVersion);
  put_u32(out, static_cast<std::uint32_t>(m.rows));
  put_u32(out, static_cast<std::uint32_t>(m.cols));
  for (float v : m.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

FloatMatrix decode_emb1(std::span<const std::uint8_t> bytes, std::string_view source_name) {
  const std::string src(source_name);
  if (bytes.size() < 16) fail(ErrorKind::length, src + ": truncated EMB1 header");
  if (std::memcmp(bytes.data(), "EMB1", 4) != 0) fail(ErrorKind::format, src + ": bad magic (expected EMB1)");
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kEmbVersion) fail(ErrorKind::format, src + ": unsupported EMB1 version " + std::to_string(version));
  const std::uint64_t rows = get_u32(bytes.data() + 8);
  const std::uint64_t cols = get_u32(bytes.data() + 12);
  const std::uint64_t expected = 16 + 4 * rows * cols;
  if (bytes.size() != expected) {
    fail(ErrorKind::length, src + ": payload is " + std::to_string(bytes.size()) + " bytes, header implies " +
                                std::to_string(expected));
  }
  if (rows == 0 || cols == 0) fail(ErrorKind::data, src + ": empty matrix");
  FloatMatrix m(rows, cols);
  const std::uint8_t* p = bytes.data() + 16;
  for (std::size_t i = 0; i < m.values.size(); ++i, p += 4) {
    const float v = std::bit_cast<float>(get_u32(p));
    if (!std::isfinite(v)) {
      fail(ErrorKind::data, src + ": non-finite value at row " + std::to_string(i / cols) + ", column " +
                                std::to_string(i % cols));
    }
    m.values[i] = v;
  }
  return m;
}

PatchEmbeddingSet read_embeddings(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return {path.stem().string(), decode_emb1(bytes, path.string())};
}

void write_embeddings(const std::filesystem::path& path, const FloatMatrix& m) {
  write_bytes(path, encode_emb1(m));
}

// ---- taxonomy ---------------------------------------------------------------

const char* to_string(ScaleCategory c) {
  switch (c) {
    case ScaleCategory::subcellular: return "subcellular";
    case ScaleCategory::cellular: return "cellular";
    case ScaleCategory::multicellular: return "multicellular";
    case ScaleCategory::tissue_lesion: return "tissue_lesion";
    case ScaleCategory::unspecified: return "unspecified";
  }
  return "unspecified";
}

const char* to_string(Label l) { return l == Label::abnormal ? "abnormal" : "normal"; }

std::optional<ScaleCategory> parse_category(std::string_view name) {
  for (ScaleCategory c : kAllCategories) {
    if (name == to_string(c)) return c;
  }
  return std::nullopt;
}

ScaleTaxonomy::ScaleTaxonomy(std::map<std::string, ScaleCategory, std::less<>> terms) : terms_(std::move(terms)) {}

ScaleTaxonomy ScaleTaxonomy::parse(std::string_view csv_text, std::string_view source_name) {
  const CsvTable table = parse_csv(csv_text, source_name);
  require_columns(table, {"term", "category"}, source_name);
  std::map<std::string, ScaleCategory, std::less<>> terms;
  for (const auto& row : table.rows) {
    const auto cat = parse_category(row[1]);
    if (!cat) fail(ErrorKind::validation, std::string(source_name) + ": unknown category '" + row[1] + "'");
    if (row[0].empty()) fail(ErrorKind::validation, std::string(source_name) + ": empty term");
    if (!terms.emplace(row[0], *cat).second) {
      fail(ErrorKind::validation, std::string(source_name) + ": term '" + row[0] + "' listed twice");
    }
  }
  return ScaleTaxonomy(std::move(terms));
}

ScaleTaxonomy ScaleTaxonomy::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

const ScaleTaxonomy& ScaleTaxonomy::builtin() {
  static const ScaleTaxonomy tax = parse(builtin_taxonomy_csv(), "builtin taxonomy");
  return tax;
}

std::optional<ScaleCategory> ScaleTaxonomy::find(std::string_view term) const {
  const auto it = terms_.find(term);
  if (it == terms_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> ScaleTaxonomy::terms_in(ScaleCategory c) const {
  std::vector<std::string> out;
  for (const auto& [term, cat] : terms_) {
    if (cat == c) out.push_back(term);
  }
  return out;
}

// ---- manifests ----------------------------------------------------------------

std::vector<SlideEntry> read_manifest(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  require_columns(table, {"slide_id", "animal_id", "compound_id", "embedding_path"}, path.string());
  const auto base = path.parent_path();
  std::vector<SlideEntry> out;
  out.reserve(table.rows.size());
  std::unordered_set<std::string> seen;
  for (const auto& row : table.rows) {
    if (row[0].empty() || row[1].empty() || row[2].empty()) {
      fail(ErrorKind::validation, path.string() + ": empty identifier in row for slide '" + row[0] + "'");
    }
    if (!seen.insert(row[0]).second) fail(ErrorKind::validation, path.string() + ": duplicate slide_id '" + row[0] + "'");
    std::filesystem::path emb(row[3]);
    if (emb.is_relative()) emb = base / emb;
    out.push_back({row[0], row[1], row[2], emb.lexically_normal().string()});
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, std::span<const SlideEntry> entries) {
  const auto base = std::filesystem::absolute(path).parent_path();
  std::string text = "slide_id,animal_id,compound_id,embedding_path\n";
  for (const auto& e : entries) {
    const auto abs = std::filesystem::absolute(e.embedding_path).lexically_normal();
    auto rel = abs.lexically_relative(base);
    if (rel.empty()) rel = abs;
    text += csv_escape(e.slide_id) + "," + csv_escape(e.animal_id) + "," + csv_escape(e.compound_id) + "," +
            csv_escape(rel.generic_string()) + "\n";
  }
  write_file(path, text);
}

std::vector<AnimalDiagnosis> read_diagnoses(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  require_columns(table, {"animal_id", "compound_id", "findings"}, path.string());
  std::vector<AnimalDiagnosis> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    AnimalDiagnosis d{row[0], row[1], {}};
    if (!row[2].empty()) {
      for (auto& term : split(row[2], ';')) {
        if (!term.empty()) d.findings.insert(std::move(term));
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

void write_diagnoses(const std::filesystem::path& path, std::span<const AnimalDiagnosis> diagnoses) {
  std::string text = "animal_id,compound_id,findings\n";
  for (const auto& d : diagnoses) {
    std::string joined;
    for (const auto& f : d.findings) joined += (joined.empty() ? "" : ";") + f;
    text += csv_escape(d.animal_id) + "," + csv_escape(d.compound_id) + "," + csv_escape(joined) + "\n";
  }
  write_file(path, text);
}

std::vector<SlideRecord> propagate_labels(std::span<const SlideEntry> slides,
                                          std::span<const AnimalDiagnosis> diagnoses,
                                          std::vector<std::string>* warnings) {
  std::unordered_map<std::string, const AnimalDiagnosis*> by_animal;
  for (const auto& d : diagnoses) {
    if (!by_animal.emplace(d.animal_id, &d).second) {
      fail(ErrorKind::validation, "animal '" + d.animal_id + "' has more than one diagnosis row");
    }
  }
  std::unordered_set<std::string> reported;
  std::vector<SlideRecord> records;
  records.reserve(slides.size());
  for (const auto& s : slides) {
    SlideRecord r{s.slide_id, s.animal_id, s.compound_id, Label::normal, {}, s.embedding_path};
    if (const auto it = by_animal.find(s.animal_id); it != by_animal.end()) {
      const AnimalDiagnosis& d = *it->second;
      if (warnings && d.compound_id != s.compound_id && reported.insert(d.animal_id).second) {
        warnings->push_back("animal '" + d.animal_id + "' is diagnosed under compound '" + d.compound_id +
                            "' but its slides list compound '" + s.compound_id + "'");
      }
      r.findings = d.findings;
      r.label = r.findings.empty() ? Label::normal : Label::abnormal;
    }
    records.push_back(std::move(r));
  }
  return records;
}

CategorySet slide_categories(const SlideRecord& record, const ScaleTaxonomy& taxonomy, UnknownTermPolicy policy,
                             std::vector<std::string>* warnings) {
  CategorySet set;
  for (const auto& term : record.findings) {
    auto cat = taxonomy.find(term);
    if (!cat) {
      if (policy == UnknownTermPolicy::strict) {
        fail(ErrorKind::validation, "slide '" + record.slide_id + "': finding '" + term + "' is not in the taxonomy");
      }
      if (warnings) warnings->push_back("finding '" + term + "' is not in the taxonomy; counted as unspecified");
      cat = ScaleCategory::unspecified;
    }
    set.set(static_cast<std::size_t>(*cat));
  }
  return set;
}

std::optional<ScaleCategory> largest_category(const CategorySet& set) {
  for (std::size_t i = kCategoryCount; i-- > 0;) {
    if (set.test(i)) return kAllCategories[i];
  }
  return std::nullopt;
}

Corpus load_corpus(const std::filesystem::path& manifest, const std::filesystem::path& diagnoses,
                   const std::filesystem::path& taxonomy, UnknownTermPolicy policy) {
  Corpus corpus;
  const auto entries = read_manifest(manifest);
  const auto diag = read_diagnoses(diagnoses);
  corpus.records = propagate_labels(entries, diag, &corpus.warnings);
  corpus.taxonomy = taxonomy.empty() ? ScaleTaxonomy::builtin() : ScaleTaxonomy::load(taxonomy);
  std::vector<std::string> term_warnings;
  corpus.categories.reserve(corpus.records.size());
  for (const auto& r : corpus.records) {
    corpus.categories.push_back(slide_categories(r, corpus.taxonomy, policy, &term_warnings));
  }
  std::unordered_set<std::string> unique;
  for (auto& w : term_warnings) {
    if (unique.insert(w).second) corpus.warnings.push_back(std::move(w));
  }
  return corpus;
}

CorpusStats validate_embeddings(const Corpus& corpus) {
  CorpusStats stats;
  stats.slides = corpus.records.size();
  std::unordered_set<std::string> animals, compounds;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    const auto& r = corpus.records[i];
    animals.insert(r.animal_id);
    compounds.insert(r.compound_id);
    if (r.abnormal()) ++stats.abnormal_slides;
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      if (corpus.categories[i].test(c)) ++stats.category_slides[c];
    }
  }
  stats.animals = animals.size();
  stats.compounds = compounds.size();

  std::vector<std::size_t> rows(corpus.records.size()), dims(corpus.records.size());
  parallel_for(corpus.records.size(), [&](std::size_t i) {
    const auto set = read_embeddings(corpus.records[i].embedding_path);
    rows[i] = set.n_patches();
    dims[i] = set.dim();
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && dims[i] != dims[0]) {
      fail(ErrorKind::data, "slide '" + corpus.records[i].slide_id + "' has dimension " + std::to_string(dims[i]) +
                                ", expected " + std::to_string(dims[0]));
    }
    stats.patches += rows[i];
  }
  stats.dim = dims.empty() ? 0 : dims[0];
  return stats;
}

}  // namespace toxscreen
