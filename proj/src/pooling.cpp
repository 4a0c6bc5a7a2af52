#include "toxscreen/pooling.hpp"

#include <algorithm>

#include "toxscreen/error.hpp"
#include "toxscreen/parallel.hpp"
#include "toxscreen/simd/kernels.hpp"
#include "toxscreen/text_io.hpp"

namespace toxscreen {

const char* to_string(PoolMethod m) { return m == PoolMethod::max ? "max" : "mean"; }

PoolMethod parse_pool_method(std::string_view s) {
  if (s == "mean") return PoolMethod::mean;
  if (s == "max") return PoolMethod::max;
  fail(ErrorKind::validation, "unknown pooling method '" + std::string(s) + "' (expected mean or max)");
}

PooledEmbedding pool(const PatchEmbeddingSet& patches, PoolMethod method) {
  const FloatMatrix& m = patches.patches;
  if (m.rows == 0) fail(ErrorKind::data, "slide '" + patches.slide_id + "' has no patches to pool");
  PooledEmbedding out{patches.slide_id, method, std::vector<float>(m.cols)};
  if (method == PoolMethod::max) {
    std::copy(m.row(0).begin(), m.row(0).end(), out.vector.begin());
    for (std::size_t r = 1; r < m.rows; ++r) simd::running_max(m.row(r).data(), out.vector.data(), m.cols);
  } else {
    std::vector<double> sum(m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) simd::accumulate(m.row(r).data(), sum.data(), m.cols);
    const double n = static_cast<double>(m.rows);
    for (std::size_t c = 0; c < m.cols; ++c) out.vector[c] = static_cast<float>(sum[c] / n);
  }
  return out;
}

std::optional<std::size_t> PooledSet::find(std::string_view slide_id) const {
  for (std::size_t i = 0; i < slide_ids.size(); ++i) {
    if (slide_ids[i] == slide_id) return i;
  }
  return std::nullopt;
}

PooledSet pool_slides(std::span<const SlideEntry> slides, PoolMethod method) {
  if (slides.empty()) fail(ErrorKind::validation, "no slides to pool");
  std::vector<PooledEmbedding> pooled(slides.size());
  parallel_for(slides.size(), [&](std::size_t i) {
    auto set = read_embeddings(slides[i].embedding_path);
    set.slide_id = slides[i].slide_id;
    pooled[i] = pool(set, method);
  });
  PooledSet out;
  out.vectors = FloatMatrix(slides.size(), pooled[0].vector.size());
  for (std::size_t i = 0; i < slides.size(); ++i) {
    if (pooled[i].vector.size() != out.vectors.cols) {
      fail(ErrorKind::data, "slide '" + slides[i].slide_id + "' has dimension " +
                                std::to_string(pooled[i].vector.size()) + ", expected " +
                                std::to_string(out.vectors.cols));
    }
    std::copy(pooled[i].vector.begin(), pooled[i].vector.end(), out.vectors.row(i).begin());
    out.slide_ids.push_back(slides[i].slide_id);
  }
  return out;
}

std::filesystem::path default_index_path(const std::filesystem::path& emb_path) {
  auto p = emb_path;
  p.replace_extension(".csv");
  return p;
}

void write_pooled(const PooledSet& set, const std::filesystem::path& emb_path,
                  const std::filesystem::path& index_path) {
  if (set.slide_ids.size() != set.vectors.rows) fail(ErrorKind::data, "pooled set index does not match its rows");
  write_embeddings(emb_path, set.vectors);
  std::string text = "row,slide_id\n";
  for (std::size_t i = 0; i < set.slide_ids.size(); ++i) {
    text += std::to_string(i) + "," + csv_escape(set.slide_ids[i]) + "\n";
  }
  write_file(index_path, text);
}

PooledSet read_pooled(const std::filesystem::path& emb_path, const std::filesystem::path& index_path) {
  PooledSet set;
  set.vectors = read_embeddings(emb_path).patches;
  const CsvTable index = read_csv(index_path);
  require_columns(index, {"row", "slide_id"}, index_path.string());
  if (index.rows.size() != set.vectors.rows) {
    fail(ErrorKind::validation, index_path.string() + ": " + std::to_string(index.rows.size()) +
                                    " index rows for " + std::to_string(set.vectors.rows) + " vectors");
  }
  for (std::size_t i = 0; i < index.rows.size(); ++i) {
    if (parse_u64(index.rows[i][0], "row") != i) {
      fail(ErrorKind::validation, index_path.string() + ": rows must be listed in order 0..n-1");
    }
    set.slide_ids.push_back(index.rows[i][1]);
  }
  return set;
}

}  // namespace toxscreen
