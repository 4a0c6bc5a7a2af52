#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toxscreen/corpus.hpp"

namespace toxscreen {

enum class PoolMethod { mean, max };

const char* to_string(PoolMethod m);
PoolMethod parse_pool_method(std::string_view s);

struct PooledEmbedding {
  std::string slide_id;
  PoolMethod method = PoolMethod::mean;
  std::vector<float> vector;
};

// Column-wise mean (summed in double in row order, then divided and narrowed)
// or column-wise max. Throws a data error for an empty patch set.
PooledEmbedding pool(const PatchEmbeddingSet& patches, PoolMethod method);

// Slide-level vectors of many slides: one row per slide.
struct PooledSet {
  std::vector<std::string> slide_ids;
  FloatMatrix vectors;

  std::size_t size() const { return slide_ids.size(); }
  std::size_t dim() const { return vectors.cols; }
  std::optional<std::size_t> find(std::string_view slide_id) const;
};

// Reads each slide's embedding file and pools it; slides are independent and
// pooled in parallel.
PooledSet pool_slides(std::span<const SlideEntry> slides, PoolMethod method);

// Sidecar path used when none is given: same stem, ".csv".
std::filesystem::path default_index_path(const std::filesystem::path& emb_path);

// EMB1 matrix plus a "row,slide_id" sidecar CSV.
void write_pooled(const PooledSet& set, const std::filesystem::path& emb_path,
                  const std::filesystem::path& index_path);
PooledSet read_pooled(const std::filesystem::path& emb_path, const std::filesystem::path& index_path);
inline PooledSet read_pooled(const std::filesystem::path& emb_path) {
  return read_pooled(emb_path, default_index_path(emb_path));
}

}  // namespace toxscreen
