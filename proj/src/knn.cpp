#include "toxscreen/knn.hpp"

#include <cmath>
#include <limits>

#include "toxscreen/error.hpp"
#include "toxscreen/parallel.hpp"
#include "toxscreen/simd/kernels.hpp"

namespace toxscreen {

ReferenceSet::ReferenceSet(PooledSet refs) : refs_(std::move(refs)) {
  if (refs_.size() == 0) fail(ErrorKind::validation, "reference set is empty");
}

double ReferenceSet::nearest_distance(std::span<const float> query) const {
  if (query.size() != dim()) {
    fail(ErrorKind::data, "query has dimension " + std::to_string(query.size()) + ", references have " +
                              std::to_string(dim()));
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < refs_.size(); ++r) {
    const double d2 = simd::squared_distance(query, refs_.vectors.row(r));
    if (d2 < best) best = d2;
  }
  return std::sqrt(best);
}

ScoreTable knn_score_table(const PooledSet& queries, const ReferenceSet& refs) {
  if (queries.size() == 0) fail(ErrorKind::validation, "no query slides to score");
  if (queries.dim() != refs.dim()) {
    fail(ErrorKind::data, "queries have dimension " + std::to_string(queries.dim()) + ", references have " +
                              std::to_string(refs.dim()));
  }
  ScoreTable table{queries.slide_ids, std::vector<double>(queries.size())};
  parallel_for(queries.size(), [&](std::size_t q) {
    table.scores[q] = refs.nearest_distance(queries.vectors.row(q));
  });
  return table;
}

}  // namespace toxscreen
