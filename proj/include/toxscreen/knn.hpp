#pragma once

#include <span>
#include <string>
#include <vector>

#include "toxscreen/pooling.hpp"
#include "toxscreen/scores.hpp"

namespace toxscreen {

// Normal training vectors held by the 1-nearest-neighbour baseline.
class ReferenceSet {
 public:
  explicit ReferenceSet(PooledSet refs);

  std::size_t size() const { return refs_.size(); }
  std::size_t dim() const { return refs_.dim(); }
  const PooledSet& vectors() const { return refs_; }

  // Euclidean distance to the closest reference row. Squared distances are
  // compared and only the minimum is square-rooted.
  double nearest_distance(std::span<const float> query) const;

 private:
  PooledSet refs_;
};

// Scores every query row (in parallel); the table keeps query order.
ScoreTable knn_score_table(const PooledSet& queries, const ReferenceSet& refs);

}  // namespace toxscreen
