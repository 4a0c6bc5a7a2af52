#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "toxscreen/corpus.hpp"

namespace toxscreen {

struct TsneConfig {
  double perplexity = 30;
  std::uint64_t iterations = 1000;
  double learning_rate = 200;
  double exaggeration = 12;
  std::uint64_t exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::uint64_t momentum_switch_iteration = 250;
  bool adaptive_gains = true;  // delta-bar-delta gains of the reference optimiser
  double min_gain = 0.01;
  std::uint64_t seed = 0;
  std::uint64_t kl_every = 50;  // record KL every this many iterations (and at the end)
  // Require perplexity < (N - 1) / 3. Disabling it still rejects targets no
  // distribution over N - 1 neighbours can reach (perplexity >= N - 1).
  bool enforce_perplexity_rule = true;
};

// Pairwise squared Euclidean distances (N x N, row-major), via the SIMD kernel.
std::vector<double> pairwise_squared_distances(const FloatMatrix& points);

struct ConditionalAffinities {
  std::size_t n = 0;
  std::vector<double> p;             // N x N, row i is p(. | i), p(i | i) = 0
  std::vector<double> beta;          // Gaussian precision per row
  std::vector<double> entropy_bits;  // achieved Shannon entropy per row
};

// Per-row bisection on the Gaussian precision until the row entropy equals
// log(perplexity).
ConditionalAffinities conditional_affinities(std::span<const double> sq_dist, std::size_t n, double perplexity);

// (p(j|i) + p(i|j)) / 2N: exactly symmetric, zero diagonal, sums to one.
std::vector<double> joint_affinities(const ConditionalAffinities& cond);

// KL(P || Q) for a 2-D embedding `y` (N x 2, row-major).
double kl_divergence(std::span<const double> p, std::span<const double> y, std::size_t n);

// Exact gradient of KL(exaggeration * P || Q) with respect to y.
void kl_gradient(std::span<const double> p, std::span<const double> y, std::size_t n, double exaggeration,
                 std::span<double> grad);

struct TsneResult {
  std::size_t n = 0;
  std::vector<double> coords;  // N x 2, centred
  std::vector<std::pair<std::uint64_t, double>> kl_trace;  // (1-based iteration, KL)
};

// Exact O(N^2) t-SNE to two dimensions. Throws a validation error for N < 4
// or an infeasible perplexity before iterating.
TsneResult tsne_project(const FloatMatrix& points, const TsneConfig& cfg);

}  // namespace toxscreen
