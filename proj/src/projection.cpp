#include "toxscreen/projection.hpp"

#include <cmath>
#include <limits>

#include "toxscreen/error.hpp"
#include "toxscreen/parallel.hpp"
#include "toxscreen/rng.hpp"
#include "toxscreen/simd/kernels.hpp"

namespace toxscreen {
namespace {

constexpr double kEntropyTolerance = 1e-10;  // nats
constexpr int kMaxBisectionSteps = 2000;

// Fills one conditional row for precision beta; returns the entropy in nats.
double fill_row(std::span<const double> dist, std::size_t self, double min_dist, double beta, std::span<double> row) {
  double sum = 0;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    row[j] = j == self ? 0.0 : std::exp(-beta * (dist[j] - min_dist));
    sum += row[j];
  }
  double weighted = 0;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    if (j != self) weighted += (dist[j] - min_dist) * row[j];
  }
  for (double& v : row) v /= sum;
  return std::log(sum) + beta * weighted / sum;
}

double entropy_bits(std::span<const double> row) {
  double h = 0;
  for (double v : row) {
    if (v > 0) h -= v * std::log2(v);
  }
  return h;
}

}  // namespace

std::vector<double> pairwise_squared_distances(const FloatMatrix& points) {
  const std::size_t n = points.rows;
  std::vector<double> d(n * n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) d[i * n + j] = simd::squared_distance(points.row(i), points.row(j));
    }
  });
  return d;
}

ConditionalAffinities conditional_affinities(std::span<const double> sq_dist, std::size_t n, double perplexity) {
  if (sq_dist.size() != n * n) fail(ErrorKind::data, "distance matrix has the wrong size");
  ConditionalAffinities out{n, std::vector<double>(n * n, 0.0), std::vector<double>(n, 1.0),
                            std::vector<double>(n, 0.0)};
  const double target = std::log(perplexity);
  parallel_for(n, [&](std::size_t i) {
    const auto dist = sq_dist.subspan(i * n, n);
    auto row = std::span<double>(out.p).subspan(i * n, n);
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) min_dist = std::min(min_dist, dist[j]);
    }
    double beta = 1.0;
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int step = 0; step < kMaxBisectionSteps; ++step) {
      const double h = fill_row(dist, i, min_dist, beta, row);
      const double diff = h - target;
      if (std::abs(diff) < kEntropyTolerance) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2 : (beta + hi) / 2;
      } else {
        hi = beta;
        beta = (beta + lo) / 2;
      }
    }
    out.beta[i] = beta;
    out.entropy_bits[i] = entropy_bits(row);
  });
  return out;
}

std::vector<double> joint_affinities(const ConditionalAffinities& cond) {
  const std::size_t n = cond.n;
  std::vector<double> p(n * n, 0.0);
  const double denom = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) p[i * n + j] = (cond.p[i * n + j] + cond.p[j * n + i]) / denom;
    }
  }
  return p;
}

namespace {

// Student-t kernel values w_ij = 1 / (1 + |y_i - y_j|^2) and their total.
double student_kernel(std::span<const double> y, std::size_t n, std::vector<double>& w) {
  w.assign(n * n, 0.0);
  std::vector<double> row_sums(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = y[2 * i] - y[2 * j];
      const double dy = y[2 * i + 1] - y[2 * j + 1];
      const double v = 1.0 / (1.0 + dx * dx + dy * dy);
      w[i * n + j] = v;
      s += v;
    }
    row_sums[i] = s;
  });
  double z = 0;
  for (double s : row_sums) z += s;
  return z;
}

}  // namespace

double kl_divergence(std::span<const double> p, std::span<const double> y, std::size_t n) {
  std::vector<double> w;
  const double z = student_kernel(y, n, w);
  double kl = 0;
  for (std::size_t k = 0; k < n * n; ++k) {
    if (p[k] > 0) kl += p[k] * std::log(p[k] / (w[k] / z));
  }
  return kl;
}

void kl_gradient(std::span<const double> p, std::span<const double> y, std::size_t n, double exaggeration,
                 std::span<double> grad) {
  std::vector<double> w;
  const double z = student_kernel(y, n, w);
  parallel_for(n, [&](std::size_t i) {
    double gx = 0, gy = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double wij = w[i * n + j];
      const double coeff = (exaggeration * p[i * n + j] - wij / z) * wij;
      gx += coeff * (y[2 * i] - y[2 * j]);
      gy += coeff * (y[2 * i + 1] - y[2 * j + 1]);
    }
    grad[2 * i] = 4.0 * gx;
    grad[2 * i + 1] = 4.0 * gy;
  });
}

TsneResult tsne_project(const FloatMatrix& points, const TsneConfig& cfg) {
  const std::size_t n = points.rows;
  if (n < 4) fail(ErrorKind::validation, "t-SNE needs at least 4 points");
  if (cfg.iterations < 1) fail(ErrorKind::validation, "t-SNE needs at least one iteration");
  const double limit = cfg.enforce_perplexity_rule ? static_cast<double>(n - 1) / 3.0 : static_cast<double>(n - 1);
  if (!(cfg.perplexity >= 1.0) || !(cfg.perplexity < limit)) {
    fail(ErrorKind::validation, "perplexity " + std::to_string(cfg.perplexity) + " is infeasible for " +
                                    std::to_string(n) + " points (must be in [1, " + std::to_string(limit) + "))");
  }

  const auto dist = pairwise_squared_distances(points);
  const auto p = joint_affinities(conditional_affinities(dist, n, cfg.perplexity));

  TsneResult result;
  result.n = n;
  std::vector<double>& y = result.coords;
  y.resize(2 * n);
  Rng rng(cfg.seed);
  for (double& v : y) v = 1e-4 * rng.normal();

  std::vector<double> grad(2 * n), update(2 * n, 0.0), gains(2 * n, 1.0);
  for (std::uint64_t it = 0; it < cfg.iterations; ++it) {
    const double exaggeration = it < cfg.exaggeration_iterations ? cfg.exaggeration : 1.0;
    const double momentum = it < cfg.momentum_switch_iteration ? cfg.initial_momentum : cfg.final_momentum;
    kl_gradient(p, y, n, exaggeration, grad);
    for (std::size_t k = 0; k < 2 * n; ++k) {
      if (cfg.adaptive_gains) {
        const bool same_sign = (grad[k] > 0) == (update[k] > 0);
        gains[k] = same_sign ? gains[k] * 0.8 : gains[k] + 0.2;
        if (gains[k] < cfg.min_gain) gains[k] = cfg.min_gain;
      }
      update[k] = momentum * update[k] - cfg.learning_rate * gains[k] * grad[k];
      y[k] += update[k];
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += y[2 * i];
      my += y[2 * i + 1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[2 * i] -= mx;
      y[2 * i + 1] -= my;
    }
    const std::uint64_t done = it + 1;
    if ((cfg.kl_every > 0 && done % cfg.kl_every == 0) || done == cfg.iterations) {
      const double kl = kl_divergence(p, y, n);
      if (!std::isfinite(kl)) fail(ErrorKind::numeric, "t-SNE diverged at iteration " + std::to_string(done));
      result.kl_trace.emplace_back(done, kl);
    }
  }
  return result;
}

}  // namespace toxscreen
