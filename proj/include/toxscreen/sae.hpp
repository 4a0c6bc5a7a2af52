#pragma once

// Squeeze-and-excitation gated sparse autoencoder over slide vectors.
//
//   gate   g  = sigmoid(W2 relu(W1 x + b1) + b2)        d -> d/r -> d
//   gated  xg = x * g
//   encode z  = relu(E2 relu(E1 xg + c1) + c2)          d -> hidden -> latent
//   decode x^ = D2 relu(D1 z + e1) + e2                 latent -> hidden -> d
//   loss      = mean((x^ - x)^2) + lambda * sum|z|
//
// The reconstruction target is the ungated input x. Dense weights are stored
// row-major as out x in. Everything is templated on the scalar type: float is
// the production path (SIMD kernels), double the verification path used by
// the finite-difference checks.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "toxscreen/corpus.hpp"

namespace toxscreen {

struct SaeShape {
  std::size_t input_dim = 1024;
  std::size_t reduction = 16;
  std::size_t hidden = 512;
  std::size_t latent = 256;

  // Width of the gate's bottleneck: max(1, input_dim / reduction).
  std::size_t attention_dim() const { return input_dim / reduction > 0 ? input_dim / reduction : 1; }
  void validate() const;
  bool operator==(const SaeShape&) const = default;
};

template <class T>
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<T> weight;  // out x in
  std::vector<T> bias;    // out

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weight(in_dim * out_dim, T(0)), bias(out_dim, T(0)) {}
};

inline constexpr std::size_t kSaeLayerCount = 6;

template <class T>
struct SaeParams {
  SaeShape shape;
  DenseLayer<T> gate_squeeze;  // d -> d/r
  DenseLayer<T> gate_excite;   // d/r -> d
  DenseLayer<T> enc_hidden;    // d -> hidden
  DenseLayer<T> enc_latent;    // hidden -> latent
  DenseLayer<T> dec_hidden;    // latent -> hidden
  DenseLayer<T> dec_output;    // hidden -> d

  SaeParams() = default;
  explicit SaeParams(const SaeShape& s);  // all zeros

  // Fixed serialisation order: gate, encoder, decoder.
  std::array<DenseLayer<T>*, kSaeLayerCount> layers();
  std::array<const DenseLayer<T>*, kSaeLayerCount> layers() const;

  std::size_t parameter_count() const;
  void set_zero();
  bool all_finite() const;
};

// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
SaeParams<float> init_params(const SaeShape& shape, std::uint64_t seed);

template <class To, class From>
SaeParams<To> convert_params(const SaeParams<From>& p);

// Intermediate values of one forward pass, kept for backward().
template <class T>
struct SaeActivations {
  std::vector<T> input;
  std::vector<T> gate_pre, gate_hidden;  // W1 x + b1, relu of it
  std::vector<T> gate_logit, gate;       // W2 . + b2, sigmoid of it
  std::vector<T> gated;
  std::vector<T> enc_pre, enc_act;
  std::vector<T> latent_pre, latent;
  std::vector<T> dec_pre, dec_act;
  std::vector<T> recon;

  explicit SaeActivations(const SaeShape& s);
};

// Returns x * g.
template <class T>
std::vector<T> attention_gate(const SaeParams<T>& p, std::span<const T> x);

template <class T>
void forward(const SaeParams<T>& p, std::span<const T> x, SaeActivations<T>& acts);

// mean over coordinates of (x - x^)^2 plus lambda * ||z||_1, summed in double.
template <class T>
double sae_loss(std::span<const T> x, std::span<const T> recon, std::span<const T> latent, double lambda);

// Adds the gradient of sae_loss at `acts` to `grads`. The L1 subgradient uses
// sign(0) = 0. When input_grad is non-null it receives dL/dx, including the
// reconstruction target, both factors of the gate product and the gate path.
template <class T>
void backward(const SaeParams<T>& p, const SaeActivations<T>& acts, double lambda, SaeParams<T>& grads,
              std::vector<T>* input_grad = nullptr);

// ---- production model ---------------------------------------------------

struct SaeModel {
  SaeParams<float> params;
  std::uint64_t best_epoch = 0;
  double best_val_mse = 0.0;

  const SaeShape& shape() const { return params.shape; }
};

// Reconstruction MSE of one slide vector (no sparsity term). Larger = more abnormal.
double reconstruction_score(const SaeModel& model, std::span<const float> x);

}  // namespace toxscreen
