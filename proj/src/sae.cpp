#include "toxscreen/sae.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "toxscreen/error.hpp"
#include "toxscreen/rng.hpp"
#include "toxscreen/simd/kernels.hpp"

namespace toxscreen {
namespace {

template <class T>
T dot_n(const T* a, const T* b, std::size_t n) {
  if constexpr (std::is_same_v<T, float>) {
    return simd::dot(a, b, n);
  } else {
    T s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
  }
}

template <class T>
void axpy_n(T alpha, const T* x, T* y, std::size_t n) {
  if constexpr (std::is_same_v<T, float>) {
    simd::axpy(alpha, x, y, n);
  } else {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
  }
}

// out = W in + b
template <class T>
void affine(const DenseLayer<T>& layer, const T* in, T* out) {
  for (std::size_t o = 0; o < layer.out; ++o) {
    out[o] = dot_n(layer.weight.data() + o * layer.in, in, layer.in) + layer.bias[o];
  }
}

template <class T>
void relu(const std::vector<T>& pre, std::vector<T>& act) {
  for (std::size_t i = 0; i < pre.size(); ++i) act[i] = pre[i] > T(0) ? pre[i] : T(0);
}

template <class T>
T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

// Accumulates dW += g (x) in, db += g, and (optionally) grad_in += W^T g.
template <class T>
void affine_backward(const DenseLayer<T>& layer, const T* in, const T* g, DenseLayer<T>& grad, T* grad_in) {
  for (std::size_t o = 0; o < layer.out; ++o) {
    const T go = g[o];
    if (go == T(0)) continue;
    grad.bias[o] += go;
    axpy_n(go, in, grad.weight.data() + o * layer.in, layer.in);
    if (grad_in) axpy_n(go, layer.weight.data() + o * layer.in, grad_in, layer.in);
  }
}

template <class T>
void mask_relu(const std::vector<T>& pre, std::vector<T>& g) {
  for (std::size_t i = 0; i < pre.size(); ++i) {
    if (!(pre[i] > T(0))) g[i] = T(0);
  }
}

}  // namespace

void SaeShape::validate() const {
  if (input_dim == 0 || reduction == 0 || hidden == 0 || latent == 0) {
    fail(ErrorKind::validation, "autoencoder dimensions and reduction ratio must be positive");
  }
}

template <class T>
SaeParams<T>::SaeParams(const SaeShape& s)
    : shape(s),
      gate_squeeze(s.input_dim, s.attention_dim()),
      gate_excite(s.attention_dim(), s.input_dim),
      enc_hidden(s.input_dim, s.hidden),
      enc_latent(s.hidden, s.latent),
      dec_hidden(s.latent, s.hidden),
      dec_output(s.hidden, s.input_dim) {}

template <class T>
std::array<DenseLayer<T>*, kSaeLayerCount> SaeParams<T>::layers() {
  return {&gate_squeeze, &gate_excite, &enc_hidden, &enc_latent, &dec_hidden, &dec_output};
}

template <class T>
std::array<const DenseLayer<T>*, kSaeLayerCount> SaeParams<T>::layers() const {
  return {&gate_squeeze, &gate_excite, &enc_hidden, &enc_latent, &dec_hidden, &dec_output};
}

template <class T>
std::size_t SaeParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* l : layers()) n += l->weight.size() + l->bias.size();
  return n;
}

template <class T>
void SaeParams<T>::set_zero() {
  for (auto* l : layers()) {
    std::fill(l->weight.begin(), l->weight.end(), T(0));
    std::fill(l->bias.begin(), l->bias.end(), T(0));
  }
}

template <class T>
bool SaeParams<T>::all_finite() const {
  for (const auto* l : layers()) {
    for (T v : l->weight) {
      if (!std::isfinite(v)) return false;
    }
    for (T v : l->bias) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

SaeParams<float> init_params(const SaeShape& shape, std::uint64_t seed) {
  shape.validate();
  SaeParams<float> p(shape);
  Rng rng(seed);
  for (auto* l : p.layers()) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l->in + l->out));
    for (float& w : l->weight) w = static_cast<float>(rng.uniform(-limit, limit));
  }
  return p;
}

template <class To, class From>
SaeParams<To> convert_params(const SaeParams<From>& p) {
  SaeParams<To> out(p.shape);
  const auto src = p.layers();
  const auto dst = out.layers();
  for (std::size_t i = 0; i < kSaeLayerCount; ++i) {
    std::transform(src[i]->weight.begin(), src[i]->weight.end(), dst[i]->weight.begin(),
                   [](From v) { return static_cast<To>(v); });
    std::transform(src[i]->bias.begin(), src[i]->bias.end(), dst[i]->bias.begin(),
                   [](From v) { return static_cast<To>(v); });
  }
  return out;
}

template <class T>
SaeActivations<T>::SaeActivations(const SaeShape& s)
    : input(s.input_dim),
      gate_pre(s.attention_dim()),
      gate_hidden(s.attention_dim()),
      gate_logit(s.input_dim),
      gate(s.input_dim),
      gated(s.input_dim),
      enc_pre(s.hidden),
      enc_act(s.hidden),
      latent_pre(s.latent),
      latent(s.latent),
      dec_pre(s.hidden),
      dec_act(s.hidden),
      recon(s.input_dim) {}

template <class T>
std::vector<T> attention_gate(const SaeParams<T>& p, std::span<const T> x) {
  SaeActivations<T> acts(p.shape);
  forward(p, x, acts);
  return acts.gated;
}

template <class T>
void forward(const SaeParams<T>& p, std::span<const T> x, SaeActivations<T>& a) {
  if (x.size() != p.shape.input_dim) {
    fail(ErrorKind::data, "input has dimension " + std::to_string(x.size()) + ", model expects " +
                              std::to_string(p.shape.input_dim));
  }
  std::copy(x.begin(), x.end(), a.input.begin());

  affine(p.gate_squeeze, x.data(), a.gate_pre.data());
  relu(a.gate_pre, a.gate_hidden);
  affine(p.gate_excite, a.gate_hidden.data(), a.gate_logit.data());
  for (std::size_t i = 0; i < x.size(); ++i) {
    a.gate[i] = sigmoid(a.gate_logit[i]);
    a.gated[i] = x[i] * a.gate[i];
  }

  affine(p.enc_hidden, a.gated.data(), a.enc_pre.data());
  relu(a.enc_pre, a.enc_act);
  affine(p.enc_latent, a.enc_act.data(), a.latent_pre.data());
  relu(a.latent_pre, a.latent);

  affine(p.dec_hidden, a.latent.data(), a.dec_pre.data());
  relu(a.dec_pre, a.dec_act);
  affine(p.dec_output, a.dec_act.data(), a.recon.data());
}

template <class T>
double sae_loss(std::span<const T> x, std::span<const T> recon, std::span<const T> latent, double lambda) {
  if (x.size() != recon.size() || x.empty()) fail(ErrorKind::data, "loss: input and reconstruction differ in size");
  double se = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(recon[i]) - static_cast<double>(x[i]);
    se += d * d;
  }
  double l1 = 0;
  for (T v : latent) l1 += std::abs(static_cast<double>(v));
  return se / static_cast<double>(x.size()) + lambda * l1;
}

template <class T>
void backward(const SaeParams<T>& p, const SaeActivations<T>& a, double lambda, SaeParams<T>& grads,
              std::vector<T>* input_grad) {
  const SaeShape& s = p.shape;
  const T scale = T(2) / static_cast<T>(s.input_dim);

  std::vector<T> g_recon(s.input_dim);
  for (std::size_t i = 0; i < s.input_dim; ++i) g_recon[i] = scale * (a.recon[i] - a.input[i]);

  std::vector<T> g_dec(s.hidden, T(0));
  affine_backward(p.dec_output, a.dec_act.data(), g_recon.data(), grads.dec_output, g_dec.data());
  mask_relu(a.dec_pre, g_dec);

  std::vector<T> g_latent(s.latent, T(0));
  affine_backward(p.dec_hidden, a.latent.data(), g_dec.data(), grads.dec_hidden, g_latent.data());
  const T lam = static_cast<T>(lambda);
  for (std::size_t i = 0; i < s.latent; ++i) {
    const T z = a.latent[i];
    g_latent[i] += lam * (z > T(0) ? T(1) : (z < T(0) ? T(-1) : T(0)));
  }
  mask_relu(a.latent_pre, g_latent);

  std::vector<T> g_enc(s.hidden, T(0));
  affine_backward(p.enc_latent, a.enc_act.data(), g_latent.data(), grads.enc_latent, g_enc.data());
  mask_relu(a.enc_pre, g_enc);

  std::vector<T> g_gated(s.input_dim, T(0));
  affine_backward(p.enc_hidden, a.gated.data(), g_enc.data(), grads.enc_hidden, g_gated.data());

  // xg = x * g: dL/dg = dL/dxg * x, then through the sigmoid.
  std::vector<T> g_logit(s.input_dim);
  for (std::size_t i = 0; i < s.input_dim; ++i) {
    const T gi = a.gate[i];
    g_logit[i] = g_gated[i] * a.input[i] * gi * (T(1) - gi);
  }

  const std::size_t r = s.attention_dim();
  std::vector<T> g_gate_hidden(r, T(0));
  affine_backward(p.gate_excite, a.gate_hidden.data(), g_logit.data(), grads.gate_excite, g_gate_hidden.data());
  mask_relu(a.gate_pre, g_gate_hidden);

  if (input_grad) {
    input_grad->assign(s.input_dim, T(0));
    affine_backward(p.gate_squeeze, a.input.data(), g_gate_hidden.data(), grads.gate_squeeze, input_grad->data());
    for (std::size_t i = 0; i < s.input_dim; ++i) {
      (*input_grad)[i] += g_gated[i] * a.gate[i] - g_recon[i];
    }
  } else {
    affine_backward(p.gate_squeeze, a.input.data(), g_gate_hidden.data(), grads.gate_squeeze, static_cast<T*>(nullptr));
  }
}

double reconstruction_score(const SaeModel& model, std::span<const float> x) {
  SaeActivations<float> acts(model.shape());
  forward(model.params, x, acts);
  return simd::squared_distance(x.data(), acts.recon.data(), x.size()) / static_cast<double>(x.size());
}

template struct SaeParams<float>;
template struct SaeParams<double>;
template struct SaeActivations<float>;
template struct SaeActivations<double>;
template SaeParams<double> convert_params<double, float>(const SaeParams<float>&);
template SaeParams<float> convert_params<float, double>(const SaeParams<double>&);
template SaeParams<float> convert_params<float, float>(const SaeParams<float>&);
template SaeParams<double> convert_params<double, double>(const SaeParams<double>&);
template std::vector<float> attention_gate<float>(const SaeParams<float>&, std::span<const float>);
template std::vector<double> attention_gate<double>(const SaeParams<double>&, std::span<const double>);
template void forward<float>(const SaeParams<float>&, std::span<const float>, SaeActivations<float>&);
template void forward<double>(const SaeParams<double>&, std::span<const double>, SaeActivations<double>&);
template double sae_loss<float>(std::span<const float>, std::span<const float>, std::span<const float>, double);
template double sae_loss<double>(std::span<const double>, std::span<const double>, std::span<const double>, double);
template void backward<float>(const SaeParams<float>&, const SaeActivations<float>&, double, SaeParams<float>&,
                              std::vector<float>*);
template void backward<double>(const SaeParams<double>&, const SaeActivations<double>&, double, SaeParams<double>&,
                               std::vector<double>*);

}  // namespace toxscreen
