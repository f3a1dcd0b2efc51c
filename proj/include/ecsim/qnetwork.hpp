#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "ecsim/random.hpp"

namespace ecsim {

inline constexpr std::size_t kStateDim = 3;
inline constexpr std::size_t kHidden1 = 24;
inline constexpr std::size_t kHidden2 = 12;
inline constexpr std::size_t kActionCount = 4;

using State = std::array<double, kStateDim>;
using QValues = std::array<double, kActionCount>;

struct LayerShape {
  std::size_t in;
  std::size_t out;
};

inline constexpr std::array<LayerShape, 3> kLayerShapes{
    {{kStateDim, kHidden1}, {kHidden1, kHidden2}, {kHidden2, kActionCount}}};

// Start of layer `layer`'s weights in the flat parameter vector.
constexpr std::size_t weight_offset(std::size_t layer) {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += kLayerShapes[l].out * (kLayerShapes[l].in + 1);
  return off;
}

constexpr std::size_t bias_offset(std::size_t layer) {
  return weight_offset(layer) + kLayerShapes[layer].out * kLayerShapes[layer].in;
}

// Fully connected 3 -> 24 (ReLU) -> 12 (ReLU) -> 4 (linear) value network.
//
// All parameters live in one flat vector so the optimizer and the gradient
// share a layout. Per layer: weights (out x in, row-major) then biases.
class QNetwork {
 public:
  static constexpr const auto& kLayers = kLayerShapes;
  static constexpr std::size_t kParameterCount = weight_offset(kLayerShapes.size());

  // All parameters zero.
  QNetwork() : params_(kParameterCount, 0.0) {}

  // Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static QNetwork random(Rng& rng) {
    QNetwork net;
    for (std::size_t l = 0; l < kLayers.size(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(kLayers[l].in));
      const std::size_t begin = weight_offset(l), end = weight_offset(l + 1);
      for (std::size_t i = begin; i < end; ++i) net.params_[i] = rng.uniform(-bound, bound);
    }
    return net;
  }

  std::span<double> weights(std::size_t layer) {
    return {params_.data() + weight_offset(layer), kLayers[layer].out * kLayers[layer].in};
  }
  std::span<const double> weights(std::size_t layer) const {
    return {params_.data() + weight_offset(layer), kLayers[layer].out * kLayers[layer].in};
  }
  std::span<double> biases(std::size_t layer) {
    return {params_.data() + bias_offset(layer), kLayers[layer].out};
  }
  std::span<const double> biases(std::size_t layer) const {
    return {params_.data() + bias_offset(layer), kLayers[layer].out};
  }

  std::vector<double>& parameters() noexcept { return params_; }
  const std::vector<double>& parameters() const noexcept { return params_; }

  bool all_finite() const {
    for (double p : params_)
      if (!std::isfinite(p)) return false;
    return true;
  }

  // Activations kept for backprop.
  struct Trace {
    State input{};
    std::array<double, kHidden1> h1{};
    std::array<double, kHidden2> h2{};
    QValues q{};
  };

  QValues forward(const State& x) const { return forward_trace(x).q; }

  Trace forward_trace(const State& x) const {
    Trace t;
    t.input = x;
    dense_relu(0, std::span<const double>(t.input), std::span<double>(t.h1));
    dense_relu(1, std::span<const double>(t.h1), std::span<double>(t.h2));
    dense(2, std::span<const double>(t.h2), std::span<double>(t.q));
    return t;
  }

  // Adds d(loss)/d(params) into `grad` given d(loss)/d(q) for one input.
  void backward(const Trace& t, const QValues& dq, std::span<double> grad) const {
    std::array<double, kHidden2> d2{};
    std::array<double, kHidden1> d1{};
    backprop_layer(2, std::span<const double>(t.h2), std::span<const double>(dq),
                   std::span<double>(d2), grad);
    for (std::size_t i = 0; i < kHidden2; ++i)
      if (t.h2[i] <= 0.0) d2[i] = 0.0;
    backprop_layer(1, std::span<const double>(t.h1), std::span<const double>(d2),
                   std::span<double>(d1), grad);
    for (std::size_t i = 0; i < kHidden1; ++i)
      if (t.h1[i] <= 0.0) d1[i] = 0.0;
    backprop_layer(0, std::span<const double>(t.input), std::span<const double>(d1), {}, grad);
  }

  friend bool operator==(const QNetwork&, const QNetwork&) = default;

 private:
  void dense(std::size_t layer, std::span<const double> in, std::span<double> out) const {
    const auto w = weights(layer);
    const auto b = biases(layer);
    const std::size_t n_in = kLayers[layer].in;
    for (std::size_t o = 0; o < out.size(); ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < n_in; ++i) acc += w[o * n_in + i] * in[i];
      out[o] = acc;
    }
  }

  void dense_relu(std::size_t layer, std::span<const double> in, std::span<double> out) const {
    dense(layer, in, out);
    for (double& v : out) v = v > 0.0 ? v : 0.0;
  }

  // Gradient of one affine layer. `d_out` is the upstream gradient w.r.t. the
  // layer output; `d_in` (optional) receives the gradient w.r.t. its input.
  void backprop_layer(std::size_t layer, std::span<const double> in,
                      std::span<const double> d_out, std::span<double> d_in,
                      std::span<double> grad) const {
    const auto w = weights(layer);
    const std::size_t n_in = kLayers[layer].in;
    const std::size_t w_off = weight_offset(layer), b_off = bias_offset(layer);
    for (std::size_t o = 0; o < kLayers[layer].out; ++o) {
      const double g = d_out[o];
      if (g == 0.0) continue;
      grad[b_off + o] += g;
      for (std::size_t i = 0; i < n_in; ++i) {
        grad[w_off + o * n_in + i] += g * in[i];
        if (!d_in.empty()) d_in[i] += g * w[o * n_in + i];
      }
    }
  }

  std::vector<double> params_;
};

inline std::size_t argmax(const QValues& q) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < q.size(); ++a)
    if (q[a] > q[best]) best = a;
  return best;
}

// Adam over a flat parameter vector.
struct AdamOptimizer {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<double> m = std::vector<double>(QNetwork::kParameterCount, 0.0);
  std::vector<double> v = std::vector<double>(QNetwork::kParameterCount, 0.0);
  std::size_t steps = 0;

  void step(std::vector<double>& params, std::span<const double> grad) {
    if (grad.size() != params.size() || m.size() != params.size())
      throw std::invalid_argument("AdamOptimizer: size mismatch");
    ++steps;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      params[i] -= learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + epsilon);
    }
  }

  friend bool operator==(const AdamOptimizer&, const AdamOptimizer&) = default;
};

}  // namespace ecsim
