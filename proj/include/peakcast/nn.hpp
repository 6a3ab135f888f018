#pragma once

// Feed-forward and LSTM networks. Parameters live in one flat row-major
// vector per model (for each layer: W then b), so a forward pass can be run
// on plain doubles or on recorded ad::Var values with identical arithmetic.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "peakcast/autodiff.hpp"
#include "peakcast/error.hpp"

namespace peakcast::nn {

using Rng = std::mt19937_64;

enum class Activation { identity, relu, sigmoid, tanh };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

template <class T>
T activate(Activation a, const T& x) {
  using namespace peakcast::ad;
  switch (a) {
    case Activation::relu: return relu(x);
    case Activation::sigmoid: return sigmoid(x);
    case Activation::tanh: return tanh(x);
    case Activation::identity: break;
  }
  return x;
}

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::identity;

  std::size_t param_count() const { return in * out + out; }
};

struct DenseLayer {
  LayerShape shape;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out
};

/// Uniform(-r, r) with r = sqrt(6 / (fan_in + fan_out)).
void glorot_fill(std::span<double> weights, std::size_t fan_in, std::size_t fan_out, Rng& rng);

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<LayerShape> layers);

  /// widths = {input, hidden..., output}; hidden layers use `hidden`, the
  /// last layer uses `output`.
  static Mlp make(std::span<const std::size_t> widths, Activation hidden, Activation output = Activation::identity);

  std::size_t input_width() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t output_width() const { return layers_.empty() ? 0 : layers_.back().out; }
  std::size_t hidden_layers() const { return layers_.empty() ? 0 : layers_.size() - 1; }
  std::size_t param_count() const { return params_.size(); }
  const std::vector<LayerShape>& shapes() const { return layers_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  void set_params(std::vector<double> params);

  DenseLayer layer(std::size_t i) const;
  void set_layer(std::size_t i, const DenseLayer& layer);

  /// 1 for weight-matrix entries, 0 for biases.
  std::vector<std::uint8_t> weight_mask() const;

  void init_glorot(Rng& rng);

  template <class T>
  std::vector<T> forward(std::span<const T> params, std::span<const T> x) const;
  std::vector<double> forward(std::span<const double> x) const { return forward<double>(params_, x); }

 private:
  std::vector<LayerShape> layers_;
  std::vector<double> params_;
};

template <class T>
std::vector<T> Mlp::forward(std::span<const T> params, std::span<const T> x) const {
  if (x.size() != input_width()) {
    throw Error(ErrorKind::DimensionMismatch,
                "mlp input has " + std::to_string(x.size()) + " entries, expected " + std::to_string(input_width()));
  }
  if (params.size() != params_.size()) throw Error(ErrorKind::DimensionMismatch, "mlp parameter count");
  std::vector<T> z(x.begin(), x.end());
  std::vector<T> next;
  std::size_t offset = 0;
  for (const LayerShape& s : layers_) {
    const T* w = params.data() + offset;
    const T* b = w + s.in * s.out;
    next.clear();
    next.reserve(s.out);
    for (std::size_t j = 0; j < s.out; ++j) {
      T acc = b[j];
      for (std::size_t k = 0; k < s.in; ++k) acc = acc + w[j * s.in + k] * z[k];
      next.push_back(activate(s.activation, acc));
    }
    offset += s.param_count();
    z.swap(next);
  }
  return z;
}

/// One LSTM cell. Gate rows are stacked (forget, input, output) over the
/// concatenated input [h_prev, x_t].
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(std::size_t input_size, std::size_t hidden_size);

  std::size_t input_size() const { return input_size_; }
  std::size_t hidden_size() const { return hidden_size_; }
  std::size_t param_count() const;

  // Offsets into the flat parameter block.
  std::size_t gate_weights_offset() const { return 0; }
  std::size_t gate_bias_offset() const { return 3 * hidden_size_ * concat_size(); }
  std::size_t candidate_weights_offset() const { return gate_bias_offset() + 3 * hidden_size_; }
  std::size_t candidate_bias_offset() const { return candidate_weights_offset() + hidden_size_ * concat_size(); }
  std::size_t concat_size() const { return hidden_size_ + input_size_; }

  void init_glorot(std::span<double> params, Rng& rng) const;
  std::vector<std::uint8_t> weight_mask() const;

  template <class T>
  void step(std::span<const T> params, std::span<const T> h_prev, std::span<const T> c_prev, std::span<const T> x,
            std::vector<T>& h, std::vector<T>& c) const;

 private:
  std::size_t input_size_ = 0;
  std::size_t hidden_size_ = 0;
};

template <class T>
void LstmCell::step(std::span<const T> params, std::span<const T> h_prev, std::span<const T> c_prev,
                    std::span<const T> x, std::vector<T>& h, std::vector<T>& c) const {
  using namespace peakcast::ad;
  const std::size_t H = hidden_size_;
  if (h_prev.size() != H || c_prev.size() != H || x.size() != input_size_ || params.size() < param_count()) {
    throw Error(ErrorKind::DimensionMismatch, "lstm step dimensions");
  }
  const std::size_t n = concat_size();
  auto input_at = [&](std::size_t k) -> const T& { return k < H ? h_prev[k] : x[k - H]; };
  auto affine = [&](std::size_t w_off, std::size_t b_off, std::size_t row) {
    const T* w = params.data() + w_off + row * n;
    T acc = params[b_off + row];
    for (std::size_t k = 0; k < n; ++k) acc = acc + w[k] * input_at(k);
    return acc;
  };
  h.clear();
  c.clear();
  h.reserve(H);
  c.reserve(H);
  for (std::size_t j = 0; j < H; ++j) {
    const T f = sigmoid(affine(gate_weights_offset(), gate_bias_offset(), j));
    const T i = sigmoid(affine(gate_weights_offset(), gate_bias_offset(), H + j));
    const T o = sigmoid(affine(gate_weights_offset(), gate_bias_offset(), 2 * H + j));
    const T k = tanh(affine(candidate_weights_offset(), candidate_bias_offset(), j));
    const T cj = f * c_prev[j] + i * k;
    h.push_back(o * tanh(cj));
    c.push_back(cj);
  }
}

/// LSTM cell unrolled over a sequence from zero state, followed by a linear
/// readout of the final hidden state.
class LstmRegressor {
 public:
  LstmRegressor() = default;
  LstmRegressor(std::size_t input_size, std::size_t hidden_size);

  const LstmCell& cell() const { return cell_; }
  std::size_t param_count() const { return params_.size(); }
  std::size_t readout_offset() const { return cell_.param_count(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  void set_params(std::vector<double> params);
  std::vector<std::uint8_t> weight_mask() const;

  DenseLayer readout() const;
  void set_readout(const DenseLayer& layer);

  void init_glorot(Rng& rng);

  /// `xs` holds the sequence flattened step-major (seq_len x input_size).
  template <class T>
  T predict(std::span<const T> params, std::span<const T> xs) const;
  double predict(std::span<const double> xs) const { return predict<double>(params_, xs); }

 private:
  LstmCell cell_;
  std::vector<double> params_;
};

template <class T>
T LstmRegressor::predict(std::span<const T> params, std::span<const T> xs) const {
  const std::size_t d = cell_.input_size();
  const std::size_t H = cell_.hidden_size();
  if (xs.empty()) throw Error(ErrorKind::EmptySequence, "lstm input sequence is empty");
  if (xs.size() % d != 0) throw Error(ErrorKind::DimensionMismatch, "lstm sequence length not a multiple of input size");
  if (params.size() != params_.size()) throw Error(ErrorKind::DimensionMismatch, "lstm parameter count");
  // Zero initial state, expressed in T through the readout bias so that no
  // extra tape leaves are needed: 0 * b is exactly 0.
  const T zero = params[readout_offset() + H] * 0.0;
  std::vector<T> h(H, zero), c(H, zero), h_next, c_next;
  for (std::size_t t = 0; t < xs.size() / d; ++t) {
    cell_.step<T>(params, h, c, xs.subspan(t * d, d), h_next, c_next);
    h.swap(h_next);
    c.swap(c_next);
  }
  const T* w = params.data() + readout_offset();
  T out = w[H];
  for (std::size_t k = 0; k < H; ++k) out = out + w[k] * h[k];
  return out;
}

/// Feed-forward backbone p -> hidden -> 2 whose raw outputs are mapped to GPD
/// scale and shape: sigma = s * (softplus(raw0) + 1e-6), xi = tanh(raw1).
/// The fixed excess scale s (default 1) carries the target units, so the
/// network works on O(1) values when excesses are measured in MW.
class EvtHead {
 public:
  static constexpr double kSigmaFloor = 1e-6;

  EvtHead() = default;
  EvtHead(std::size_t lags, std::size_t hidden, Activation hidden_activation = Activation::tanh);
  explicit EvtHead(Mlp backbone);

  const Mlp& backbone() const { return backbone_; }
  Mlp& backbone() { return backbone_; }
  std::size_t input_width() const { return backbone_.input_width(); }
  std::size_t param_count() const { return backbone_.param_count(); }
  std::span<double> params() { return backbone_.params(); }
  std::span<const double> params() const { return backbone_.params(); }
  double excess_scale() const { return excess_scale_; }
  void set_excess_scale(double s);

  /// Glorot backbone with the xi output row zeroed: training starts from the
  /// exponential model (xi = 0), which contains every excess in its support.
  void init_glorot(Rng& rng);

  template <class T>
  std::pair<T, T> forward(std::span<const T> params, std::span<const T> x) const;
  std::pair<double, double> forward(std::span<const double> x) const { return forward<double>(params(), x); }

 private:
  Mlp backbone_;
  double excess_scale_ = 1.0;
};

template <class T>
std::pair<T, T> EvtHead::forward(std::span<const T> params, std::span<const T> x) const {
  using namespace peakcast::ad;
  const std::vector<T> raw = backbone_.forward<T>(params, x);
  return {(softplus(raw[0]) + kSigmaFloor) * excess_scale_, tanh(raw[1])};
}

/// Inverted dropout: each entry 0 with probability p_drop, else 1/(1-p_drop).
std::vector<double> dropout_mask(double p_drop, std::size_t dim, Rng& rng);

}  // namespace peakcast::nn
