#include "peakcast/nn.hpp"

#include <cmath>

namespace peakcast::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  throw Error(ErrorKind::InvalidParameter, "unknown activation '" + std::string(name) + "'");
}

void glorot_fill(std::span<double> weights, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-r, r);
  for (double& w : weights) w = dist(rng);
}

Mlp::Mlp(std::vector<LayerShape> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw Error(ErrorKind::DimensionMismatch, "mlp needs at least one layer");
  std::size_t total = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].in == 0 || layers_[i].out == 0) throw Error(ErrorKind::DimensionMismatch, "zero-width layer");
    if (i > 0 && layers_[i].in != layers_[i - 1].out) {
      throw Error(ErrorKind::DimensionMismatch, "layer " + std::to_string(i) + " input width does not match previous output");
    }
    total += layers_[i].param_count();
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::make(std::span<const std::size_t> widths, Activation hidden, Activation output) {
  if (widths.size() < 2) throw Error(ErrorKind::DimensionMismatch, "mlp widths need input and output");
  std::vector<LayerShape> layers;
  for (std::size_t i = 1; i < widths.size(); ++i) {
    layers.push_back({widths[i - 1], widths[i], i + 1 == widths.size() ? output : hidden});
  }
  return Mlp(std::move(layers));
}

void Mlp::set_params(std::vector<double> params) {
  if (params.size() != params_.size()) throw Error(ErrorKind::DimensionMismatch, "mlp parameter count");
  params_ = std::move(params);
}

DenseLayer Mlp::layer(std::size_t i) const {
  std::size_t offset = 0;
  for (std::size_t l = 0; l < i; ++l) offset += layers_[l].param_count();
  const LayerShape& s = layers_.at(i);
  DenseLayer out{s, {}, {}};
  out.weights.assign(params_.begin() + offset, params_.begin() + offset + s.in * s.out);
  out.bias.assign(params_.begin() + offset + s.in * s.out, params_.begin() + offset + s.param_count());
  return out;
}

void Mlp::set_layer(std::size_t i, const DenseLayer& layer) {
  const LayerShape& s = layers_.at(i);
  if (layer.weights.size() != s.in * s.out || layer.bias.size() != s.out) {
    throw Error(ErrorKind::DimensionMismatch, "dense layer shape");
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l < i; ++l) offset += layers_[l].param_count();
  std::copy(layer.weights.begin(), layer.weights.end(), params_.begin() + offset);
  std::copy(layer.bias.begin(), layer.bias.end(), params_.begin() + offset + s.in * s.out);
}

std::vector<std::uint8_t> Mlp::weight_mask() const {
  std::vector<std::uint8_t> mask;
  mask.reserve(params_.size());
  for (const LayerShape& s : layers_) {
    mask.insert(mask.end(), s.in * s.out, 1);
    mask.insert(mask.end(), s.out, 0);
  }
  return mask;
}

void Mlp::init_glorot(Rng& rng) {
  std::size_t offset = 0;
  for (const LayerShape& s : layers_) {
    glorot_fill(std::span<double>(params_).subspan(offset, s.in * s.out), s.in, s.out, rng);
    std::fill(params_.begin() + offset + s.in * s.out, params_.begin() + offset + s.param_count(), 0.0);
    offset += s.param_count();
  }
}

LstmCell::LstmCell(std::size_t input_size, std::size_t hidden_size)
    : input_size_(input_size), hidden_size_(hidden_size) {
  if (input_size == 0 || hidden_size == 0) throw Error(ErrorKind::DimensionMismatch, "lstm sizes must be positive");
}

std::size_t LstmCell::param_count() const { return 4 * hidden_size_ * concat_size() + 4 * hidden_size_; }

void LstmCell::init_glorot(std::span<double> params, Rng& rng) const {
  const std::size_t n = concat_size();
  const std::size_t H = hidden_size_;
  for (std::size_t g = 0; g < 3; ++g) glorot_fill(params.subspan(g * H * n, H * n), n, H, rng);
  glorot_fill(params.subspan(candidate_weights_offset(), H * n), n, H, rng);
  std::fill(params.begin() + gate_bias_offset(), params.begin() + candidate_weights_offset(), 0.0);
  std::fill(params.begin() + candidate_bias_offset(), params.begin() + param_count(), 0.0);
}

std::vector<std::uint8_t> LstmCell::weight_mask() const {
  std::vector<std::uint8_t> mask(param_count(), 0);
  std::fill(mask.begin(), mask.begin() + gate_bias_offset(), 1);
  std::fill(mask.begin() + candidate_weights_offset(), mask.begin() + candidate_bias_offset(), 1);
  return mask;
}

LstmRegressor::LstmRegressor(std::size_t input_size, std::size_t hidden_size)
    : cell_(input_size, hidden_size), params_(cell_.param_count() + hidden_size + 1, 0.0) {}

void LstmRegressor::set_params(std::vector<double> params) {
  if (params.size() != params_.size()) throw Error(ErrorKind::DimensionMismatch, "lstm parameter count");
  params_ = std::move(params);
}

std::vector<std::uint8_t> LstmRegressor::weight_mask() const {
  auto mask = cell_.weight_mask();
  mask.insert(mask.end(), cell_.hidden_size(), 1);
  mask.push_back(0);
  return mask;
}

DenseLayer LstmRegressor::readout() const {
  const std::size_t H = cell_.hidden_size();
  DenseLayer out{{H, 1, Activation::identity}, {}, {}};
  out.weights.assign(params_.begin() + readout_offset(), params_.begin() + readout_offset() + H);
  out.bias = {params_[readout_offset() + H]};
  return out;
}

void LstmRegressor::set_readout(const DenseLayer& layer) {
  const std::size_t H = cell_.hidden_size();
  if (layer.weights.size() != H || layer.bias.size() != 1) throw Error(ErrorKind::DimensionMismatch, "lstm readout shape");
  std::copy(layer.weights.begin(), layer.weights.end(), params_.begin() + readout_offset());
  params_[readout_offset() + H] = layer.bias[0];
}

void LstmRegressor::init_glorot(Rng& rng) {
  cell_.init_glorot(std::span<double>(params_).first(cell_.param_count()), rng);
  const std::size_t H = cell_.hidden_size();
  glorot_fill(std::span<double>(params_).subspan(readout_offset(), H), H, 1, rng);
  params_.back() = 0.0;
}

EvtHead::EvtHead(std::size_t lags, std::size_t hidden, Activation hidden_activation) {
  const std::size_t widths[] = {lags, hidden, 2};
  backbone_ = Mlp::make(widths, hidden_activation, Activation::identity);
}

EvtHead::EvtHead(Mlp backbone) : backbone_(std::move(backbone)) {
  if (backbone_.output_width() != 2) throw Error(ErrorKind::DimensionMismatch, "evt head backbone must emit 2 outputs");
}

void EvtHead::set_excess_scale(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorKind::InvalidParameter, "excess scale must be positive");
  excess_scale_ = s;
}

void EvtHead::init_glorot(Rng& rng) {
  backbone_.init_glorot(rng);
  const std::size_t last = backbone_.shapes().size() - 1;
  DenseLayer out = backbone_.layer(last);
  std::fill(out.weights.begin() + static_cast<std::ptrdiff_t>(out.shape.in), out.weights.end(), 0.0);
  backbone_.set_layer(last, out);
}

std::vector<double> dropout_mask(double p_drop, std::size_t dim, Rng& rng) {
  if (!(p_drop >= 0.0 && p_drop < 1.0)) {
    throw Error(ErrorKind::InvalidProbability, "dropout probability must lie in [0, 1)");
  }
  std::vector<double> mask(dim, 1.0);
  if (p_drop == 0.0) return mask;
  const double keep = 1.0 / (1.0 - p_drop);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double& m : mask) m = unit(rng) < p_drop ? 0.0 : keep;
  return mask;
}

}  // namespace peakcast::nn
