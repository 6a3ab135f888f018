#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "peakcast/autodiff.hpp"
#include "peakcast/error.hpp"
#include "peakcast/evt.hpp"
#include "peakcast/nn.hpp"

namespace peakcast::loss {

struct LossValue {
  double total = 0.0;
  double data_term = 0.0;
  double penalty_term = 0.0;
};

/// -log h(y | sigma, xi) for an observation at or above the threshold u:
/// log sigma + (1/xi + 1) log(1 + xi (y-u)/sigma), tending to
/// log sigma + (y-u)/sigma in the exponential limit.
template <class T>
T gpd_nll(const T& sigma, const T& xi, double y, double u) {
  using namespace peakcast::ad;
  const double z = y - u;
  const double s = value(sigma);
  const double k = value(xi);
  if (!(s > 0.0) || !(k > -1.0 && k < 1.0)) {
    throw Error(ErrorKind::OutOfSupport, "gpd_nll needs sigma > 0 and |xi| < 1");
  }
  if (!(z >= 0.0)) throw Error(ErrorKind::OutOfSupport, "gpd_nll observation below threshold");
  if (std::abs(k) < evt::kExponentialSwitch) {
    // Series in xi through second order: exact at xi = 0 and keeps d/dxi.
    const T w = z / sigma;
    return log(sigma) + w + xi * (w - 0.5 * w * w) + xi * xi * (w * w * w / 3.0 - 0.5 * w * w);
  }
  const T a = xi * z / sigma;
  if (!(1.0 + value(a) > 0.0)) throw Error(ErrorKind::OutOfSupport, "1 + xi (y-u)/sigma <= 0");
  return log(sigma) + (1.0 / xi + 1.0) * log1p(a);
}

/// Mean GPD NLL of `targets` under the head's (sigma, xi) at each input row.
/// `inputs` is row-major with head.input_width() columns. No penalty.
LossValue batch_nll(const nn::EvtHead& head, std::span<const double> inputs, std::span<const double> targets, double u);

double mse_loss(std::span<const double> preds, std::span<const double> targets);

/// lambda * sum of squared weight-matrix entries; mask marks weights (biases excluded).
template <class T>
T l2_penalty(std::span<const T> params, std::span<const std::uint8_t> mask, double lambda) {
  if (params.size() != mask.size()) throw Error(ErrorKind::DimensionMismatch, "penalty mask size");
  T acc = params.empty() ? T{} : params[0] * 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (mask[i]) acc = acc + params[i] * params[i];
  }
  return acc * lambda;
}

double l2_penalty(std::span<const double> params, std::span<const std::uint8_t> mask, double lambda);

}  // namespace peakcast::loss
