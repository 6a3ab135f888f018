#include "peakcast/loss.hpp"

namespace peakcast::loss {

LossValue batch_nll(const nn::EvtHead& head, std::span<const double> inputs, std::span<const double> targets, double u) {
  if (targets.empty()) throw Error(ErrorKind::EmptyBatch, "batch_nll on empty batch");
  const std::size_t p = head.input_width();
  if (inputs.size() != targets.size() * p) throw Error(ErrorKind::DimensionMismatch, "batch_nll input rows");
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto [sigma, xi] = head.forward(inputs.subspan(i * p, p));
    try {
      total += gpd_nll(sigma, xi, targets[i], u);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::OutOfSupport) throw;
      throw Error(ErrorKind::OutOfSupport, "batch index " + std::to_string(i) + ": " + e.what());
    }
  }
  const double mean = total / static_cast<double>(targets.size());
  return {mean, mean, 0.0};
}

double mse_loss(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) throw Error(ErrorKind::DimensionMismatch, "mse_loss lengths differ");
  if (preds.empty()) throw Error(ErrorKind::EmptyBatch, "mse_loss on empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i] - targets[i];
    acc += e * e;
  }
  return acc / static_cast<double>(preds.size());
}

double l2_penalty(std::span<const double> params, std::span<const std::uint8_t> mask, double lambda) {
  if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidParameter, "penalty lambda must be >= 0");
  return l2_penalty<double>(params, mask, lambda);
}

}  // namespace peakcast::loss
