#pragma once

// The trainable network kinds and the per-sample objectives they are fitted
// with. sample_loss() is generic over double / ad::Var.

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "peakcast/autodiff.hpp"
#include "peakcast/error.hpp"
#include "peakcast/loss.hpp"
#include "peakcast/nn.hpp"

namespace peakcast {

using Network = std::variant<nn::Mlp, nn::LstmRegressor, nn::EvtHead>;

enum class Objective { mse, gpd_nll };

struct LossSpec {
  Objective objective = Objective::mse;
  double threshold = 0.0;  // u, used by gpd_nll
};

std::span<double> parameters(Network& net);
std::span<const double> parameters(const Network& net);
std::vector<std::uint8_t> weight_mask(const Network& net);
std::size_t input_width(const Network& net);
/// 1 for regressors, 2 (sigma, xi) for the EVT head.
std::size_t output_width(const Network& net);

template <class T>
T sample_loss(const Network& net, std::span<const T> params, std::span<const T> x, double y, const LossSpec& spec) {
  using namespace peakcast::ad;
  if (spec.objective == Objective::gpd_nll) {
    const auto* head = std::get_if<nn::EvtHead>(&net);
    if (head == nullptr) throw Error(ErrorKind::InvalidParameter, "gpd_nll objective needs an EVT head");
    const auto [sigma, xi] = head->forward<T>(params, x);
    return loss::gpd_nll(sigma, xi, y, spec.threshold);
  }
  if (const auto* mlp = std::get_if<nn::Mlp>(&net)) {
    if (mlp->output_width() != 1) throw Error(ErrorKind::DimensionMismatch, "mse objective needs a scalar output");
    const T e = mlp->forward<T>(params, x)[0] - y;
    return e * e;
  }
  if (const auto* lstm = std::get_if<nn::LstmRegressor>(&net)) {
    const T e = lstm->predict<T>(params, x) - y;
    return e * e;
  }
  throw Error(ErrorKind::InvalidParameter, "mse objective does not apply to an EVT head");
}

/// Network outputs for one input row (length output_width()).
void predict_row(const Network& net, std::span<const double> params, std::span<const double> x, std::span<double> out);

}  // namespace peakcast
