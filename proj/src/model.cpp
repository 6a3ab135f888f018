#include "peakcast/model.hpp"

namespace peakcast {

std::span<double> parameters(Network& net) {
  return std::visit([](auto& m) { return m.params(); }, net);
}

std::span<const double> parameters(const Network& net) {
  return std::visit([](const auto& m) { return std::span<const double>(m.params()); }, net);
}

std::vector<std::uint8_t> weight_mask(const Network& net) {
  if (const auto* head = std::get_if<nn::EvtHead>(&net)) return head->backbone().weight_mask();
  if (const auto* lstm = std::get_if<nn::LstmRegressor>(&net)) return lstm->weight_mask();
  return std::get<nn::Mlp>(net).weight_mask();
}

std::size_t input_width(const Network& net) {
  if (const auto* head = std::get_if<nn::EvtHead>(&net)) return head->input_width();
  if (const auto* lstm = std::get_if<nn::LstmRegressor>(&net)) return lstm->cell().input_size();
  return std::get<nn::Mlp>(net).input_width();
}

std::size_t output_width(const Network& net) {
  if (std::holds_alternative<nn::EvtHead>(net)) return 2;
  if (std::holds_alternative<nn::LstmRegressor>(net)) return 1;
  return std::get<nn::Mlp>(net).output_width();
}

void predict_row(const Network& net, std::span<const double> params, std::span<const double> x, std::span<double> out) {
  if (const auto* head = std::get_if<nn::EvtHead>(&net)) {
    const auto [sigma, xi] = head->forward<double>(params, x);
    out[0] = sigma;
    out[1] = xi;
  } else if (const auto* lstm = std::get_if<nn::LstmRegressor>(&net)) {
    out[0] = lstm->predict<double>(params, x);
  } else {
    const auto y = std::get<nn::Mlp>(net).forward<double>(params, x);
    std::copy(y.begin(), y.end(), out.begin());
  }
}

}  // namespace peakcast
