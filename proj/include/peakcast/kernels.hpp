#pragma once

// Data-parallel kernels over dataset rows. Each row is differentiated on its
// own thread-local tape; per-row results are reduced serially in row order,
// so the parallel and serial versions agree bit-for-bit for any thread count.

#include <span>
#include <vector>

#include "peakcast/data.hpp"
#include "peakcast/model.hpp"

namespace peakcast::kernels {

struct BatchGradient {
  double loss = 0.0;  // mean data loss over the rows
  std::vector<double> grad;
};

/// Mean loss and gradient over `rows` of `ds`. `masks`, when non-empty, holds
/// one dropout mask of ds.lags entries per selected row, applied to inputs.
BatchGradient batch_gradient(const Network& net, std::span<const double> params, const data::SupervisedSet& ds,
                             std::span<const std::size_t> rows, const LossSpec& spec,
                             std::span<const double> masks = {});
BatchGradient batch_gradient_serial(const Network& net, std::span<const double> params, const data::SupervisedSet& ds,
                                    std::span<const std::size_t> rows, const LossSpec& spec,
                                    std::span<const double> masks = {});

/// Mean loss over every row of `ds` (no dropout).
double dataset_loss(const Network& net, std::span<const double> params, const data::SupervisedSet& ds,
                    const LossSpec& spec);
double dataset_loss_serial(const Network& net, std::span<const double> params, const data::SupervisedSet& ds,
                           const LossSpec& spec);

/// Network outputs for each row of a row-major input matrix with `width`
/// columns; result is rows x output_width(net).
std::vector<double> predict(const Network& net, std::span<const double> params, std::span<const double> inputs,
                            std::size_t width);
std::vector<double> predict_serial(const Network& net, std::span<const double> params, std::span<const double> inputs,
                                   std::size_t width);

}  // namespace peakcast::kernels
