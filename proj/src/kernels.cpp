#include "peakcast/kernels.hpp"

#include <exception>
#include <limits>

#include <omp.h>

namespace peakcast::kernels {

namespace {

// Loss and gradient of one row; `grad` receives params.size() entries.
double row_gradient(const Network& net, std::span<const double> params, std::span<const double> x, double y,
                    std::span<const double> mask, const LossSpec& spec, double* grad) {
  thread_local ad::Tape tape;
  thread_local std::vector<double> adjoint;
  thread_local std::vector<double> input;
  tape.clear();
  input.assign(x.begin(), x.end());
  if (!mask.empty()) {
    for (std::size_t k = 0; k < input.size(); ++k) input[k] *= mask[k];
  }
  const auto p = tape.variables(params);
  const auto xv = tape.variables(input);
  const ad::Var l = sample_loss<ad::Var>(net, p, xv, y, spec);
  tape.backward(l, adjoint);
  for (std::size_t j = 0; j < p.size(); ++j) grad[j] = adjoint[p[j].index()];
  return l.value();
}

// Evaluates f() and prefixes any library error with the dataset row it came from.
template <class F>
auto at_row(std::size_t row, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    std::string what = e.what();
    const auto colon = what.find(": ");
    if (colon != std::string::npos) what.erase(0, colon + 2);
    throw Error(e.kind(), "row " + std::to_string(row) + ": " + what);
  }
}

std::span<const double> mask_for(std::span<const double> masks, std::size_t r, std::size_t lags) {
  return masks.empty() ? std::span<const double>{} : masks.subspan(r * lags, lags);
}

void check_masks(const data::SupervisedSet& ds, std::span<const std::size_t> rows, std::span<const double> masks) {
  if (!masks.empty() && masks.size() != rows.size() * ds.lags) {
    throw Error(ErrorKind::DimensionMismatch, "dropout masks do not match the batch");
  }
}

// Runs body(i) for i in [0, n) in parallel; rethrows the exception from the
// lowest failing index so error reporting does not depend on scheduling.
template <class Body>
void parallel_rows(std::size_t n, Body&& body) {
  std::exception_ptr first_error;
  std::size_t first_index = std::numeric_limits<std::size_t>::max();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(peakcast_kernel_error)
      {
        if (static_cast<std::size_t>(i) < first_index) {
          first_index = static_cast<std::size_t>(i);
          first_error = std::current_exception();
        }
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

BatchGradient batch_gradient(const Network& net, std::span<const double> params, const data::SupervisedSet& ds,
                             std::span<const std::size_t> rows, const LossSpec& spec, std::span<const double> masks) {
  if (rows.empty()) throw Error(ErrorKind::EmptyBatch, "batch_gradient on empty batch");
  check_masks(ds, rows, masks);
  const std::size_t n = params.size();
  std::vector<double> per_row(rows.size() * n);
  std::vector<double> losses(rows.size());
  parallel_rows(rows.size(), [&](std::size_t r) {
    losses[r] = at_row(rows[r], [&] {
      return row_gradient(net, params, ds.row(rows[r]), ds.targets[rows[r]], mask_for(masks, r, ds.lags), spec,
                          per_row.data() + r * n);
    });
  });
  BatchGradient out{0.0, std::vector<double>(n, 0.0)};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.loss += losses[r];
    const double* g = per_row.data() + r * n;
    for (std::size_t j = 0; j < n; ++j) out.grad[j] += g[j];
  }
  const double m = static_cast<double>(rows.size());
  out.loss /= m;
  for (double& g : out.grad) g /= m;
  return out;
}

BatchGradient batch_gradient_serial(const Network& net, std::span<const double> params, const data::SupervisedSet& ds,
                                    std::span<const std::size_t> rows, const LossSpec& spec,
                                    std::span<const double> masks) {
  if (rows.empty()) throw Error(ErrorKind::EmptyBatch, "batch_gradient on empty batch");
  check_masks(ds, rows, masks);
  const std::size_t n = params.size();
  std::vector<double> g(n);
  BatchGradient out{0.0, std::vector<double>(n, 0.0)};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.loss += at_row(rows[r], [&] {
      return row_gradient(net, params, ds.row(rows[r]), ds.targets[rows[r]], mask_for(masks, r, ds.lags), spec,
                               g.data());
    });
    for (std::size_t j = 0; j < n; ++j) out.grad[j] += g[j];
  }
  const double m = static_cast<double>(rows.size());
  out.loss /= m;
  for (double& v : out.grad) v /= m;
  return out;
}

double dataset_loss(const Network& net, std::span<const double> params, const data::SupervisedSet& ds,
                    const LossSpec& spec) {
  if (ds.empty()) throw Error(ErrorKind::EmptyDataset, "loss over empty dataset");
  std::vector<double> losses(ds.size());
  parallel_rows(ds.size(), [&](std::size_t i) {
    losses[i] = at_row(i, [&] { return sample_loss<double>(net, params, ds.row(i), ds.targets[i], spec); });
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(ds.size());
}

double dataset_loss_serial(const Network& net, std::span<const double> params, const data::SupervisedSet& ds,
                           const LossSpec& spec) {
  if (ds.empty()) throw Error(ErrorKind::EmptyDataset, "loss over empty dataset");
  double total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    total += at_row(i, [&] { return sample_loss<double>(net, params, ds.row(i), ds.targets[i], spec); });
  }
  return total / static_cast<double>(ds.size());
}

std::vector<double> predict(const Network& net, std::span<const double> params, std::span<const double> inputs,
                            std::size_t width) {
  if (width == 0 || inputs.size() % width != 0) throw Error(ErrorKind::DimensionMismatch, "predict input matrix");
  const std::size_t rows = inputs.size() / width;
  const std::size_t k = output_width(net);
  std::vector<double> out(rows * k);
  parallel_rows(rows, [&](std::size_t i) {
    predict_row(net, params, inputs.subspan(i * width, width), std::span<double>(out).subspan(i * k, k));
  });
  return out;
}

std::vector<double> predict_serial(const Network& net, std::span<const double> params, std::span<const double> inputs,
                                   std::size_t width) {
  if (width == 0 || inputs.size() % width != 0) throw Error(ErrorKind::DimensionMismatch, "predict input matrix");
  const std::size_t rows = inputs.size() / width;
  const std::size_t k = output_width(net);
  std::vector<double> out(rows * k);
  for (std::size_t i = 0; i < rows; ++i) {
    predict_row(net, params, inputs.subspan(i * width, width), std::span<double>(out).subspan(i * k, k));
  }
  return out;
}

}  // namespace peakcast::kernels
