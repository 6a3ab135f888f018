#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peakcast/error.hpp"

namespace peakcast::eval {

struct MetricReport {
  double mse = 0.0;
  double rmse = 0.0;  // sqrt(mse)
  double mae = 0.0;
  std::optional<double> mape;  // fraction; absent when some |target| < 1e-12
  std::size_t n = 0;
};

MetricReport compute_metrics(std::span<const double> preds, std::span<const double> targets);

/// compute_metrics restricted to {i : targets[i] > u}; throws NoExceedances if empty.
MetricReport peak_metrics(std::span<const double> preds, std::span<const double> targets, double u);

struct NamedPredictions {
  std::string model;
  std::vector<double> preds;
};

struct ComparisonRow {
  std::string model;
  MetricReport all;
  std::optional<MetricReport> peak;
};

/// One row per model, ordered by mse (ties keep input order).
std::vector<ComparisonRow> compare_models(const std::vector<NamedPredictions>& results, std::span<const double> targets,
                                          double u);

/// CSV with header model,mse,rmse,mae,mape,peak_mse,peak_rmse,peak_mae,peak_mape,n,n_peaks.
std::string comparison_csv(const std::vector<ComparisonRow>& rows);
std::string comparison_table(const std::vector<ComparisonRow>& rows);

}  // namespace peakcast::eval
