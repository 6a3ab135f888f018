#pragma once

// Linear regression on Fourier seasonal terms (plus optional exogenous
// columns) with AR(2) errors, estimated in two stages: OLS, then conditional
// least squares on the OLS residuals.

#include <cstdint>
#include <span>
#include <vector>

#include "peakcast/data.hpp"

namespace peakcast::baseline {

struct FourierSpec {
  std::size_t K = 1;  // harmonics
  std::size_t m = 24;  // period in samples

  /// K >= 1, m >= 2, 2K < m.
  void validate() const;
};

/// [sin(2 pi k t/m), cos(2 pi k t/m)] for k = 1..K, interleaved.
std::vector<double> fourier_features(std::int64_t t, const FourierSpec& spec);

/// Row-major exogenous regressors, one row per sample.
struct Exog {
  std::vector<double> values;
  std::size_t cols = 0;

  std::size_t rows() const { return cols == 0 ? 0 : values.size() / cols; }
  std::span<const double> row(std::size_t i) const { return std::span<const double>(values).subspan(i * cols, cols); }
};

struct FourierArModel {
  std::vector<FourierSpec> seasonal;
  double intercept = 0.0;
  // (alpha_k, beta_k) per retained harmonic, in block order. Harmonics of a
  // later block that repeat a frequency of an earlier block are dropped.
  std::vector<double> fourier;
  std::vector<double> exog;
  double phi1 = 0.0;
  double phi2 = 0.0;
  double resid_variance = 0.0;

  /// Seasonal design row for time t (no intercept), duplicates removed.
  std::vector<double> seasonal_features(std::int64_t t) const;
  /// a + f(t) + exog term.
  double deterministic(std::int64_t t, std::span<const double> exog_row = {}) const;
  bool stationary() const;
};

/// Sample index used for the Fourier phase of a timestamp: hours since the epoch.
inline std::int64_t hour_index(std::int64_t seconds) { return seconds / data::kHour; }

FourierArModel fit_fourier_ar(std::span<const double> y, std::span<const std::int64_t> t,
                              const std::vector<FourierSpec>& seasonal, const Exog* exog = nullptr);
FourierArModel fit_fourier_ar(const data::SeriesFrame& series, const std::vector<FourierSpec>& seasonal,
                              const Exog* exog = nullptr);

/// In-sample residuals y_t - deterministic(t).
std::vector<double> residuals(const FourierArModel& model, std::span<const double> y, std::span<const std::int64_t> t,
                              const Exog* exog = nullptr);

/// K in [1, k_max] for period m minimizing one-step-ahead mse on the last
/// `holdout` fraction, with `fixed` blocks always included. Ties go to the
/// smaller K; a larger K counts as better only if it lowers that mse by more
/// than 1%.
std::size_t select_k(std::span<const double> y, std::span<const std::int64_t> t, std::size_t m, std::size_t k_max,
                     double holdout, const std::vector<FourierSpec>& fixed = {});
std::size_t select_k(const data::SeriesFrame& series, std::size_t m, std::size_t k_max, double holdout);

struct Forecast {
  std::vector<double> point;
  std::vector<double> lo95;
  std::vector<double> hi95;
};

/// Forecasts for t_last+1 .. t_last+h from the last two residuals
/// (r_prev = r_{T-1}, r_last = r_T). Intervals are point +- 1.96 sd of the
/// accumulated AR(2) forecast error.
Forecast forecast_fourier_ar(const FourierArModel& model, double r_prev, double r_last, std::int64_t t_last,
                             std::size_t h, const Exog* future_exog = nullptr);

}  // namespace peakcast::baseline
