#include "peakcast/baseline.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "peakcast/error.hpp"

namespace peakcast::baseline {

namespace {

// Reduces k t mod m in integers so that features are exactly periodic.
double phase(std::int64_t t, std::size_t k, std::size_t m) {
  const auto mm = static_cast<std::int64_t>(m);
  std::int64_t r = (static_cast<std::int64_t>(k) * (t % mm)) % mm;
  if (r < 0) r += mm;
  return 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(m);
}

// Harmonic k of block b repeats an earlier frequency k'/m'.
bool duplicate(const std::vector<FourierSpec>& seasonal, std::size_t b, std::size_t k) {
  for (std::size_t e = 0; e < b; ++e) {
    for (std::size_t j = 1; j <= seasonal[e].K; ++j) {
      if (k * seasonal[e].m == j * seasonal[b].m) return true;
    }
  }
  return false;
}

std::size_t harmonic_count(const std::vector<FourierSpec>& seasonal) {
  std::size_t n = 0;
  for (std::size_t b = 0; b < seasonal.size(); ++b) {
    for (std::size_t k = 1; k <= seasonal[b].K; ++k) n += duplicate(seasonal, b, k) ? 0 : 1;
  }
  return n;
}

struct ArFit {
  double phi1 = 0.0;
  double phi2 = 0.0;
  double variance = 0.0;
};

ArFit fit_ar2(std::span<const double> r, double scale2) {
  ArFit fit;
  const std::size_t n = r.size();
  double s11 = 0.0, s12 = 0.0, s22 = 0.0, b1 = 0.0, b2 = 0.0, energy = 0.0;
  for (std::size_t t = 2; t < n; ++t) {
    s11 += r[t - 1] * r[t - 1];
    s12 += r[t - 1] * r[t - 2];
    s22 += r[t - 2] * r[t - 2];
    b1 += r[t] * r[t - 1];
    b2 += r[t] * r[t - 2];
  }
  for (double v : r) energy += v * v;
  const double det = s11 * s22 - s12 * s12;
  // Residuals at rounding level carry no dynamics.
  if (energy > 1e-20 * scale2 && det > 1e-12 * s11 * s22) {
    fit.phi1 = (b1 * s22 - b2 * s12) / det;
    fit.phi2 = (b2 * s11 - b1 * s12) / det;
  }
  auto stationary = [&] { return fit.phi2 + fit.phi1 < 1.0 && fit.phi2 - fit.phi1 < 1.0 && std::abs(fit.phi2) < 1.0; };
  while (!stationary()) {
    fit.phi1 *= 0.99;
    fit.phi2 *= 0.99;
  }
  double ss = 0.0;
  for (std::size_t t = 2; t < n; ++t) {
    const double e = r[t] - fit.phi1 * r[t - 1] - fit.phi2 * r[t - 2];
    ss += e * e;
  }
  fit.variance = n > 2 ? ss / static_cast<double>(n - 2) : 0.0;
  return fit;
}

}  // namespace

void FourierSpec::validate() const {
  if (K < 1) throw Error(ErrorKind::InvalidParameter, "Fourier K must be >= 1");
  if (m < 2) throw Error(ErrorKind::InvalidParameter, "Fourier period must be >= 2");
  if (2 * K >= m) throw Error(ErrorKind::InvalidParameter, "Fourier 2K must be < m");
}

std::vector<double> fourier_features(std::int64_t t, const FourierSpec& spec) {
  spec.validate();
  std::vector<double> out;
  out.reserve(2 * spec.K);
  for (std::size_t k = 1; k <= spec.K; ++k) {
    const double a = phase(t, k, spec.m);
    out.push_back(std::sin(a));
    out.push_back(std::cos(a));
  }
  return out;
}

std::vector<double> FourierArModel::seasonal_features(std::int64_t t) const {
  std::vector<double> out;
  for (std::size_t b = 0; b < seasonal.size(); ++b) {
    for (std::size_t k = 1; k <= seasonal[b].K; ++k) {
      if (duplicate(seasonal, b, k)) continue;
      const double a = phase(t, k, seasonal[b].m);
      out.push_back(std::sin(a));
      out.push_back(std::cos(a));
    }
  }
  return out;
}

double FourierArModel::deterministic(std::int64_t t, std::span<const double> exog_row) const {
  if (exog_row.size() != exog.size()) throw Error(ErrorKind::DimensionMismatch, "exogenous row width");
  double y = intercept;
  const auto f = seasonal_features(t);
  for (std::size_t i = 0; i < f.size(); ++i) y += fourier[i] * f[i];
  for (std::size_t i = 0; i < exog.size(); ++i) y += exog[i] * exog_row[i];
  return y;
}

bool FourierArModel::stationary() const { return phi2 + phi1 < 1.0 && phi2 - phi1 < 1.0 && std::abs(phi2) < 1.0; }

FourierArModel fit_fourier_ar(std::span<const double> y, std::span<const std::int64_t> t,
                              const std::vector<FourierSpec>& seasonal, const Exog* exog) {
  if (seasonal.empty()) throw Error(ErrorKind::InvalidParameter, "at least one seasonal block is required");
  for (const auto& s : seasonal) s.validate();
  if (y.size() != t.size()) throw Error(ErrorKind::DimensionMismatch, "series and time index lengths differ");
  const std::size_t q = exog != nullptr ? exog->cols : 0;
  if (exog != nullptr && exog->rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "exogenous rows");
  std::size_t k_total = 0;
  for (const auto& s : seasonal) k_total += s.K;
  FourierArModel model;
  model.seasonal = seasonal;
  const std::size_t h = harmonic_count(seasonal);
  const std::size_t cols = 1 + 2 * h + q;
  if (y.size() < 4 * k_total + 10 || y.size() < cols + 3) {
    throw Error(ErrorKind::TooShort, "series of length " + std::to_string(y.size()) + " too short for the design");
  }

  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(cols));
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    X(i, 0) = 1.0;
    const auto f = model.seasonal_features(t[row]);
    for (std::size_t j = 0; j < f.size(); ++j) X(i, static_cast<Eigen::Index>(1 + j)) = f[j];
    for (std::size_t j = 0; j < q; ++j) X(i, static_cast<Eigen::Index>(1 + f.size() + j)) = exog->row(row)[j];
    Y(i) = y[row];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(cols)) {
    throw Error(ErrorKind::SingularDesign, "design matrix has rank " + std::to_string(qr.rank()) + " < " +
                                               std::to_string(cols) + " (collinear features)");
  }
  const Eigen::VectorXd beta = qr.solve(Y);
  model.intercept = beta(0);
  model.fourier.assign(beta.data() + 1, beta.data() + 1 + 2 * h);
  model.exog.assign(beta.data() + 1 + 2 * h, beta.data() + cols);

  const auto r = residuals(model, y, t, exog);
  double scale2 = 0.0;
  for (double v : y) scale2 += v * v;
  const ArFit ar = fit_ar2(r, scale2);
  model.phi1 = ar.phi1;
  model.phi2 = ar.phi2;
  model.resid_variance = ar.variance;
  return model;
}

FourierArModel fit_fourier_ar(const data::SeriesFrame& series, const std::vector<FourierSpec>& seasonal,
                              const Exog* exog) {
  std::vector<std::int64_t> t;
  t.reserve(series.size());
  for (auto ts : series.timestamps) t.push_back(hour_index(ts));
  return fit_fourier_ar(series.values, t, seasonal, exog);
}

std::vector<double> residuals(const FourierArModel& model, std::span<const double> y, std::span<const std::int64_t> t,
                              const Exog* exog) {
  std::vector<double> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    r[i] = y[i] - model.deterministic(t[i], exog != nullptr ? exog->row(i) : std::span<const double>{});
  }
  return r;
}

std::size_t select_k(std::span<const double> y, std::span<const std::int64_t> t, std::size_t m, std::size_t k_max,
                     double holdout, const std::vector<FourierSpec>& fixed) {
  constexpr double kTieBand = 0.01;
  if (k_max < 1 || 2 * k_max >= m) throw Error(ErrorKind::InvalidParameter, "select_k needs 1 <= k_max and 2 k_max < m");
  if (!(holdout > 0.0 && holdout < 1.0)) throw Error(ErrorKind::InvalidParameter, "holdout fraction must lie in (0, 1)");
  const auto n_hold = static_cast<std::size_t>(std::floor(static_cast<double>(y.size()) * holdout));
  if (n_hold < 1 || n_hold + 2 > y.size()) throw Error(ErrorKind::TooShort, "series too short for the holdout split");
  const std::size_t n_fit = y.size() - n_hold;
  double scale2 = 0.0;
  for (double v : y) scale2 += v * v;
  scale2 /= static_cast<double>(y.size());

  std::size_t best_k = 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= k_max; ++k) {
    auto blocks = fixed;
    blocks.push_back({k, m});
    const auto model = fit_fourier_ar(y.first(n_fit), t.first(n_fit), blocks);
    const auto r = residuals(model, y, t);
    double mse = 0.0;
    for (std::size_t i = n_fit; i < y.size(); ++i) {
      const double pred = model.deterministic(t[i]) + model.phi1 * r[i - 1] + model.phi2 * r[i - 2];
      mse += (y[i] - pred) * (y[i] - pred);
    }
    mse /= static_cast<double>(n_hold);
    // Holdout mse differences inside the tie band are sampling noise (the
    // standard error of an mse over a few hundred points is several percent).
    if (mse < best * (1.0 - kTieBand) - 1e-12 * scale2) {
      best = mse;
      best_k = k;
    }
  }
  return best_k;
}

std::size_t select_k(const data::SeriesFrame& series, std::size_t m, std::size_t k_max, double holdout) {
  std::vector<std::int64_t> t;
  for (auto ts : series.timestamps) t.push_back(hour_index(ts));
  return select_k(series.values, t, m, k_max, holdout);
}

Forecast forecast_fourier_ar(const FourierArModel& model, double r_prev, double r_last, std::int64_t t_last,
                             std::size_t h, const Exog* future_exog) {
  if (h < 1) throw Error(ErrorKind::InvalidParameter, "forecast horizon must be >= 1");
  if (!model.exog.empty() && (future_exog == nullptr || future_exog->rows() < h)) {
    throw Error(ErrorKind::DimensionMismatch, "future exogenous rows required for every step");
  }
  Forecast out;
  double r1 = r_last;  // r_{T+j-1}
  double r2 = r_prev;  // r_{T+j-2}
  double psi1 = 1.0;   // psi_{j-1}
  double psi2 = 0.0;   // psi_{j-2}
  double acc = 0.0;    // sum of psi_i^2, i < j
  for (std::size_t j = 1; j <= h; ++j) {
    const double r = model.phi1 * r1 + model.phi2 * r2;
    r2 = r1;
    r1 = r;
    const double psi = j == 1 ? 1.0 : model.phi1 * psi1 + model.phi2 * psi2;
    if (j > 1) {
      psi2 = psi1;
      psi1 = psi;
    }
    acc += psi * psi;
    const auto row = model.exog.empty() ? std::span<const double>{} : future_exog->row(j - 1);
    const double point = model.deterministic(t_last + static_cast<std::int64_t>(j), row) + r;
    const double half = 1.96 * std::sqrt(model.resid_variance * acc);
    out.point.push_back(point);
    out.lo95.push_back(point - half);
    out.hi95.push_back(point + half);
  }
  return out;
}

}  // namespace peakcast::baseline
