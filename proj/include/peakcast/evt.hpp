#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "peakcast/error.hpp"

namespace peakcast::evt {

using Rng = std::mt19937_64;

/// Below this |xi| the exponential limit is used; 1/xi terms lose precision there.
inline constexpr double kExponentialSwitch = 1e-8;

/// Generalized Pareto law of observations above a threshold u.
struct GpdParams {
  double u = 0.0;
  double sigma = 1.0;
  double xi = 0.0;

  /// Throws InvalidParameter unless sigma > 0 and -1 < xi < 1.
  void validate() const;
  bool exponential() const;
  /// u - sigma/xi for xi < 0, +inf otherwise.
  double upper_endpoint() const;
};

double gpd_cdf(const GpdParams& p, double y);
double gpd_logpdf(const GpdParams& p, double y);
double gpd_mean(const GpdParams& p);
double gpd_quantile(const GpdParams& p, double q);
std::vector<double> gpd_sample(const GpdParams& p, std::size_t n, Rng& rng);

/// Mean negative log-likelihood of the exceedances (samples > u) under (sigma, xi).
/// Returns +inf when some excess falls outside the support.
double mean_excess_nll(std::span<const double> excesses, double sigma, double xi);

struct GpdFit {
  GpdParams params;
  double nll = 0.0;  // mean over exceedances
  std::size_t exceedances = 0;
  std::size_t iterations = 0;
};

struct MleOptions {
  std::size_t max_iterations = 10000;
  double tolerance = 1e-10;
  std::size_t min_exceedances = 30;
};

/// Maximum-likelihood fit of (sigma, xi) to samples strictly above u, by
/// gradient descent with backtracking on the mean NLL in the unconstrained
/// coordinates (softplus^-1 sigma, atanh xi).
GpdFit gpd_fit_mle(std::span<const double> samples, double u, const MleOptions& options = {});

struct Exceedances {
  std::vector<std::size_t> indices;
  std::vector<double> values;
};

/// Positions j with values[j] > u (strict), in order.
Exceedances extract_exceedances(std::span<const double> values, double u);

}  // namespace peakcast::evt
