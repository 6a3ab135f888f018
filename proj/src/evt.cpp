#include "peakcast/evt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "peakcast/error.hpp"

namespace peakcast::evt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double softplus_inverse(double s) { return s > 30.0 ? s : std::log(std::expm1(s)); }
double logistic(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// Standardized excess w = (y - u) / sigma, checked against the support.
double standardized(const GpdParams& p, double y) {
  p.validate();
  const double w = (y - p.u) / p.sigma;
  if (!(w >= 0.0) || (p.xi < 0.0 && 1.0 + p.xi * w < 0.0)) {
    throw Error(ErrorKind::OutOfSupport, "y = " + std::to_string(y) + " outside GPD support");
  }
  return w;
}

// d/dxi of the per-sample NLL, stable for small |a| = |xi w|.
// NLL_xi = [a/(1+a) - log1p(a)] / xi^2 + w/(1+a)
double nll_dxi(double w, double xi) {
  const double a = xi * w;
  if (std::abs(xi) < kExponentialSwitch) return w - 0.5 * w * w;
  if (std::abs(a) < 1e-2) {
    // a/(1+a) - log1p(a) = sum_{k>=2} (-1)^{k+1} (1 - 1/k) a^k
    double series = 0.0;
    double power = 1.0;  // a^(k-2)
    for (int k = 2; k <= 9; ++k) {
      const double sign = (k % 2 == 0) ? -1.0 : 1.0;
      series += sign * (1.0 - 1.0 / k) * power;
      power *= a;
    }
    return w * w * series + w / (1.0 + a);
  }
  return (a / (1.0 + a) - std::log1p(a)) / (xi * xi) + w / (1.0 + a);
}

// (1/xi) log1p(xi w) near xi = 0, through second order in xi. Keeps the
// small-|xi| branch continuous with the general one and differentiable in xi.
double log_tail_series(double w, double xi) { return w - xi * w * w / 2.0 + xi * xi * w * w * w / 3.0; }

// (sigma/xi) expm1(xi t) / sigma near xi = 0.
double expm1_series(double t, double xi) { return t + xi * t * t / 2.0 + xi * xi * t * t * t / 6.0; }

}  // namespace

void GpdParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorKind::InvalidParameter, "GPD scale must be > 0");
  if (!(xi > -1.0 && xi < 1.0)) throw Error(ErrorKind::InvalidParameter, "GPD shape must lie in (-1, 1)");
  if (!std::isfinite(u)) throw Error(ErrorKind::InvalidParameter, "GPD threshold must be finite");
}

bool GpdParams::exponential() const { return std::abs(xi) < kExponentialSwitch; }

double GpdParams::upper_endpoint() const { return xi < 0.0 && !exponential() ? u - sigma / xi : kInf; }

double gpd_cdf(const GpdParams& p, double y) {
  const double w = standardized(p, y);
  if (p.exponential()) return -std::expm1(-log_tail_series(w, p.xi));
  return -std::expm1(-std::log1p(p.xi * w) / p.xi);
}

double gpd_logpdf(const GpdParams& p, double y) {
  const double w = standardized(p, y);
  if (p.exponential()) return -std::log(p.sigma) - log_tail_series(w, p.xi) - p.xi * w + p.xi * p.xi * w * w / 2.0;
  const double a = p.xi * w;
  if (!(1.0 + a > 0.0)) throw Error(ErrorKind::OutOfSupport, "1 + xi (y-u)/sigma <= 0");
  return -std::log(p.sigma) - (1.0 / p.xi + 1.0) * std::log1p(a);
}

double gpd_mean(const GpdParams& p) {
  if (p.xi >= 1.0) throw Error(ErrorKind::InfiniteMean, "GPD mean is infinite for xi >= 1");
  p.validate();
  return p.u + p.sigma / (1.0 - p.xi);
}

double gpd_quantile(const GpdParams& p, double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorKind::InvalidQuantile, "quantile level must lie in (0, 1)");
  p.validate();
  const double log_tail = std::log1p(-q);
  if (p.exponential()) return p.u + p.sigma * expm1_series(-log_tail, p.xi);
  return p.u + p.sigma / p.xi * std::expm1(-p.xi * log_tail);
}

std::vector<double> gpd_sample(const GpdParams& p, std::size_t n, Rng& rng) {
  p.validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> out(n);
  for (double& y : out) {
    const double log_tail = std::log1p(-unit(rng));
    y = p.exponential() ? p.u + p.sigma * expm1_series(-log_tail, p.xi) : p.u + p.sigma / p.xi * std::expm1(-p.xi * log_tail);
  }
  return out;
}

double mean_excess_nll(std::span<const double> excesses, double sigma, double xi) {
  if (excesses.empty()) return kInf;
  const bool expo = std::abs(xi) < kExponentialSwitch;
  const double log_sigma = std::log(sigma);
  double total = 0.0;
  for (double z : excesses) {
    const double w = z / sigma;
    if (expo) {
      total += log_sigma + log_tail_series(w, xi) + xi * w - xi * xi * w * w / 2.0;
      continue;
    }
    const double a = xi * w;
    if (!(1.0 + a > 0.0)) return kInf;
    total += log_sigma + (1.0 / xi + 1.0) * std::log1p(a);
  }
  return total / static_cast<double>(excesses.size());
}

GpdFit gpd_fit_mle(std::span<const double> samples, double u, const MleOptions& options) {
  std::vector<double> z;
  for (double y : samples) {
    if (y > u) z.push_back(y - u);
  }
  if (z.size() < options.min_exceedances) {
    throw Error(ErrorKind::InsufficientExceedances,
                "found " + std::to_string(z.size()) + " exceedances, need " + std::to_string(options.min_exceedances));
  }
  const double n = static_cast<double>(z.size());

  // Method-of-moments start, falling back to the exponential fit if it is
  // not inside the support.
  const double mean = std::accumulate(z.begin(), z.end(), 0.0) / n;
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  var /= n;
  double xi0 = var > 0.0 ? std::clamp(0.5 * (1.0 - mean * mean / var), -0.45, 0.45) : 0.0;
  double sigma0 = var > 0.0 ? 0.5 * mean * (mean * mean / var + 1.0) : mean;
  if (!std::isfinite(mean_excess_nll(z, sigma0, xi0))) {
    xi0 = 0.0;
    sigma0 = mean;
  }

  auto objective = [&](double a, double b) { return mean_excess_nll(z, softplus(a), std::tanh(b)); };
  auto gradient = [&](double a, double b, double& ga, double& gb) {
    const double sigma = softplus(a);
    const double xi = std::tanh(b);
    double d_sigma = 0.0;
    double d_xi = 0.0;
    for (double v : z) {
      const double w = v / sigma;
      // d/dsigma: 1/sigma - (1 + xi) w / (sigma (1 + xi w))
      d_sigma += 1.0 / sigma - (1.0 + xi) * w / (sigma * (1.0 + xi * w));
      d_xi += nll_dxi(w, xi);
    }
    ga = d_sigma / n * logistic(a);
    gb = d_xi / n * (1.0 - xi * xi);
  };

  double a = softplus_inverse(sigma0);
  double b = std::atanh(xi0);
  double f = objective(a, b);
  double ga = 0.0;
  double gb = 0.0;
  gradient(a, b, ga, gb);
  double step = 1e-2;
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    const double g2 = ga * ga + gb * gb;
    if (g2 == 0.0) return GpdFit{{u, softplus(a), std::tanh(b)}, f, z.size(), it};
    double t = step;
    double a_new = a;
    double b_new = b;
    double f_new = f;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      a_new = a - t * ga;
      b_new = b - t * gb;
      f_new = objective(a_new, b_new);
      if (std::isfinite(f_new) && f_new <= f - 1e-4 * t * g2) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No descent possible at machine precision: stationary point.
      return GpdFit{{u, softplus(a), std::tanh(b)}, f, z.size(), it};
    }
    double ga_new = 0.0;
    double gb_new = 0.0;
    gradient(a_new, b_new, ga_new, gb_new);
    // Barzilai-Borwein trial step for the next iteration.
    const double sa = a_new - a;
    const double sb = b_new - b;
    const double ya = ga_new - ga;
    const double yb = gb_new - gb;
    const double sy = sa * ya + sb * yb;
    step = sy > 0.0 ? std::clamp((sa * sa + sb * sb) / sy, 1e-8, 1e4) : 2.0 * t;
    const double change = f - f_new;
    a = a_new;
    b = b_new;
    f = f_new;
    ga = ga_new;
    gb = gb_new;
    if (change < options.tolerance) return GpdFit{{u, softplus(a), std::tanh(b)}, f, z.size(), it};
  }
  throw Error(ErrorKind::NonConvergence,
              "GPD likelihood did not converge in " + std::to_string(options.max_iterations) + " iterations");
}

Exceedances extract_exceedances(std::span<const double> values, double u) {
  Exceedances out;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (values[j] > u) {
      out.indices.push_back(j);
      out.values.push_back(values[j]);
    }
  }
  return out;
}

}  // namespace peakcast::evt
