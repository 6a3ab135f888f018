#include "peakcast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "peakcast/data.hpp"
#include "peakcast/error.hpp"

namespace peakcast::eval {

MetricReport compute_metrics(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) throw Error(ErrorKind::DimensionMismatch, "predictions and targets differ in length");
  if (preds.empty()) throw Error(ErrorKind::EmptyBatch, "metrics of an empty set");
  MetricReport r;
  r.n = preds.size();
  double se = 0.0, ae = 0.0, ape = 0.0;
  bool zero_target = false;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i] - targets[i];
    se += e * e;
    ae += std::abs(e);
    if (std::abs(targets[i]) < 1e-12) {
      zero_target = true;
    } else {
      ape += std::abs(e) / std::abs(targets[i]);
    }
  }
  const double n = static_cast<double>(r.n);
  r.mse = se / n;
  r.rmse = std::sqrt(r.mse);
  r.mae = ae / n;
  if (!zero_target) r.mape = ape / n;
  return r;
}

MetricReport peak_metrics(std::span<const double> preds, std::span<const double> targets, double u) {
  if (preds.size() != targets.size()) throw Error(ErrorKind::DimensionMismatch, "predictions and targets differ in length");
  std::vector<double> p, t;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] > u) {
      p.push_back(preds[i]);
      t.push_back(targets[i]);
    }
  }
  if (t.empty()) throw Error(ErrorKind::NoExceedances, "no target exceeds the threshold");
  return compute_metrics(p, t);
}

std::vector<ComparisonRow> compare_models(const std::vector<NamedPredictions>& results, std::span<const double> targets,
                                          double u) {
  std::vector<ComparisonRow> rows;
  for (const auto& r : results) {
    ComparisonRow row{r.model, compute_metrics(r.preds, targets), std::nullopt};
    try {
      row.peak = peak_metrics(r.preds, targets, u);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoExceedances) throw;
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.all.mse < b.all.mse; });
  return rows;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? data::format_double(*v) : std::string(); }

}  // namespace

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "model,mse,rmse,mae,mape,peak_mse,peak_rmse,peak_mae,peak_mape,n,n_peaks\n";
  for (const auto& r : rows) {
    out << r.model << ',' << data::format_double(r.all.mse) << ',' << data::format_double(r.all.rmse) << ','
        << data::format_double(r.all.mae) << ',' << opt(r.all.mape) << ',';
    if (r.peak) {
      out << data::format_double(r.peak->mse) << ',' << data::format_double(r.peak->rmse) << ','
          << data::format_double(r.peak->mae) << ',' << opt(r.peak->mape) << ',';
    } else {
      out << ",,,,";
    }
    out << r.all.n << ',' << (r.peak ? r.peak->n : 0) << '\n';
  }
  return out.str();
}

std::string comparison_table(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %14s %10s %10s %8s %14s %10s %8s\n", "model", "mse", "rmse", "mae", "mape",
                "peak_mse", "peak_mae", "n_peaks");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-16s %14.4g %10.4g %10.4g %8.4f %14.4g %10.4g %8zu\n", r.model.c_str(), r.all.mse,
                  r.all.rmse, r.all.mae, r.all.mape.value_or(std::nan("")), r.peak ? r.peak->mse : std::nan(""),
                  r.peak ? r.peak->mae : std::nan(""), r.peak ? r.peak->n : std::size_t{0});
    out << buf;
  }
  return out.str();
}

}  // namespace peakcast::eval
