#include "peakcast/commands.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "peakcast/kernels.hpp"

namespace peakcast::cli {

using json = nlohmann::ordered_json;

namespace {

constexpr double kLoadThreshold = 31000.0;
constexpr std::size_t kMinExceedances = 30;

std::vector<std::int64_t> hour_indices(const data::SeriesFrame& frame) {
  std::vector<std::int64_t> t;
  t.reserve(frame.size());
  for (auto ts : frame.timestamps) t.push_back(baseline::hour_index(ts));
  return t;
}

struct OriginForecast {
  double point = 0.0;
  std::optional<double> lo95;
  std::optional<double> hi95;
};

// Forecast of position o + horizon made at each origin o.
std::vector<OriginForecast> forecast_at(const bundle::ModelBundle& b, const data::SeriesFrame& frame,
                                        std::span<const std::size_t> origins) {
  std::vector<OriginForecast> out(origins.size());
  if (b.kind == bundle::ModelKind::fourier_ar) {
    const auto t = hour_indices(frame);
    const auto r = baseline::residuals(b.fourier, frame.values, t);
    for (std::size_t i = 0; i < origins.size(); ++i) {
      const std::size_t o = origins[i];
      if (o < 1 || o >= frame.size()) throw Error(ErrorKind::TooShort, "forecast origin needs two past residuals");
      const auto f = baseline::forecast_fourier_ar(b.fourier, r[o - 1], r[o], t[o], b.horizon);
      out[i] = {f.point.back(), f.lo95.back(), f.hi95.back()};
    }
    return out;
  }
  const std::size_t p = b.lags;
  std::vector<double> inputs;
  inputs.reserve(origins.size() * p);
  for (std::size_t o : origins) {
    if (o + 1 < p || o >= frame.size()) throw Error(ErrorKind::TooShort, "forecast origin needs a full lag window");
    for (std::size_t k = o + 1 - p; k <= o; ++k) inputs.push_back(b.normalizer.apply(frame.values[k]));
  }
  const Network net = b.network();
  const auto raw = kernels::predict(net, parameters(net), inputs, p);
  for (std::size_t i = 0; i < origins.size(); ++i) {
    if (b.kind == bundle::ModelKind::evt_head) {
      const evt::GpdParams g{*b.threshold, raw[2 * i], raw[2 * i + 1]};
      out[i] = {evt::gpd_mean(g), evt::gpd_quantile(g, 0.025), evt::gpd_quantile(g, 0.975)};
    } else {
      out[i].point = b.normalizer.invert(raw[i]);
    }
  }
  return out;
}

json echo(const TrainOptions& o, double lr) {
  json j;
  j["model"] = o.model;
  j["lags"] = o.lags;
  j["horizon"] = o.horizon;
  j["hidden"] = o.hidden;
  j["activation"] = o.activation;
  j["epochs"] = o.epochs;
  j["lr"] = lr;
  j["l2"] = o.l2;
  j["dropout"] = o.dropout;
  j["batch_size"] = o.batch_size;
  j["val_fraction"] = o.val_fraction;
  j["patience"] = o.patience;
  j["test_hours"] = o.test_hours;
  j["periods"] = o.periods;
  j["k_max"] = o.k_max;
  return j;
}

}  // namespace

std::string cmd_synth(const SynthOptions& opts) {
  const auto frame = data::synth_series(opts.config);
  data::write_csv(frame, opts.out);
  const auto [lo, hi] = std::minmax_element(frame.values.begin(), frame.values.end());
  std::ostringstream s;
  s << "n=" << frame.size() << " min=" << data::format_double(*lo) << " max=" << data::format_double(*hi);
  if (opts.threshold) {
    s << " above_threshold=" << data::extract_exceedances(frame, *opts.threshold).indices.size();
  }
  return s.str();
}

TrainResult train_model(const TrainOptions& opts, const data::SeriesFrame& frame, std::ostream& log) {
  frame.validate();
  if (opts.lags == 0 || opts.horizon == 0) throw Error(ErrorKind::UsageError, "--lags and --horizon must be positive");
  if (opts.test_hours >= frame.size()) throw Error(ErrorKind::TooShort, "--test-hours leaves no training data");
  const data::SeriesFrame train_frame = frame.head(frame.size() - opts.test_hours);

  TrainResult result;
  bundle::ModelBundle& b = result.bundle;
  b.lags = opts.lags;
  b.horizon = opts.horizon;
  b.seed = opts.seed;
  b.normalizer = data::Normalizer::fit(train_frame.values);

  if (opts.model == "fourier") {
    b.kind = bundle::ModelKind::fourier_ar;
    const auto t = hour_indices(train_frame);
    const double holdout = opts.val_fraction > 0.0 ? opts.val_fraction : 0.2;
    std::vector<baseline::FourierSpec> blocks;
    log << "period,K\n";
    for (std::size_t m : opts.periods) {
      const std::size_t k_max = std::min(opts.k_max, (m - 1) / 2);
      const std::size_t k = baseline::select_k(train_frame.values, t, m, k_max, holdout, blocks);
      blocks.push_back({k, m});
      log << m << ',' << k << '\n';
    }
    b.fourier = baseline::fit_fourier_ar(train_frame.values, t, blocks);
    log << "phi1,phi2,resid_variance\n"
        << data::format_double(b.fourier.phi1) << ',' << data::format_double(b.fourier.phi2) << ','
        << data::format_double(b.fourier.resid_variance) << '\n';
    b.config = echo(opts, 0.0);
    return result;
  }

  const auto activation = nn::activation_from_string(opts.activation);
  if (opts.hidden == 0) throw Error(ErrorKind::UsageError, "--hidden must be positive");
  data::SupervisedSet windows = data::make_windows(train_frame.values, opts.lags, opts.horizon);
  nn::Rng rng(opts.seed);
  Network net;
  LossSpec spec;
  if (opts.model == "evt") {
    double u = kLoadThreshold;
    if (opts.threshold) {
      u = *opts.threshold;
    } else if (frame.unit != data::Unit::MW) {
      throw Error(ErrorKind::UsageError, "--threshold is required for --model evt on non-load data");
    }
    windows = data::filter_exceedances(windows, u);
    if (windows.size() < kMinExceedances) {
      throw Error(ErrorKind::InsufficientExceedances, "found " + std::to_string(windows.size()) +
                                                          " exceedances above " + data::format_double(u) + ", need " +
                                                          std::to_string(kMinExceedances));
    }
    windows = data::normalized(windows, b.normalizer, false);
    nn::EvtHead head(opts.lags, opts.hidden, activation);
    head.init_glorot(rng);
    double excess = 0.0;
    for (double y : windows.targets) excess += y - u;
    head.set_excess_scale(excess / static_cast<double>(windows.size()));
    net = std::move(head);
    spec = {Objective::gpd_nll, u};
    b.threshold = u;
  } else if (opts.model == "mlp") {
    const std::size_t widths[] = {opts.lags, opts.hidden, 1};
    auto mlp = nn::Mlp::make(widths, activation, nn::Activation::identity);
    mlp.init_glorot(rng);
    net = std::move(mlp);
    windows = data::normalized(windows, b.normalizer, true);
  } else if (opts.model == "lstm") {
    nn::LstmRegressor lstm(1, opts.hidden);
    lstm.init_glorot(rng);
    net = std::move(lstm);
    windows = data::normalized(windows, b.normalizer, true);
  } else {
    throw Error(ErrorKind::UsageError, "unknown --model '" + opts.model + "' (expected mlp, lstm, evt or fourier)");
  }

  trainer::TrainConfig cfg;
  cfg.lr = opts.lr.value_or(trainer::default_lr(spec.objective));
  cfg.epochs = opts.epochs;
  cfg.batch_size = opts.batch_size;
  cfg.lambda = opts.l2;
  cfg.p_drop = opts.dropout;
  cfg.seed = opts.seed;
  cfg.val_fraction = opts.val_fraction;
  cfg.patience = opts.patience;

  log << "epoch,train_loss,val_loss\n";
  result.report = trainer::sgd_train(net, windows, spec, cfg, [&](std::size_t epoch, double train, double val) {
    log << epoch << ',' << data::format_double(train) << ',' << (std::isnan(val) ? "" : data::format_double(val)) << '\n';
  });
  b.set_network(net);
  b.config = echo(opts, cfg.lr);
  result.train_set = std::move(windows);
  return result;
}

TrainResult cmd_train(const TrainOptions& opts, std::ostream& log) {
  const auto frame = data::read_csv(opts.data);
  auto result = train_model(opts, frame, log);
  bundle::save(result.bundle, opts.out);
  return result;
}

std::vector<ForecastRow> forecast(const bundle::ModelBundle& b, const data::SeriesFrame& frame, std::size_t steps) {
  if (steps == 0) steps = b.horizon;
  const std::size_t min_origin = b.kind == bundle::ModelKind::fourier_ar ? 1 : b.lags - 1;
  const std::size_t n = frame.size();
  if (n <= min_origin) throw Error(ErrorKind::IncompatibleBundle, "data shorter than the bundle's lag window");
  std::vector<std::size_t> origins;
  for (std::size_t o = n > steps ? n - steps : 0; o < n; ++o) {
    if (o >= min_origin) origins.push_back(o);
  }
  const auto f = forecast_at(b, frame, origins);
  std::vector<ForecastRow> rows;
  for (std::size_t i = 0; i < origins.size(); ++i) {
    rows.push_back({frame.timestamps[origins[i]] + static_cast<std::int64_t>(b.horizon) * data::kHour, f[i].point,
                    f[i].lo95, f[i].hi95});
  }
  return rows;
}

std::vector<double> predict_targets(const bundle::ModelBundle& b, const data::SeriesFrame& frame, std::size_t first) {
  std::vector<std::size_t> origins;
  for (std::size_t i = first; i < frame.size(); ++i) {
    if (i < b.horizon) throw Error(ErrorKind::TooShort, "target precedes the forecast horizon");
    origins.push_back(i - b.horizon);
  }
  const auto f = forecast_at(b, frame, origins);
  std::vector<double> out;
  out.reserve(f.size());
  for (const auto& r : f) out.push_back(r.point);
  return out;
}

std::string forecast_csv(const std::vector<ForecastRow>& rows) {
  std::ostringstream out;
  out << "timestamp,point,lo95,hi95\n";
  for (const auto& r : rows) {
    out << data::format_timestamp(r.timestamp) << ',' << data::format_double(r.point) << ','
        << (r.lo95 ? data::format_double(*r.lo95) : "") << ',' << (r.hi95 ? data::format_double(*r.hi95) : "") << '\n';
  }
  return out.str();
}

std::vector<ForecastRow> cmd_forecast(const ForecastOptions& opts) {
  const auto b = bundle::load(opts.bundle);
  const auto frame = data::read_csv(opts.data);
  const auto rows = forecast(b, frame, opts.steps);
  data::write_file_atomic(opts.out, forecast_csv(rows));
  return rows;
}

std::vector<eval::ComparisonRow> cmd_compare(const CompareOptions& opts) {
  if (opts.bundles.size() < 2) throw Error(ErrorKind::UsageError, "compare needs at least two bundles");
  const auto frame = data::read_csv(opts.data);
  if (opts.test_hours == 0 || opts.test_hours >= frame.size()) {
    throw Error(ErrorKind::UsageError, "--test-hours must lie in [1, series length)");
  }
  const std::size_t first = frame.size() - opts.test_hours;
  std::vector<bundle::ModelBundle> bundles;
  for (const auto& path : opts.bundles) bundles.push_back(bundle::load(path));

  std::optional<double> u = opts.threshold;
  for (const auto& b : bundles) {
    if (!u && b.threshold) u = b.threshold;
  }
  if (!u) {
    // 95th percentile of the data before the evaluation window.
    std::vector<double> v(frame.values.begin(), frame.values.begin() + static_cast<std::ptrdiff_t>(first));
    const auto k = static_cast<std::size_t>(0.95 * static_cast<double>(v.size() - 1));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    u = v[k];
  }

  std::vector<eval::NamedPredictions> preds;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    std::string name(bundle::to_string(bundles[i].kind));
    const auto dup = std::count_if(bundles.begin(), bundles.end(), [&](const auto& b) { return b.kind == bundles[i].kind; });
    if (dup > 1) name += "_" + std::to_string(i + 1);
    preds.push_back({name, predict_targets(bundles[i], frame, first)});
  }
  const std::vector<double> targets(frame.values.begin() + static_cast<std::ptrdiff_t>(first), frame.values.end());
  auto rows = eval::compare_models(preds, targets, *u);
  if (!opts.out.empty()) data::write_file_atomic(opts.out, eval::comparison_csv(rows));
  return rows;
}

}  // namespace peakcast::cli
