#pragma once

// The CLI subcommands as library calls, so that tests drive exactly the code
// path the executable runs.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "peakcast/bundle.hpp"
#include "peakcast/data.hpp"
#include "peakcast/eval.hpp"
#include "peakcast/trainer.hpp"

namespace peakcast::cli {

struct SynthOptions {
  data::SynthConfig config;
  std::filesystem::path out;
  std::optional<double> threshold;
};

/// Writes the CSV and returns the one-line summary.
std::string cmd_synth(const SynthOptions& opts);

struct TrainOptions {
  std::filesystem::path data;
  std::string model = "evt";  // mlp | lstm | evt | fourier
  std::size_t lags = 24;
  std::size_t horizon = 5;
  std::optional<double> threshold;
  std::size_t hidden = 3;
  std::string activation = "tanh";
  std::size_t epochs = 500;
  std::optional<double> lr;
  double l2 = 0.0;
  double dropout = 0.0;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  std::size_t batch_size = 32;
  std::size_t patience = 0;
  std::size_t test_hours = 0;  // trailing hours withheld from training
  std::vector<std::size_t> periods = {24, 168};
  std::size_t k_max = 10;
  std::filesystem::path out;
};

struct TrainResult {
  bundle::ModelBundle bundle;
  trainer::TrainReport report;
  data::SupervisedSet train_set;  // as fed to the network (after normalization / filtering)
};

/// Trains on `frame` and returns the bundle; per-epoch rows go to `log`.
TrainResult train_model(const TrainOptions& opts, const data::SeriesFrame& frame, std::ostream& log);
/// Reads opts.data, trains, writes opts.out.
TrainResult cmd_train(const TrainOptions& opts, std::ostream& log);

struct ForecastRow {
  std::int64_t timestamp = 0;
  double point = 0.0;
  std::optional<double> lo95;
  std::optional<double> hi95;
};

/// Forecasts made at each of the last `steps` origins of `frame`, each for
/// origin + horizon. Rows whose window would start before the series are skipped.
std::vector<ForecastRow> forecast(const bundle::ModelBundle& b, const data::SeriesFrame& frame, std::size_t steps);

/// Point forecasts for the targets at positions [first, frame.size()), each
/// made from information up to position - horizon.
std::vector<double> predict_targets(const bundle::ModelBundle& b, const data::SeriesFrame& frame, std::size_t first);

std::string forecast_csv(const std::vector<ForecastRow>& rows);

struct ForecastOptions {
  std::filesystem::path bundle;
  std::filesystem::path data;
  std::size_t steps = 0;  // 0 = the bundle's horizon
  std::filesystem::path out;
};

std::vector<ForecastRow> cmd_forecast(const ForecastOptions& opts);

struct CompareOptions {
  std::filesystem::path data;
  std::vector<std::filesystem::path> bundles;
  std::optional<double> threshold;
  std::size_t test_hours = 240;
  std::filesystem::path out;
};

std::vector<eval::ComparisonRow> cmd_compare(const CompareOptions& opts);

}  // namespace peakcast::cli
