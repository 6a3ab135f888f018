// peakcast: synthesize series, train peak forecasters, forecast, compare.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "peakcast/commands.hpp"

namespace {

// PEAKCAST_SEED, when set, overrides any --seed flag.
void apply_seed_override(std::uint64_t& seed) {
  if (const char* env = std::getenv("PEAKCAST_SEED")) {
    try {
      seed = std::stoull(env);
    } catch (const std::exception&) {
      throw peakcast::Error(peakcast::ErrorKind::UsageError, std::string("PEAKCAST_SEED is not an integer: ") + env);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace peakcast;
  CLI::App app{"peakcast - extreme-peak forecasting with GPD-headed networks"};
  app.require_subcommand(1);

  cli::SynthOptions synth;
  std::optional<double> synth_threshold;
  auto* s = app.add_subcommand("synth", "Write a synthetic hourly series as timestamp,value CSV");
  s->add_option("--hours", synth.config.n_hours, "Number of hourly samples")->required();
  s->add_option("--seed", synth.config.seed, "RNG seed");
  s->add_option("--base", synth.config.base, "Base level");
  s->add_option("--daily", synth.config.daily_amplitude, "Daily cycle amplitude");
  s->add_option("--peak-hour", synth.config.peak_hour, "Hour of day (UTC) of the daily maximum");
  s->add_option("--weekend-shift", synth.config.weekend_shift, "Level shift applied on Saturdays and Sundays");
  s->add_option("--noise", synth.config.noise_std, "Gaussian noise standard deviation");
  s->add_option("--spike-rate", synth.config.spike_rate, "Spike events per hour (Poisson)");
  s->add_option("--spike-sigma", synth.config.spike.sigma, "GPD scale of spike magnitudes");
  s->add_option("--spike-xi", synth.config.spike.xi, "GPD shape of spike magnitudes");
  s->add_option("--swing", synth.config.swing_std, "Std of the slowly varying daily-amplitude factor");
  s->add_option("--swing-persistence", synth.config.swing_persistence, "AR(1) persistence of that factor");
  s->add_option("--threshold", synth_threshold, "Report hours above this level");
  s->add_option("--out", synth.out, "Output CSV")->required();

  cli::TrainOptions train;
  std::optional<double> train_lr;
  std::optional<double> train_threshold;
  std::string unit = "MW";
  auto* t = app.add_subcommand("train", "Train a model and write a JSON bundle");
  t->footer(
      "The evt model is conditional on exceedance: its point forecast is the GPD mean u + sigma/(1-xi) >= u,\n"
      "also at inputs where the threshold is not expected to be exceeded.");
  t->add_option("--data", train.data, "Input CSV (timestamp,value)")->required();
  t->add_option("--model", train.model, "mlp | lstm | evt | fourier")
      ->check(CLI::IsMember({"mlp", "lstm", "evt", "fourier"}));
  t->add_option("--lags", train.lags, "Lag window p");
  t->add_option("--horizon", train.horizon, "Forecast horizon h in hours");
  t->add_option("--threshold", train_threshold, "Exceedance threshold u (default 31000 for MW load data)");
  t->add_option("--unit", unit, "Series unit: MW or $/MWh");
  t->add_option("--hidden", train.hidden, "Hidden width (LSTM hidden size for --model lstm)");
  t->add_option("--activation", train.activation, "Hidden activation: tanh | relu | sigmoid | identity");
  t->add_option("--epochs", train.epochs, "Training epochs");
  t->add_option("--lr", train_lr, "SGD step size (default 0.01 mse, 0.005 evt)");
  t->add_option("--l2", train.l2, "Weight penalty lambda");
  t->add_option("--dropout", train.dropout, "Input dropout probability");
  t->add_option("--batch-size", train.batch_size, "Minibatch size");
  t->add_option("--seed", train.seed, "RNG seed");
  t->add_option("--val-fraction", train.val_fraction, "Chronological validation fraction");
  t->add_option("--patience", train.patience, "Stop after this many epochs without improvement (0 = off)");
  t->add_option("--test-hours", train.test_hours, "Trailing hours withheld from training");
  t->add_option("--period", train.periods, "Seasonal periods for --model fourier");
  t->add_option("--k-max", train.k_max, "Largest number of harmonics tried per period");
  t->add_option("--out", train.out, "Output bundle JSON")->required();

  cli::ForecastOptions fc;
  auto* f = app.add_subcommand("forecast", "Forecast from a bundle; writes timestamp,point,lo95,hi95");
  f->add_option("--bundle", fc.bundle, "Model bundle")->required();
  f->add_option("--data", fc.data, "Input CSV")->required();
  f->add_option("--steps", fc.steps, "Number of forecast origins, ending at the last row (default: horizon)");
  f->add_option("--out", fc.out, "Output CSV")->required();

  cli::CompareOptions cmp;
  auto* c = app.add_subcommand("compare", "Score bundles on the held-out tail of a series");
  c->add_option("--data", cmp.data, "Input CSV")->required();
  c->add_option("--bundles", cmp.bundles, "Two or more bundles")->required()->expected(2, -1);
  c->add_option("--threshold", cmp.threshold, "Peak threshold (default: EVT bundle threshold, else 95th percentile)");
  c->add_option("--test-hours", cmp.test_hours, "Length of the evaluation tail in hours");
  c->add_option("--out", cmp.out, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    // Usage text to stdout, one diagnostic line to stderr.
    std::cout << app.help();
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*s) {
      if (synth.config.n_hours == 0) {
        std::cout << s->help();
        throw Error(ErrorKind::UsageError, "--hours must be positive");
      }
      apply_seed_override(synth.config.seed);
      synth.threshold = synth_threshold;
      std::cout << cli::cmd_synth(synth) << '\n';
    } else if (*t) {
      apply_seed_override(train.seed);
      train.lr = train_lr;
      train.threshold = train_threshold;
      auto frame = data::read_csv(train.data, data::unit_from_string(unit));
      auto result = cli::train_model(train, frame, std::cout);
      bundle::save(result.bundle, train.out);
    } else if (*f) {
      cli::cmd_forecast(fc);
    } else if (*c) {
      const auto rows = cli::cmd_compare(cmp);
      std::cout << eval::comparison_table(rows);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
