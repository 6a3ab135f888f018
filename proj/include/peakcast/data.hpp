#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peakcast/evt.hpp"

namespace peakcast::data {

enum class Unit { MW, USD_per_MWh };

std::string_view to_string(Unit unit);
Unit unit_from_string(std::string_view name);

inline constexpr std::int64_t kHour = 3600;

/// Seconds since the Unix epoch for an ISO-8601 UTC instant
/// ("2016-01-01T00:00:00Z"; the trailing Z is optional).
std::int64_t parse_timestamp(std::string_view text);
std::string format_timestamp(std::int64_t seconds);

/// Hourly univariate series.
struct SeriesFrame {
  std::vector<std::int64_t> timestamps;
  std::vector<double> values;
  Unit unit = Unit::MW;

  std::size_t size() const { return values.size(); }
  /// Throws NonMonotonicTimestamps or GapDetected unless spacing is exactly one hour.
  void validate() const;
  SeriesFrame head(std::size_t n) const;
};

SeriesFrame read_csv(const std::filesystem::path& path, Unit unit = Unit::MW);
SeriesFrame parse_csv(std::istream& in, Unit unit = Unit::MW);
void write_csv(const SeriesFrame& frame, std::ostream& out);
void write_csv(const SeriesFrame& frame, const std::filesystem::path& path);

/// Writes to a temporary sibling and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Lagged windows paired with horizon-h targets. Row i holds the source
/// values at [base_i - p + 1, base_i] (oldest first); target i is the source
/// value at base_i + h.
struct SupervisedSet {
  std::size_t lags = 0;
  std::size_t horizon = 0;
  std::vector<double> inputs;  // size() x lags, row-major
  std::vector<double> targets;
  std::vector<std::size_t> base;

  std::size_t size() const { return targets.size(); }
  bool empty() const { return targets.empty(); }
  std::span<const double> row(std::size_t i) const { return std::span<const double>(inputs).subspan(i * lags, lags); }
  SupervisedSet select(std::span<const std::size_t> rows) const;
  SupervisedSet slice(std::size_t begin, std::size_t end) const;
};

SupervisedSet make_windows(std::span<const double> values, std::size_t lags, std::size_t horizon);
inline SupervisedSet make_windows(const SeriesFrame& s, std::size_t lags, std::size_t horizon) {
  return make_windows(s.values, lags, horizon);
}

/// Keeps pairs whose target is strictly above u.
SupervisedSet filter_exceedances(const SupervisedSet& ds, double u);

evt::Exceedances extract_exceedances(const SeriesFrame& s, double u);

struct Normalizer {
  double mean = 0.0;
  double std = 1.0;

  /// Population mean and standard deviation; throws DegenerateSeries on zero variance.
  static Normalizer fit(std::span<const double> train_values);
  double apply(double y) const { return (y - mean) / std; }
  double invert(double z) const { return z * std + mean; }
  std::vector<double> apply(std::span<const double> ys) const;
};

/// Returns a copy with inputs (and optionally targets) standardized.
SupervisedSet normalized(const SupervisedSet& ds, const Normalizer& norm, bool targets);

struct SynthConfig {
  std::size_t n_hours = 24 * 7 * 60;
  std::int64_t start = 1451606400;  // 2016-01-01T00:00:00Z
  double base = 28000.0;
  double daily_amplitude = 4000.0;
  double peak_hour = 17.0;
  double weekend_shift = -2500.0;
  double noise_std = 300.0;
  double spike_rate = 0.01;
  evt::GpdParams spike{0.0, 1500.0, 0.2};
  // Slowly varying factor scaling the daily cycle (weather-like);
  // AR(1) with the given persistence and stationary standard deviation.
  double swing_std = 0.0;
  double swing_persistence = 0.995;
  std::uint64_t seed = 42;
  Unit unit = Unit::MW;

  void validate() const;
};

struct SynthOutput {
  SeriesFrame frame;
  std::vector<std::size_t> spike_hours;  // one entry per spike event
};

/// y_t = base + daily(t) + weekend shift + noise + spikes, with spikes
/// arriving as Poisson events carrying GPD magnitudes. Seed-deterministic.
SynthOutput synthesize(const SynthConfig& cfg);
inline SeriesFrame synth_series(const SynthConfig& cfg) { return synthesize(cfg).frame; }

}  // namespace peakcast::data
