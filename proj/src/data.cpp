#include "peakcast/data.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "peakcast/error.hpp"

namespace peakcast::data {

namespace {

int parse_int(std::string_view text, std::size_t pos, std::size_t len) {
  int v = 0;
  const char* first = text.data() + pos;
  const auto [ptr, ec] = std::from_chars(first, first + len, v);
  if (ec != std::errc() || ptr != first + len) throw Error(ErrorKind::ParseError, "bad timestamp '" + std::string(text) + "'");
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

}  // namespace

std::string_view to_string(Unit unit) { return unit == Unit::MW ? "MW" : "$/MWh"; }

Unit unit_from_string(std::string_view name) {
  if (name == "MW") return Unit::MW;
  if (name == "$/MWh" || name == "USD/MWh") return Unit::USD_per_MWh;
  throw Error(ErrorKind::InvalidParameter, "unknown unit '" + std::string(name) + "'");
}

std::int64_t parse_timestamp(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SS[Z]
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  if (text.size() != 19 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' || text[16] != ':') {
    throw Error(ErrorKind::ParseError, "bad timestamp '" + std::string(text) + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{parse_int(text, 0, 4)}, month{static_cast<unsigned>(parse_int(text, 5, 2))},
                           day{static_cast<unsigned>(parse_int(text, 8, 2))}};
  const int hh = parse_int(text, 11, 2);
  const int mm = parse_int(text, 14, 2);
  const int ss = parse_int(text, 17, 2);
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) throw Error(ErrorKind::ParseError, "bad timestamp '" + std::string(text) + "'");
  const auto days_since_epoch = sys_days(ymd).time_since_epoch().count();
  return static_cast<std::int64_t>(days_since_epoch) * 86400 + hh * 3600 + mm * 60 + ss;
}

std::string format_timestamp(std::int64_t seconds) {
  using namespace std::chrono;
  const std::int64_t day_count = seconds >= 0 ? seconds / 86400 : -((-seconds + 86399) / 86400);
  const std::int64_t rem = seconds - day_count * 86400;
  const year_month_day ymd{sys_days{days{day_count}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void SeriesFrame::validate() const {
  if (timestamps.size() != values.size()) throw Error(ErrorKind::DimensionMismatch, "timestamps and values differ in length");
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    const std::int64_t step = timestamps[i] - timestamps[i - 1];
    if (step <= 0) {
      throw Error(ErrorKind::NonMonotonicTimestamps, "timestamp at row " + std::to_string(i) + " does not increase");
    }
    if (step != kHour) {
      throw Error(ErrorKind::GapDetected, "spacing of " + std::to_string(step) + " s before " + format_timestamp(timestamps[i]));
    }
  }
}

SeriesFrame SeriesFrame::head(std::size_t n) const {
  n = std::min(n, size());
  return SeriesFrame{{timestamps.begin(), timestamps.begin() + n}, {values.begin(), values.begin() + n}, unit};
}

SeriesFrame parse_csv(std::istream& in, Unit unit) {
  SeriesFrame frame;
  frame.unit = unit;
  std::string line;
  if (!std::getline(in, line) || trim(line) != "timestamp,value") {
    throw Error(ErrorKind::ParseError, "line 1: expected header 'timestamp,value'");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected two fields");
    }
    std::int64_t ts = 0;
    try {
      ts = parse_timestamp(trim(row.substr(0, comma)));
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string_view field = trim(row.substr(comma + 1));
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": bad value '" + std::string(field) + "'");
    }
    frame.timestamps.push_back(ts);
    frame.values.push_back(v);
  }
  frame.validate();
  return frame;
}

SeriesFrame read_csv(const std::filesystem::path& path, Unit unit) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return parse_csv(in, unit);
}

void write_csv(const SeriesFrame& frame, std::ostream& out) {
  out << "timestamp,value\n";
  for (std::size_t i = 0; i < frame.size(); ++i) {
    out << format_timestamp(frame.timestamps[i]) << ',' << format_double(frame.values[i]) << '\n';
  }
}

void write_csv(const SeriesFrame& frame, const std::filesystem::path& path) {
  std::ostringstream out;
  write_csv(frame, out);
  write_file_atomic(path, out.str());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error(ErrorKind::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
}

SupervisedSet SupervisedSet::select(std::span<const std::size_t> rows) const {
  SupervisedSet out{lags, horizon, {}, {}, {}};
  out.inputs.reserve(rows.size() * lags);
  for (std::size_t r : rows) {
    const auto x = row(r);
    out.inputs.insert(out.inputs.end(), x.begin(), x.end());
    out.targets.push_back(targets[r]);
    out.base.push_back(base[r]);
  }
  return out;
}

SupervisedSet SupervisedSet::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, size());
  begin = std::min(begin, end);
  std::vector<std::size_t> rows(end - begin);
  std::iota(rows.begin(), rows.end(), begin);
  return select(rows);
}

SupervisedSet make_windows(std::span<const double> values, std::size_t lags, std::size_t horizon) {
  if (lags == 0 || horizon == 0) throw Error(ErrorKind::InvalidParameter, "lags and horizon must be positive");
  if (values.size() < lags + horizon) {
    throw Error(ErrorKind::TooShort, "series of length " + std::to_string(values.size()) + " shorter than lags + horizon");
  }
  SupervisedSet out{lags, horizon, {}, {}, {}};
  const std::size_t n = values.size() - lags - horizon + 1;
  out.inputs.reserve(n * lags);
  for (std::size_t i = 0; i < n; ++i) {
    out.inputs.insert(out.inputs.end(), values.begin() + i, values.begin() + i + lags);
    out.base.push_back(i + lags - 1);
    out.targets.push_back(values[i + lags - 1 + horizon]);
  }
  return out;
}

SupervisedSet filter_exceedances(const SupervisedSet& ds, double u) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.targets[i] > u) keep.push_back(i);
  }
  return ds.select(keep);
}

evt::Exceedances extract_exceedances(const SeriesFrame& s, double u) { return evt::extract_exceedances(s.values, u); }

Normalizer Normalizer::fit(std::span<const double> train_values) {
  if (train_values.size() < 2) throw Error(ErrorKind::DegenerateSeries, "need at least two values to normalize");
  const double n = static_cast<double>(train_values.size());
  const double mean = std::accumulate(train_values.begin(), train_values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : train_values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0)) throw Error(ErrorKind::DegenerateSeries, "series has zero variance");
  return {mean, sd};
}

std::vector<double> Normalizer::apply(std::span<const double> ys) const {
  std::vector<double> out;
  out.reserve(ys.size());
  for (double y : ys) out.push_back(apply(y));
  return out;
}

SupervisedSet normalized(const SupervisedSet& ds, const Normalizer& norm, bool targets) {
  SupervisedSet out = ds;
  for (double& x : out.inputs) x = norm.apply(x);
  if (targets) {
    for (double& y : out.targets) y = norm.apply(y);
  }
  return out;
}

void SynthConfig::validate() const {
  if (n_hours == 0) throw Error(ErrorKind::InvalidParameter, "n_hours must be positive");
  if (!(daily_amplitude >= 0.0) || !(noise_std >= 0.0) || !(swing_std >= 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "amplitudes must be >= 0");
  }
  if (!(spike_rate >= 0.0 && spike_rate <= 1.0)) throw Error(ErrorKind::InvalidParameter, "spike rate must lie in [0, 1]");
  if (!(swing_persistence >= 0.0 && swing_persistence < 1.0)) {
    throw Error(ErrorKind::InvalidParameter, "swing persistence must lie in [0, 1)");
  }
  if (spike_rate > 0.0) spike.validate();
}

SynthOutput synthesize(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::poisson_distribution<int> arrivals(cfg.spike_rate > 0.0 ? cfg.spike_rate : 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const evt::GpdParams magnitude = cfg.spike;

  SynthOutput out;
  out.frame.unit = cfg.unit;
  out.frame.timestamps.reserve(cfg.n_hours);
  out.frame.values.reserve(cfg.n_hours);
  const double innovation = cfg.swing_std * std::sqrt(1.0 - cfg.swing_persistence * cfg.swing_persistence);
  double swing = cfg.swing_std > 0.0 ? cfg.swing_std * gauss(rng) : 0.0;
  for (std::size_t i = 0; i < cfg.n_hours; ++i) {
    const std::int64_t ts = cfg.start + static_cast<std::int64_t>(i) * kHour;
    const std::int64_t days = ts >= 0 ? ts / 86400 : -((-ts + 86399) / 86400);
    const double hour = static_cast<double>(ts - days * 86400) / 3600.0;
    const int weekday = static_cast<int>(((days + 4) % 7 + 7) % 7);  // 0 = Sunday
    const bool weekend = weekday == 0 || weekday == 6;

    if (cfg.swing_std > 0.0) swing = cfg.swing_persistence * swing + innovation * gauss(rng);
    const double cycle = std::sin(2.0 * std::numbers::pi * (hour - cfg.peak_hour) / 24.0 + std::numbers::pi / 2.0);
    double y = cfg.base + cfg.daily_amplitude * (1.0 + swing) * cycle;
    if (weekend) y += cfg.weekend_shift;
    if (cfg.noise_std > 0.0) y += cfg.noise_std * gauss(rng);
    if (cfg.spike_rate > 0.0) {
      const int events = arrivals(rng);
      for (int e = 0; e < events; ++e) {
        const double q = unit(rng);
        y += q > 0.0 ? evt::gpd_quantile(magnitude, q) : magnitude.u;
        out.spike_hours.push_back(i);
      }
    }
    out.frame.timestamps.push_back(ts);
    out.frame.values.push_back(y);
  }
  return out;
}

}  // namespace peakcast::data
