#include "evifuse/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>

#include "evifuse/errors.hpp"

namespace evifuse::dataset {

double value(const Record& r, Column c) {
  switch (c) {
    case Column::kLoad: return r.load_kw;
    case Column::kTemperature: return r.temperature_c;
    case Column::kHumidity: return r.humidity_pct;
    case Column::kWindSpeed: return r.wind_speed_ms;
  }
  return 0.0;
}

double& value(Record& r, Column c) {
  switch (c) {
    case Column::kLoad: return r.load_kw;
    case Column::kTemperature: return r.temperature_c;
    case Column::kHumidity: return r.humidity_pct;
    case Column::kWindSpeed: break;
  }
  return r.wind_speed_ms;
}

namespace {

constexpr std::array<Column, kColumnCount> kColumns = {Column::kLoad, Column::kTemperature,
                                                       Column::kHumidity, Column::kWindSpeed};

std::size_t index(Column c) { return static_cast<std::size_t>(c); }

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// Normalization

NormalizationSpec NormalizationSpec::fit(std::span<const Record> records) {
  if (records.empty()) throw InputError("cannot fit normalization on zero records");
  NormalizationSpec spec;
  for (auto c : kColumns) {
    double lo = value(records.front(), c);
    double hi = lo;
    for (const auto& r : records) {
      lo = std::min(lo, value(r, c));
      hi = std::max(hi, value(r, c));
    }
    spec.min[index(c)] = lo;
    spec.max[index(c)] = hi;
  }
  return spec;
}

double NormalizationSpec::scale(Column c, double x) const {
  const double lo = min[index(c)];
  const double hi = max[index(c)];
  if (hi == lo) return 0.5;
  return (x - lo) / (hi - lo);
}

double NormalizationSpec::unscale(Column c, double x) const {
  const double lo = min[index(c)];
  const double hi = max[index(c)];
  if (hi == lo) return lo;
  return lo + x * (hi - lo);
}

NormalizedSeries normalize(std::span<const Record> records,
                           const std::optional<NormalizationSpec>& spec) {
  if (records.empty()) throw InputError("cannot normalize zero records");
  NormalizedSeries out;
  out.spec = spec ? *spec : NormalizationSpec::fit(records);
  for (std::size_t i = 0; i < kColumnCount; ++i) {
    if (out.spec.max[i] < out.spec.min[i]) throw InputError("normalization spec has max < min");
  }
  out.records.reserve(records.size());
  for (const auto& r : records) {
    Record scaled = r;
    for (auto c : kColumns) value(scaled, c) = out.spec.scale(c, value(r, c));
    out.records.push_back(scaled);
  }
  return out;
}

double denormalize(double normalized_load, const NormalizationSpec& spec) {
  return spec.unscale(Column::kLoad, normalized_load);
}

// ---------------------------------------------------------------------------
// Samples

void InputConfig::validate() const {
  if (variant == InputVariant::kWindowed && window < 2) {
    throw InputError("windowed input needs a window length of at least 2");
  }
}

std::string_view variant_name(InputVariant v) {
  switch (v) {
    case InputVariant::kLagParams: return "lag_params";
    case InputVariant::kCurrentParams: return "current_params";
    case InputVariant::kWindowed: return "windowed";
  }
  return "unknown";
}

InputVariant parse_variant(std::string_view text) {
  if (text == "lag_params" || text == "1") return InputVariant::kLagParams;
  if (text == "current_params" || text == "2") return InputVariant::kCurrentParams;
  if (text == "windowed" || text == "3") return InputVariant::kWindowed;
  throw InputError("unknown input variant '" + std::string(text) + "'");
}

SampleSet build_samples(const NormalizedSeries& series, const InputConfig& config) {
  config.validate();
  const auto& rows = series.records;
  const std::size_t history = config.history();
  if (rows.size() <= history) {
    throw InputError("insufficient history: " + std::to_string(rows.size()) +
                     " records, need more than " + std::to_string(history));
  }

  SampleSet set;
  set.config = config;
  set.spec = series.spec;
  const std::size_t count = rows.size() - history;
  set.samples.reserve(count);
  set.target_timestamps.reserve(count);
  set.feature_timestamps.reserve(count);

  for (std::size_t t = history; t < rows.size(); ++t) {
    forecast::Sample sample;
    std::vector<std::int64_t> times;
    const Record& prev = rows[t - 1];
    switch (config.variant) {
      case InputVariant::kLagParams:
        sample.features.push_back(
            {prev.load_kw, prev.temperature_c, prev.humidity_pct, prev.wind_speed_ms});
        times.assign(4, prev.timestamp);
        break;
      case InputVariant::kCurrentParams: {
        const Record& now = rows[t];
        sample.features.push_back(
            {prev.load_kw, now.temperature_c, now.humidity_pct, now.wind_speed_ms});
        times = {prev.timestamp, now.timestamp, now.timestamp, now.timestamp};
        break;
      }
      case InputVariant::kWindowed:
        for (std::size_t k = config.window; k >= 1; --k) {
          const Record& r = rows[t - k];
          sample.features.push_back({r.load_kw, r.temperature_c, r.humidity_pct, r.wind_speed_ms});
          times.insert(times.end(), 4, r.timestamp);
        }
        break;
    }
    sample.target = rows[t].load_kw;
    set.samples.push_back(std::move(sample));
    set.target_timestamps.push_back(rows[t].timestamp);
    set.feature_timestamps.push_back(std::move(times));
  }
  return set;
}

std::pair<std::vector<Record>, std::vector<Record>> split(std::span<const Record> records,
                                                          double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InputError("train fraction must lie in (0, 1), got " + format_double(train_fraction));
  }
  if (records.size() < 2) throw InputError("need at least 2 records to split");
  const auto cut = static_cast<std::size_t>(
      std::floor(static_cast<double>(records.size()) * train_fraction));
  if (cut == 0 || cut == records.size()) {
    throw InputError("train fraction " + format_double(train_fraction) + " leaves an empty split");
  }
  return {std::vector<Record>(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(cut)),
          std::vector<Record>(records.begin() + static_cast<std::ptrdiff_t>(cut), records.end())};
}

// ---------------------------------------------------------------------------
// Timestamps

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

int parse_digits(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) throw InputError("truncated timestamp");
  int v = 0;
  auto res = std::from_chars(text.data() + pos, text.data() + pos + len, v);
  if (res.ec != std::errc{} || res.ptr != text.data() + pos + len) {
    throw InputError("bad digits in timestamp");
  }
  return v;
}

void expect_char(std::string_view text, std::size_t pos, std::string_view allowed) {
  if (pos >= text.size() || allowed.find(text[pos]) == std::string_view::npos) {
    throw InputError("malformed timestamp");
  }
}

}  // namespace

std::int64_t parse_timestamp(std::string_view text) {
  if (text.empty()) throw InputError("empty timestamp");
  if (text.find('-', 1) == std::string_view::npos) {
    std::int64_t epoch = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), epoch);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
      throw InputError("malformed epoch timestamp '" + std::string(text) + "'");
    }
    return epoch;
  }
  try {
    const int year = parse_digits(text, 0, 4);
    expect_char(text, 4, "-");
    const int month = parse_digits(text, 5, 2);
    expect_char(text, 7, "-");
    const int day = parse_digits(text, 8, 2);
    expect_char(text, 10, "T ");
    const int hour = parse_digits(text, 11, 2);
    expect_char(text, 13, ":");
    const int minute = parse_digits(text, 14, 2);
    std::size_t pos = 16;
    int second = 0;
    if (pos < text.size() && text[pos] == ':') {
      second = parse_digits(text, pos + 1, 2);
      pos += 3;
    }
    std::int64_t offset = 0;
    if (pos < text.size()) {
      if (text[pos] == 'Z' && pos + 1 == text.size()) {
        pos += 1;
      } else if ((text[pos] == '+' || text[pos] == '-') && pos + 6 == text.size()) {
        const int sign = text[pos] == '+' ? 1 : -1;
        const int oh = parse_digits(text, pos + 1, 2);
        expect_char(text, pos + 3, ":");
        const int om = parse_digits(text, pos + 4, 2);
        offset = sign * (oh * 3600 + om * 60);
        pos += 6;
      } else {
        throw InputError("malformed timestamp");
      }
    }
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 ||
        second > 60) {
      throw InputError("timestamp field out of range");
    }
    const std::int64_t days =
        days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    return days * 86400 + hour * 3600 + minute * 60 + second - offset;
  } catch (const InputError& e) {
    throw InputError(std::string(e.what()) + ": '" + std::string(text) + "'");
  }
}

std::string format_iso8601(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
  return buf;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

double parse_field(std::string_view text, const char* name) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size() ||
      !std::isfinite(v)) {
    throw InputError(std::string("bad ") + name + " value '" + std::string(text) + "'");
  }
  return v;
}

void check_ranges(const Record& r) {
  if (r.load_kw < 0.0) throw InputError("negative load " + format_double(r.load_kw));
  if (r.wind_speed_ms < 0.0) throw InputError("negative wind speed " + format_double(r.wind_speed_ms));
  if (r.humidity_pct < 0.0 || r.humidity_pct > 100.0) {
    throw InputError("humidity " + format_double(r.humidity_pct) + " outside [0, 100]");
  }
}

void check_step(std::int64_t previous, std::int64_t current) {
  if (current == previous) throw InputError("duplicated timestamp");
  if (current < previous) throw InputError("timestamps are not increasing");
  if (current - previous != kHourSeconds) {
    throw InputError("gap of " + std::to_string(current - previous) +
                     " s between consecutive rows (hourly cadence required)");
  }
}

}  // namespace

std::vector<Record> parse_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) -> InputError {
    return InputError(source + ":" + std::to_string(line_no) + ": " + why);
  };

  if (!std::getline(in, line)) {
    line_no = 1;
    throw fail("missing header");
  }
  ++line_no;
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw fail("expected header '" + std::string(kCsvHeader) + "'");

  std::vector<Record> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string_view, 5> fields;
    std::string_view rest = line;
    std::size_t n = 0;
    for (;;) {
      const auto comma = rest.find(',');
      if (n == fields.size()) throw fail("expected 5 fields");
      fields[n++] = rest.substr(0, comma);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (n != fields.size()) throw fail("expected 5 fields, found " + std::to_string(n));
    try {
      Record r;
      r.timestamp = parse_timestamp(fields[0]);
      r.load_kw = parse_field(fields[1], "load_kw");
      r.temperature_c = parse_field(fields[2], "temperature_c");
      r.humidity_pct = parse_field(fields[3], "humidity_pct");
      r.wind_speed_ms = parse_field(fields[4], "wind_speed_ms");
      check_ranges(r);
      if (!records.empty()) check_step(records.back().timestamp, r.timestamp);
      records.push_back(r);
    } catch (const InputError& e) {
      throw fail(e.what());
    }
  }
  if (records.empty()) throw fail("no data rows");
  return records;
}

std::vector<Record> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file '" + path.string() + "'");
  return parse_csv(in, path.string());
}

void write_csv(std::ostream& out, std::span<const Record> records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.timestamp << ',' << format_double(r.load_kw) << ',' << format_double(r.temperature_c)
        << ',' << format_double(r.humidity_pct) << ',' << format_double(r.wind_speed_ms) << '\n';
  }
}

void validate_records(std::span<const Record> records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      check_ranges(records[i]);
      if (i > 0) check_step(records[i - 1].timestamp, records[i].timestamp);
    } catch (const InputError& e) {
      throw InputError("record " + std::to_string(i) + ": " + e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

class SeededNoise {
 public:
  explicit SeededNoise(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  // Box-Muller on the portable uniform, so output depends only on the seed.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

constexpr std::int64_t kSynthStart = 1609459200;  // 2021-01-01T00:00:00Z, a Friday

}  // namespace

std::vector<Record> synth_generate(std::uint64_t seed, std::size_t hours) {
  if (hours < 48) throw InputError("synthetic series needs at least 48 hours");
  SeededNoise noise(seed);
  constexpr double kTau = 2.0 * std::numbers::pi;

  // Per-seed variation of the daily shape.
  const double load_base = 55.0 + 10.0 * noise.uniform();
  const double load_amp = 28.0 + 8.0 * noise.uniform();
  const double peak_hour = 17.0 + 2.0 * noise.uniform();
  const double temp_mean = 12.0 + 10.0 * noise.uniform();

  std::vector<Record> out;
  out.reserve(hours);
  double temp_drift = 0.0, hum_drift = 0.0, wind_drift = 0.0, load_noise = 0.0;
  for (std::size_t h = 0; h < hours; ++h) {
    const double hour = static_cast<double>(h);
    const double hod = static_cast<double>(h % 24);
    const std::size_t day_of_week = (h / 24 + 4) % 7;  // 0 = Monday
    const bool weekend = day_of_week >= 5;

    temp_drift = 0.95 * temp_drift + 0.35 * noise.normal();
    hum_drift = 0.93 * hum_drift + 1.5 * noise.normal();
    wind_drift = 0.9 * wind_drift + 0.4 * noise.normal();
    load_noise = 0.5 * load_noise + 2.0 * noise.normal();

    Record r;
    r.timestamp = kSynthStart + static_cast<std::int64_t>(h) * kHourSeconds;
    r.temperature_c = temp_mean + 6.0 * std::sin(kTau * (hod - 9.0) / 24.0) + temp_drift;
    r.humidity_pct = std::clamp(65.0 - 1.8 * (r.temperature_c - temp_mean) + hum_drift, 0.0, 100.0);
    r.wind_speed_ms =
        std::max(0.0, 3.5 + 1.2 * std::sin(kTau * (hod - 14.0) / 24.0) + wind_drift);

    const double daily = std::cos(kTau * (hod - peak_hour) / 24.0);
    const double weekly = weekend ? 0.85 : 1.0 + 0.03 * std::sin(kTau * hour / 168.0);
    const double comfort = 0.9 * std::abs(r.temperature_c - 18.0);
    const double wind_effect = -0.6 * r.wind_speed_ms;
    r.load_kw = std::max(1.0, weekly * (load_base + load_amp * daily) + comfort + wind_effect +
                                  load_noise);
    out.push_back(r);
  }
  return out;
}

}  // namespace evifuse::dataset
