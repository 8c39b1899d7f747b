#pragma once

// Hourly load + weather series: CSV ingestion, min-max scaling, chronological
// splitting, sample construction for the three predictor input layouts, and a
// seeded synthetic generator.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evifuse/forecast.hpp"

namespace evifuse::dataset {

inline constexpr std::int64_t kHourSeconds = 3600;
inline constexpr std::string_view kCsvHeader =
    "timestamp,load_kw,temperature_c,humidity_pct,wind_speed_ms";

struct Record {
  std::int64_t timestamp = 0;  // epoch seconds, UTC
  double load_kw = 0.0;
  double temperature_c = 0.0;
  double humidity_pct = 0.0;
  double wind_speed_ms = 0.0;

  friend bool operator==(const Record&, const Record&) = default;
};

enum class Column : std::size_t { kLoad = 0, kTemperature = 1, kHumidity = 2, kWindSpeed = 3 };
inline constexpr std::size_t kColumnCount = 4;

double value(const Record& r, Column c);
double& value(Record& r, Column c);

struct NormalizationSpec {
  std::array<double, kColumnCount> min{};
  std::array<double, kColumnCount> max{};

  // Fits per-column min/max. Throws on empty input.
  static NormalizationSpec fit(std::span<const Record> records);

  // (x - min) / (max - min); constant columns map to 0.5.
  double scale(Column c, double x) const;
  double unscale(Column c, double x) const;
};

struct NormalizedSeries {
  std::vector<Record> records;  // same timestamps, scaled values
  NormalizationSpec spec;
};

// Scales with `spec` when given (test data), otherwise fits one (training data).
NormalizedSeries normalize(std::span<const Record> records,
                           const std::optional<NormalizationSpec>& spec = std::nullopt);

// Normalized load back to kW.
double denormalize(double normalized_load, const NormalizationSpec& spec);

enum class InputVariant {
  kLagParams = 1,      // [load, temp, hum, wind] at t-1
  kCurrentParams = 2,  // [load(t-1), temp(t), hum(t), wind(t)]
  kWindowed = 3,       // w vectors [load, temp, hum, wind] at t-w .. t-1
};

struct InputConfig {
  InputVariant variant = InputVariant::kLagParams;
  std::size_t window = 5;  // used by kWindowed only

  // Records consumed before the first target.
  std::size_t history() const { return variant == InputVariant::kWindowed ? window : 1; }
  void validate() const;
};

std::string_view variant_name(InputVariant v);
InputVariant parse_variant(std::string_view text);

struct SampleSet {
  std::vector<forecast::Sample> samples;
  InputConfig config;
  NormalizationSpec spec;
  std::vector<std::int64_t> target_timestamps;
  // Source timestamp of every feature value, laid out like the flattened
  // feature window of the matching sample.
  std::vector<std::vector<std::int64_t>> feature_timestamps;

  std::size_t size() const { return samples.size(); }
};

// One sample per target time t = history() .. n-1, in time order.
SampleSet build_samples(const NormalizedSeries& series, const InputConfig& config);

// Chronological split at floor(n * train_fraction); both parts nonempty.
std::pair<std::vector<Record>, std::vector<Record>> split(std::span<const Record> records,
                                                          double train_fraction);

// Throws InputError naming `source` and the 1-based line on malformed rows,
// bad header, out-of-range values, or non-hourly timestamps.
std::vector<Record> parse_csv(std::istream& in, const std::string& source = "<input>");
std::vector<Record> read_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, std::span<const Record> records);

// ISO-8601 (YYYY-MM-DDTHH:MM[:SS][Z|±HH:MM]) or integer epoch seconds.
std::int64_t parse_timestamp(std::string_view text);
std::string format_iso8601(std::int64_t epoch_seconds);

// Checks non-negativity, humidity range and uniform hourly spacing.
void validate_records(std::span<const Record> records);

// Deterministic hourly series starting 2021-01-01T00:00:00Z.
std::vector<Record> synth_generate(std::uint64_t seed, std::size_t hours);

}  // namespace evifuse::dataset
