#pragma once

// End-to-end experiment driver shared by the command-line tool: configuration,
// data loading, training of the three predictor variants, fusion, evaluation,
// and report/series emission.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evifuse/dataset.hpp"
#include "evifuse/forecast.hpp"
#include "evifuse/fusion.hpp"

namespace evifuse::experiment {

struct ExperimentConfig {
  std::optional<std::filesystem::path> data_path;  // synthetic data when unset
  std::uint64_t synth_seed = 7;
  std::size_t synth_hours = 504;  // 21 days
  double train_fraction = 0.8;
  forecast::TrainingConfig training;
  std::size_t window = 5;
  fusion::FusionMode mode = fusion::FusionMode::kDisjunctive;
  std::optional<std::int64_t> origin;  // defaults to the start of the last horizon
  std::size_t horizon = fusion::kDefaultHorizon;
  std::filesystem::path output_dir = "evifuse-out";

  void validate() const;
};

// Applies one `key = value` setting. Unknown keys and bad values throw
// InputError. Keys: data, synth_seed, synth_hours, train_fraction, epochs,
// learning_rate, hidden_size, num_layers, seed, truncation_length, clip_norm,
// window, mode, origin, horizon, output_dir.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

// Flat key-value document: one `key = value` per line, '#' starts a comment.
std::map<std::string, std::string> parse_config_text(std::istream& in, const std::string& source);
ExperimentConfig load_config_file(const std::filesystem::path& path);

// Name of the environment variable that overrides the training seed.
inline constexpr const char* kSeedEnvVar = "EVIFUSE_SEED";
// Applies EVIFUSE_SEED when set.
void apply_environment(ExperimentConfig& config);

nlohmann::ordered_json config_json(const ExperimentConfig& config);

std::vector<dataset::Record> load_records(const ExperimentConfig& config);

// Trains V1, V2, V3 on the training records, concurrently. Parameters do not
// depend on scheduling.
std::vector<fusion::Predictor> train_predictors(const std::vector<dataset::Record>& train_records,
                                                const ExperimentConfig& config);

void save_predictors(const std::vector<fusion::Predictor>& predictors,
                     const std::filesystem::path& dir);
std::vector<fusion::Predictor> load_predictors(const std::filesystem::path& dir);

std::int64_t default_origin(const std::vector<dataset::Record>& records, std::size_t horizon);

struct ForecastMetrics {
  double mae = 0.0;   // kW
  double mape = 0.0;  // percent
};

struct EvaluationReport {
  ExperimentConfig config;
  std::size_t train_records = 0;
  std::size_t test_records = 0;
  std::vector<double> final_training_loss;  // per predictor, normalized units
  // Keyed by "V1", "V2", "V3" (and "fused" for the horizon).
  std::map<std::string, ForecastMetrics> horizon_metrics;
  std::map<std::string, ForecastMetrics> test_split_metrics;
  std::vector<double> horizon_actuals;
  std::optional<fusion::FusionDecision> decision;
  double runtime_seconds = 0.0;
};

EvaluationReport run_experiment(const ExperimentConfig& config);

// Report without the runtime field is a deterministic function of the config.
nlohmann::ordered_json report_json(const EvaluationReport& report, bool include_runtime = true);
nlohmann::ordered_json decision_json(const fusion::FusionDecision& decision);

// timestamp,actual,V1,V2,V3,fused
void write_series_csv(std::ostream& out, const fusion::FusionDecision& decision,
                      const std::vector<double>& actuals);

// Writes report.json and series.csv into the config's output directory.
void write_outputs(const EvaluationReport& report);

// Table-style dump of the pairwise decision matrices for the given event
// masses (each a triple over V1, V2, V3). By default cells are rounded to
// 0.01 % as in hand-tabulated matrices; `exact` prints unrounded arithmetic.
std::string decision_tables(const std::vector<std::vector<double>>& event_triples,
                            fusion::FusionMode mode = fusion::FusionMode::kDisjunctive,
                            bool exact = false);

// Scores every forecast column of a series.csv against its actual column.
std::map<std::string, ForecastMetrics> evaluate_series(std::istream& in, const std::string& source);

}  // namespace evifuse::experiment
