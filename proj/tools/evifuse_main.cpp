// evifuse: command-line front end for the fusion forecasting pipeline.
//
// Exit codes: 0 success, 1 computation failure, 2 input or configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "evifuse/dataset.hpp"
#include "evifuse/errors.hpp"
#include "evifuse/experiment.hpp"
#include "evifuse/fusion.hpp"

namespace {

namespace fs = std::filesystem;
using evifuse::experiment::ExperimentConfig;

constexpr int kExitOk = 0;
constexpr int kExitComputation = 1;
constexpr int kExitInput = 2;

// Experiment settings shared by train/fuse/run. Precedence: config file,
// then EVIFUSE_SEED, then explicit flags.
struct SettingFlags {
  std::string config_path;
  std::map<std::string, std::string> values;

  void attach(CLI::App& cmd, const std::vector<std::pair<std::string, std::string>>& keys) {
    cmd.add_option("--config", config_path, "Flat key=value config file");
    for (const auto& [key, help] : keys) {
      cmd.add_option_function<std::string>(
          "--" + flag_name(key), [this, key](const std::string& v) { values[key] = v; }, help);
    }
  }

  ExperimentConfig resolve() const {
    ExperimentConfig config;
    if (!config_path.empty()) config = evifuse::experiment::load_config_file(config_path);
    evifuse::experiment::apply_environment(config);
    for (const auto& [key, value] : values) evifuse::experiment::apply_setting(config, key, value);
    config.validate();
    return config;
  }

  static std::string flag_name(std::string key) {
    for (char& c : key) {
      if (c == '_') c = '-';
    }
    return key;
  }
};

const std::vector<std::pair<std::string, std::string>> kDataKeys = {
    {"data", "Input CSV (timestamp,load_kw,temperature_c,humidity_pct,wind_speed_ms)"},
    {"synth_seed", "Seed for synthetic data when no CSV is given"},
    {"synth_hours", "Hours of synthetic data"},
};
const std::vector<std::pair<std::string, std::string>> kTrainKeys = {
    {"train_fraction", "Chronological training fraction in (0,1)"},
    {"epochs", "Training epochs"},
    {"learning_rate", "Gradient descent step size"},
    {"hidden_size", "LSTM hidden units"},
    {"num_layers", "Stacked LSTM layers"},
    {"seed", "Weight initialization seed"},
    {"truncation_length", "BPTT truncation (0 = full window)"},
    {"clip_norm", "Gradient norm clip (0 = off)"},
    {"window", "Window length of the windowed input variant"},
};
const std::vector<std::pair<std::string, std::string>> kFuseKeys = {
    {"mode", "Combination rule: disjunctive or conjunctive"},
    {"origin", "First forecast hour (ISO-8601 or epoch seconds)"},
    {"horizon", "Forecast horizon in hours"},
    {"output_dir", "Output directory"},
};

std::vector<std::pair<std::string, std::string>> concat(
    std::initializer_list<std::vector<std::pair<std::string, std::string>>> parts) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<double> parse_triple(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw evifuse::InputError("malformed mass triple '" + text + "'");
    }
  }
  if (out.size() != 3) throw evifuse::InputError("mass triple '" + text + "' needs three values");
  return out;
}

void print_metrics(const std::map<std::string, evifuse::experiment::ForecastMetrics>& metrics) {
  for (const auto& [name, m] : metrics) {
    std::cout << "  " << name << ": MAE " << m.mae << " kW, MAPE " << m.mape << " %\n";
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"evifuse: evidence-fused multi-feature LSTM load forecasting"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic hourly dataset");
  std::uint64_t synth_seed = 7;
  std::size_t synth_hours = 504;
  std::string synth_out;
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--hours", synth_hours, "Number of hourly records (>= 48)");
  synth->add_option("--out", synth_out, "Output CSV path (stdout when omitted)");

  // train
  auto* train = app.add_subcommand("train", "Train the three predictor variants");
  SettingFlags train_flags;
  train_flags.attach(*train, concat({kDataKeys, kTrainKeys, {kFuseKeys.back()}}));

  // fuse
  auto* fuse = app.add_subcommand("fuse", "Fuse trained predictors at a forecast origin");
  SettingFlags fuse_flags;
  std::string models_dir;
  fuse_flags.attach(*fuse, concat({kDataKeys, kFuseKeys}));
  fuse->add_option("--models", models_dir, "Directory holding model_v1..3.ckpt")->required();

  // run
  auto* run = app.add_subcommand("run", "Full pipeline: data, training, fusion, evaluation");
  SettingFlags run_flags;
  run_flags.attach(*run, concat({kDataKeys, kTrainKeys, kFuseKeys}));

  // tables
  auto* tables = app.add_subcommand("tables", "Print decision matrices for three event masses");
  std::vector<std::string> triples;
  std::string tables_mode = "disjunctive";
  tables->add_option("masses", triples, "Three comma-separated triples, e.g. 0.30,0.26,0.44")
      ->expected(3)
      ->required();
  tables->add_option("--mode", tables_mode, "Combination rule");
  bool tables_exact = false;
  tables->add_flag("--exact", tables_exact, "Print unrounded arithmetic instead of 0.01% cells");

  // eval
  auto* eval = app.add_subcommand("eval", "Score the forecast columns of a series.csv");
  std::string series_path;
  eval->add_option("series", series_path, "series.csv produced by run or fuse")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  }

  if (*synth) {
    const auto records = evifuse::dataset::synth_generate(synth_seed, synth_hours);
    if (synth_out.empty()) {
      evifuse::dataset::write_csv(std::cout, records);
    } else {
      std::ofstream out(synth_out);
      if (!out) throw evifuse::InputError("cannot write '" + synth_out + "'");
      evifuse::dataset::write_csv(out, records);
      std::cout << "wrote " << records.size() << " records to " << synth_out << '\n';
    }
    return kExitOk;
  }

  if (*train) {
    const auto config = train_flags.resolve();
    const auto records = evifuse::experiment::load_records(config);
    const auto [train_part, test_part] = evifuse::dataset::split(records, config.train_fraction);
    const auto predictors = evifuse::experiment::train_predictors(train_part, config);
    evifuse::experiment::save_predictors(predictors, config.output_dir);
    std::cout << "trained 3 predictors on " << train_part.size() << " records; checkpoints in "
              << config.output_dir.string() << '\n';
    return kExitOk;
  }

  if (*fuse) {
    const auto config = fuse_flags.resolve();
    const auto records = evifuse::experiment::load_records(config);
    const auto predictors = evifuse::experiment::load_predictors(models_dir);
    const auto origin = config.origin ? *config.origin
                                      : evifuse::experiment::default_origin(records, config.horizon);
    const auto decision =
        evifuse::fusion::run_fusion(predictors, records, origin, config.mode, config.horizon);
    std::vector<double> actuals;
    for (auto ts : decision.horizon_timestamps) {
      const auto idx = static_cast<std::size_t>((ts - records.front().timestamp) /
                                                evifuse::dataset::kHourSeconds);
      actuals.push_back(records[idx].load_kw);
    }
    fs::create_directories(config.output_dir);
    {
      std::ofstream out(config.output_dir / "fusion.json");
      out << evifuse::experiment::decision_json(decision).dump(2) << '\n';
    }
    {
      std::ofstream out(config.output_dir / "series.csv");
      evifuse::experiment::write_series_csv(out, decision, actuals);
    }
    std::cout << "selected " << decision.selected.to_string() << "; combined mass "
              << evifuse::evidence::to_text(decision.combined) << '\n';
    return kExitOk;
  }

  if (*run) {
    const auto config = run_flags.resolve();
    const auto report = evifuse::experiment::run_experiment(config);
    evifuse::experiment::write_outputs(report);
    std::cout << "selected " << report.decision->selected.to_string() << " at origin "
              << evifuse::dataset::format_iso8601(report.decision->origin) << "\n"
              << "horizon metrics:\n";
    print_metrics(report.horizon_metrics);
    std::cout << "report: " << (config.output_dir / "report.json").string() << '\n';
    return kExitOk;
  }

  if (*tables) {
    std::vector<std::vector<double>> masses;
    for (const auto& t : triples) masses.push_back(parse_triple(t));
    std::cout << evifuse::experiment::decision_tables(masses,
                                                      evifuse::fusion::parse_mode(tables_mode),
                                                      tables_exact);
    return kExitOk;
  }

  if (*eval) {
    std::ifstream in(series_path);
    if (!in) throw evifuse::InputError("cannot open series file '" + series_path + "'");
    print_metrics(evifuse::experiment::evaluate_series(in, series_path));
    return kExitOk;
  }
  return kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const evifuse::InputError& e) {
    std::cerr << "evifuse: error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "evifuse: error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "evifuse: failed: " << e.what() << '\n';
    return kExitComputation;
  }
}
