#include "evifuse/experiment.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <istream>
#include <ostream>
#include <sstream>

#include "evifuse/errors.hpp"
#include "evifuse/metrics.hpp"

namespace evifuse::experiment {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T v{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw InputError("bad value '" + text + "' for setting '" + key + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string predictor_file(std::size_t j) { return "model_v" + std::to_string(j + 1) + ".ckpt"; }

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InputError("train_fraction must lie in (0, 1)");
  }
  if (!data_path && synth_hours < 48) throw InputError("synth_hours must be at least 48");
  if (window < 2) throw InputError("window must be at least 2");
  if (horizon == 0) throw InputError("horizon must be positive");
  if (output_dir.empty()) throw InputError("output_dir must not be empty");
  training.validate();
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "data") {
    if (value.empty()) c.data_path.reset();
    else c.data_path = value;
  } else if (key == "synth_seed") c.synth_seed = parse_value<std::uint64_t>(key, value);
  else if (key == "synth_hours") c.synth_hours = parse_value<std::size_t>(key, value);
  else if (key == "train_fraction") c.train_fraction = parse_value<double>(key, value);
  else if (key == "epochs") c.training.epochs = parse_value<std::size_t>(key, value);
  else if (key == "learning_rate") c.training.learning_rate = parse_value<double>(key, value);
  else if (key == "hidden_size") c.training.hidden_size = parse_value<std::size_t>(key, value);
  else if (key == "num_layers") c.training.num_layers = parse_value<std::size_t>(key, value);
  else if (key == "seed") c.training.seed = parse_value<std::uint64_t>(key, value);
  else if (key == "truncation_length") c.training.truncation_length = parse_value<std::size_t>(key, value);
  else if (key == "clip_norm") c.training.clip_norm = parse_value<double>(key, value);
  else if (key == "window") c.window = parse_value<std::size_t>(key, value);
  else if (key == "mode") c.mode = fusion::parse_mode(value);
  else if (key == "origin") {
    if (value.empty()) c.origin.reset();
    else c.origin = dataset::parse_timestamp(value);
  } else if (key == "horizon") c.horizon = parse_value<std::size_t>(key, value);
  else if (key == "output_dir") c.output_dir = value;
  else throw InputError("unknown setting '" + key + "'");
}

std::map<std::string, std::string> parse_config_text(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw InputError(source + ":" + std::to_string(line_no) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path.string() + "'");
  ExperimentConfig config;
  for (const auto& [key, value] : parse_config_text(in, path.string())) {
    try {
      apply_setting(config, key, value);
    } catch (const InputError& e) {
      throw InputError(path.string() + ": " + e.what());
    }
  }
  return config;
}

void apply_environment(ExperimentConfig& config) {
  if (const char* seed = std::getenv(kSeedEnvVar); seed != nullptr && *seed != '\0') {
    config.training.seed = parse_value<std::uint64_t>(kSeedEnvVar, seed);
  }
}

nlohmann::ordered_json config_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  if (c.data_path) {
    j["data"] = c.data_path->string();
  } else {
    j["synth_seed"] = c.synth_seed;
    j["synth_hours"] = c.synth_hours;
  }
  j["train_fraction"] = c.train_fraction;
  j["epochs"] = c.training.epochs;
  j["learning_rate"] = c.training.learning_rate;
  j["hidden_size"] = c.training.hidden_size;
  j["num_layers"] = c.training.num_layers;
  j["seed"] = c.training.seed;
  j["truncation_length"] = c.training.truncation_length;
  j["clip_norm"] = c.training.clip_norm;
  j["window"] = c.window;
  j["mode"] = std::string(fusion::mode_name(c.mode));
  if (c.origin) j["origin"] = dataset::format_iso8601(*c.origin);
  j["horizon"] = c.horizon;
  return j;
}

// ---------------------------------------------------------------------------
// Pipeline stages

std::vector<dataset::Record> load_records(const ExperimentConfig& config) {
  if (config.data_path) return dataset::read_csv(*config.data_path);
  return dataset::synth_generate(config.synth_seed, config.synth_hours);
}

std::vector<fusion::Predictor> train_predictors(const std::vector<dataset::Record>& train_records,
                                                const ExperimentConfig& config) {
  config.training.validate();
  const auto scaled = dataset::normalize(train_records);
  std::vector<std::future<fusion::Predictor>> jobs;
  for (std::size_t j = 0; j < fusion::kPredictorCount; ++j) {
    const dataset::InputConfig input{fusion::variant_for(static_cast<fusion::PredictorId>(j + 1)),
                                     config.window};
    jobs.push_back(std::async(std::launch::async, [&scaled, &config, input] {
      const auto samples = dataset::build_samples(scaled, input);
      fusion::Predictor p;
      p.input = input;
      p.training = config.training;
      p.spec = scaled.spec;
      p.params = forecast::train(samples.samples, config.training);
      return p;
    }));
  }
  std::vector<fusion::Predictor> out;
  for (auto& job : jobs) out.push_back(job.get());
  return out;
}

void save_predictors(const std::vector<fusion::Predictor>& predictors,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t j = 0; j < predictors.size(); ++j) {
    const auto path = dir / predictor_file(j);
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    fusion::write_predictor(out, predictors[j]);
  }
}

std::vector<fusion::Predictor> load_predictors(const std::filesystem::path& dir) {
  std::vector<fusion::Predictor> out;
  for (std::size_t j = 0; j < fusion::kPredictorCount; ++j) {
    const auto path = dir / predictor_file(j);
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model checkpoint '" + path.string() + "'");
    try {
      out.push_back(fusion::read_predictor(in));
    } catch (const InputError& e) {
      throw InputError(path.string() + ": " + e.what());
    }
  }
  return out;
}

std::int64_t default_origin(const std::vector<dataset::Record>& records, std::size_t horizon) {
  if (records.size() < horizon) throw InputError("fewer records than the forecast horizon");
  return records[records.size() - horizon].timestamp;
}

namespace {

ForecastMetrics score(std::span<const double> forecast, std::span<const double> actual) {
  return {metrics::mae(forecast, actual), metrics::mape(forecast, actual)};
}

}  // namespace

EvaluationReport run_experiment(const ExperimentConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();

  EvaluationReport report;
  report.config = config;
  const auto records = load_records(config);
  auto [train_records, test_records] = dataset::split(records, config.train_fraction);
  report.train_records = train_records.size();
  report.test_records = test_records.size();

  const auto predictors = train_predictors(train_records, config);
  const auto train_scaled = dataset::normalize(train_records);
  for (const auto& p : predictors) {
    const auto samples = dataset::build_samples(train_scaled, p.input);
    report.final_training_loss.push_back(forecast::sample_loss(p.params, samples.samples));
  }

  // One-step-ahead scores over the held-out split.
  const std::size_t test_first = train_records.size();
  std::vector<double> test_actuals;
  for (std::size_t t = test_first; t < records.size(); ++t) test_actuals.push_back(records[t].load_kw);
  for (std::size_t j = 0; j < predictors.size(); ++j) {
    const auto forecast = fusion::forecast_range(predictors[j], records, test_first,
                                                 records.size() - 1);
    report.test_split_metrics[std::string(fusion::predictor_name(
        static_cast<fusion::PredictorId>(j + 1)))] = score(forecast, test_actuals);
  }

  const std::int64_t origin = config.origin ? *config.origin : default_origin(records, config.horizon);
  auto decision = fusion::run_fusion(predictors, records, origin, config.mode, config.horizon);
  const auto o = static_cast<std::size_t>((origin - records.front().timestamp) / dataset::kHourSeconds);
  for (std::size_t t = 0; t < config.horizon; ++t) report.horizon_actuals.push_back(records[o + t].load_kw);

  for (std::size_t j = 0; j < decision.member_forecasts.size(); ++j) {
    report.horizon_metrics[std::string(fusion::predictor_name(
        static_cast<fusion::PredictorId>(j + 1)))] =
        score(decision.member_forecasts[j], report.horizon_actuals);
  }
  report.horizon_metrics["fused"] = score(decision.fused, report.horizon_actuals);
  report.decision = std::move(decision);

  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

nlohmann::ordered_json mass_json(const evidence::MassFunction& m) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& subset : m.focal_sets()) j[subset.to_string()] = m(subset);
  return j;
}

nlohmann::ordered_json metrics_json(const std::map<std::string, ForecastMetrics>& metrics) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, m] : metrics) {
    j[name] = {{"mae_kw", m.mae}, {"mape_pct", m.mape}};
  }
  return j;
}

}  // namespace

nlohmann::ordered_json decision_json(const fusion::FusionDecision& d) {
  nlohmann::ordered_json j;
  j["origin"] = dataset::format_iso8601(d.origin);
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < d.event_masses.size(); ++e) {
    const auto& window = fusion::kEventWindows[e];
    nlohmann::ordered_json ev;
    ev["event"] = "E" + std::to_string(window.id);
    ev["hours_before_origin"] = {window.first_offset, window.last_offset};
    if (e < d.event_accuracies.size()) ev["accuracy_pct"] = d.event_accuracies[e];
    ev["mass"] = mass_json(d.event_masses[e]);
    events.push_back(ev);
  }
  j["events"] = events;
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const auto& step : d.steps) {
    nlohmann::ordered_json s;
    s["left"] = mass_json(step.left);
    s["right"] = mass_json(step.right);
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& cell : step.cells) {
      cells.push_back({{"left", cell.left.to_string()},
                       {"right", cell.right.to_string()},
                       {"product", cell.product},
                       {"result", cell.result.to_string()}});
    }
    s["cells"] = cells;
    s["conflict"] = step.conflict;
    s["result"] = mass_json(step.result);
    steps.push_back(s);
  }
  j["decision_matrices"] = steps;
  j["combined_mass"] = mass_json(d.combined);
  j["selected"] = d.selected.to_string();
  nlohmann::ordered_json ts = nlohmann::ordered_json::array();
  for (auto t : d.horizon_timestamps) ts.push_back(dataset::format_iso8601(t));
  j["horizon_timestamps"] = ts;
  nlohmann::ordered_json members = nlohmann::ordered_json::object();
  for (std::size_t p = 0; p < d.member_forecasts.size(); ++p) {
    members[d.combined.frame().element(p)] = d.member_forecasts[p];
  }
  j["member_forecasts_kw"] = members;
  j["fused_kw"] = d.fused;
  return j;
}

nlohmann::ordered_json report_json(const EvaluationReport& r, bool include_runtime) {
  nlohmann::ordered_json j;
  j["config"] = config_json(r.config);
  j["train_records"] = r.train_records;
  j["test_records"] = r.test_records;
  j["final_training_loss"] = r.final_training_loss;
  j["horizon_metrics"] = metrics_json(r.horizon_metrics);
  j["test_split_metrics"] = metrics_json(r.test_split_metrics);
  j["horizon_actual_kw"] = r.horizon_actuals;
  if (r.decision) j["fusion"] = decision_json(*r.decision);
  if (include_runtime) j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

void write_series_csv(std::ostream& out, const fusion::FusionDecision& d,
                      const std::vector<double>& actuals) {
  out << "timestamp,actual";
  for (std::size_t p = 0; p < d.member_forecasts.size(); ++p) {
    out << ',' << d.combined.frame().element(p);
  }
  out << ",fused\n";
  for (std::size_t t = 0; t < d.fused.size(); ++t) {
    out << dataset::format_iso8601(d.horizon_timestamps.at(t)) << ','
        << (t < actuals.size() ? format_double(actuals[t]) : std::string());
    for (const auto& series : d.member_forecasts) out << ',' << format_double(series[t]);
    out << ',' << format_double(d.fused[t]) << '\n';
  }
}

void write_outputs(const EvaluationReport& report) {
  const auto& dir = report.config.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
  {
    std::ofstream out(dir / "report.json");
    if (!out) throw InputError("cannot write '" + (dir / "report.json").string() + "'");
    out << report_json(report).dump(2) << '\n';
  }
  if (report.decision) {
    std::ofstream out(dir / "series.csv");
    if (!out) throw InputError("cannot write '" + (dir / "series.csv").string() + "'");
    write_series_csv(out, *report.decision, report.horizon_actuals);
  }
}

// ---------------------------------------------------------------------------
// Decision tables

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

std::string label(const evidence::HypothesisSubset& s) {
  if (s.is_empty()) return "{}";
  std::string out;
  for (const auto& name : s.member_names()) out += name;
  return out;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string decision_tables(const std::vector<std::vector<double>>& event_triples,
                            fusion::FusionMode mode, bool exact) {
  const auto& frame = fusion::predictor_frame();
  if (event_triples.size() < 2) throw InputError("need at least two event mass triples");
  std::vector<evidence::MassFunction> events;
  for (std::size_t e = 0; e < event_triples.size(); ++e) {
    const auto& triple = event_triples[e];
    if (triple.size() != frame.size()) {
      throw InputError("event E" + std::to_string(e + 1) + " needs exactly three masses");
    }
    std::vector<evidence::MassAssignment> assignments;
    for (std::size_t j = 0; j < triple.size(); ++j) assignments.emplace_back(frame.singleton(j), triple[j]);
    try {
      events.push_back(evidence::make_mass(frame, assignments, false));
    } catch (const InputError& err) {
      throw InputError("event E" + std::to_string(e + 1) + ": " + err.what());
    }
  }

  // Both routes are rendered through the same tabulated layout; the exact
  // route just carries unrounded percentages.
  std::vector<fusion::TabulatedStep> steps;
  if (exact) {
    for (const auto& step : fusion::fuse_events_traced(events, mode)) {
      fusion::TabulatedStep t;
      for (const auto& f : step.left.focal_sets()) t.columns.emplace_back(f, 100.0 * step.left(f));
      for (const auto& f : step.right.focal_sets()) t.rows.emplace_back(f, 100.0 * step.right(f));
      for (const auto& r : step.right.focal_sets()) {
        for (const auto& c : step.left.focal_sets()) {
          const auto result = mode == fusion::FusionMode::kDisjunctive ? c.unite(r) : c.intersect(r);
          t.cells.push_back({c, r, 100.0 * step.left(c) * step.right(r), result});
        }
      }
      t.conflict_percent = 100.0 * step.conflict;
      for (double v : step.result.dense()) t.aggregated_percent.push_back(100.0 * v);
      steps.push_back(std::move(t));
    }
  } else {
    steps = fusion::tabulate_decision_matrices(events, mode, 2);
  }

  constexpr std::size_t kWidth = 16;
  std::ostringstream out;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const auto& step = steps[s];
    const std::string left_name = s == 0 ? "E1" : "E1..E" + std::to_string(s + 1);
    const std::string row_name = "E" + std::to_string(s + 2);
    out << "Decision matrix " << s + 1 << ": " << left_name << " (columns) x " << row_name
        << " (rows), " << fusion::mode_name(mode) << " rule, "
        << (exact ? "exact" : "cells rounded to 0.01%") << '\n';
    out << pad("", kWidth);
    for (const auto& [c, c_pct] : step.columns) out << pad(label(c) + " " + pct(c_pct / 100.0), kWidth);
    out << '\n';
    std::size_t cell = 0;
    for (const auto& [r, r_pct] : step.rows) {
      out << pad(row_name + label(r) + " " + pct(r_pct / 100.0), kWidth);
      for (std::size_t c = 0; c < step.columns.size(); ++c, ++cell) {
        out << pad(label(step.cells[cell].result) + " " + pct(step.cells[cell].percent / 100.0), kWidth);
      }
      out << '\n';
    }
    if (mode == fusion::FusionMode::kConjunctive) {
      out << "conflict K = " << pct(step.conflict_percent / 100.0) << '\n';
    }
    out << "combined:";
    for (std::uint32_t bits = 1; bits < step.aggregated_percent.size(); ++bits) {
      if (step.aggregated_percent[bits] != 0.0) {
        out << "  " << label(frame.subset(bits)) << " " << pct(step.aggregated_percent[bits] / 100.0);
      }
    }
    out << "  (total " << pct(step.total_percent() / 100.0) << ")\n\n";
  }
  out << "selected: " << label(steps.back().argmax()) << '\n';
  if (!exact) out << "exact mass: " << evidence::to_text(fusion::fuse_events(events, mode)) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Series evaluation

std::map<std::string, ForecastMetrics> evaluate_series(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw InputError(source + ": empty series file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(trim(cell));
  }
  if (header.size() < 3 || header[0] != "timestamp" || header[1] != "actual") {
    throw InputError(source + ": expected header 'timestamp,actual,<forecast columns...>'");
  }
  std::vector<std::vector<double>> columns(header.size() - 1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (cells.size() != header.size()) {
      throw InputError(source + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields");
    }
    for (std::size_t c = 1; c < cells.size(); ++c) {
      try {
        columns[c - 1].push_back(parse_value<double>(header[c], cells[c]));
      } catch (const InputError& e) {
        throw InputError(source + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  std::map<std::string, ForecastMetrics> out;
  for (std::size_t c = 1; c < columns.size(); ++c) {
    try {
      out[header[c + 1]] = score(columns[c], columns[0]);
    } catch (const InputError& e) {
      throw InputError(source + ": column '" + header[c + 1] + "': " + e.what());
    }
  }
  return out;
}

}  // namespace evifuse::experiment
