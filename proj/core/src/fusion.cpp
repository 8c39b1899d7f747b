#include "evifuse/fusion.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "evifuse/errors.hpp"

namespace evifuse::fusion {

using evidence::FrameOfDiscernment;
using evidence::HypothesisSubset;
using evidence::MassFunction;

dataset::InputVariant variant_for(PredictorId id) {
  return static_cast<dataset::InputVariant>(static_cast<int>(id));
}

PredictorId predictor_for(dataset::InputVariant variant) {
  return static_cast<PredictorId>(static_cast<int>(variant));
}

std::string_view predictor_name(PredictorId id) {
  switch (id) {
    case PredictorId::kV1: return "V1";
    case PredictorId::kV2: return "V2";
    case PredictorId::kV3: return "V3";
  }
  return "?";
}

const FrameOfDiscernment& predictor_frame() {
  static const FrameOfDiscernment frame({"V1", "V2", "V3"});
  return frame;
}

std::string_view mode_name(FusionMode mode) {
  return mode == FusionMode::kDisjunctive ? "disjunctive" : "conjunctive";
}

FusionMode parse_mode(std::string_view text) {
  if (text == "disjunctive") return FusionMode::kDisjunctive;
  if (text == "conjunctive") return FusionMode::kConjunctive;
  throw InputError("unknown fusion mode '" + std::string(text) +
                   "' (expected disjunctive or conjunctive)");
}

// ---------------------------------------------------------------------------
// Scoring

double predictor_accuracy(std::span<const double> predictions, std::span<const double> actuals) {
  if (predictions.size() != kEventWindowLength || actuals.size() != kEventWindowLength) {
    throw InputError("event window needs exactly 5 prediction/actual pairs");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < kEventWindowLength; ++k) {
    if (!(actuals[k] > 0.0)) {
      throw InputError("actual load must be positive inside an event window");
    }
    const double pct_error = std::abs(predictions[k] - actuals[k]) / actuals[k] * 100.0;
    sum += std::max(0.0, 100.0 - pct_error);
  }
  return sum / static_cast<double>(kEventWindowLength);
}

MassFunction event_mass(std::span<const double> accuracies, const FrameOfDiscernment& frame) {
  if (accuracies.size() != frame.size()) {
    throw InputError("one accuracy per frame element is required");
  }
  std::vector<evidence::MassAssignment> assignments;
  double total = 0.0;
  for (std::size_t j = 0; j < accuracies.size(); ++j) {
    if (!std::isfinite(accuracies[j]) || accuracies[j] < 0.0) {
      throw InputError("accuracies must be finite and non-negative");
    }
    total += accuracies[j];
    assignments.emplace_back(frame.singleton(j), accuracies[j]);
  }
  if (!(total > 0.0)) throw ComputationError("all predictor accuracies are zero");
  return evidence::make_mass(frame, assignments, true);
}

// ---------------------------------------------------------------------------
// Combination

MassFunction combine(const MassFunction& a, const MassFunction& b, FusionMode mode) {
  return mode == FusionMode::kDisjunctive ? evidence::combine_disjunctive(a, b)
                                          : evidence::combine_conjunctive(a, b);
}

std::vector<CombinationStep> fuse_events_traced(std::span<const MassFunction> events,
                                                FusionMode mode) {
  if (events.size() < 2) throw InputError("fusion needs at least two event masses");
  std::vector<CombinationStep> steps;
  MassFunction running = events.front();
  for (std::size_t e = 1; e < events.size(); ++e) {
    const MassFunction& next = events[e];
    std::vector<MatrixCell> cells;
    double conflict = 0.0;
    for (const auto& a : running.focal_sets()) {
      for (const auto& b : next.focal_sets()) {
        const double product = running(a) * next(b);
        auto result = mode == FusionMode::kDisjunctive ? a.unite(b) : a.intersect(b);
        if (result.is_empty()) conflict += product;
        cells.push_back(MatrixCell{a, b, product, result});
      }
    }
    MassFunction result = combine(running, next, mode);
    steps.push_back(CombinationStep{running, next, std::move(cells), conflict, result});
    running = result;
  }
  return steps;
}

MassFunction fuse_events(std::span<const MassFunction> events, FusionMode mode) {
  if (events.size() < 2) throw InputError("fusion needs at least two event masses");
  MassFunction running = events.front();
  for (std::size_t e = 1; e < events.size(); ++e) running = combine(running, events[e], mode);
  return running;
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // Products of short decimals sit a few ulps off their exact value; the
  // nudge keeps exact halves (e.g. 3.255) rounding up.
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

double TabulatedStep::total_percent() const {
  double sum = 0.0;
  for (double v : aggregated_percent) sum += v;
  return sum;
}

HypothesisSubset TabulatedStep::argmax() const {
  const auto& frame = columns.front().first.frame();
  std::uint32_t best = 0;
  for (std::uint32_t bits = 1; bits < aggregated_percent.size(); ++bits) {
    const double v = aggregated_percent[bits];
    if (v <= 0.0) continue;
    if (best == 0 || v > aggregated_percent[best] ||
        (v == aggregated_percent[best] && std::popcount(bits) < std::popcount(best))) {
      best = bits;
    }
  }
  if (best == 0) throw ComputationError("tabulated decision matrix has no positive aggregate");
  return frame.subset(best);
}

std::vector<TabulatedStep> tabulate_decision_matrices(std::span<const MassFunction> events,
                                                      FusionMode mode, int decimals) {
  if (events.size() < 2) throw InputError("fusion needs at least two event masses");
  if (decimals < 0 || decimals > 12) throw InputError("decimals must lie in [0, 12]");
  const auto& frame = events.front().frame();

  auto heads = [&](const MassFunction& m) {
    std::vector<std::pair<HypothesisSubset, double>> out;
    for (const auto& f : m.focal_sets()) out.emplace_back(f, round_half_up(100.0 * m(f), decimals));
    return out;
  };

  std::vector<TabulatedStep> steps;
  auto columns = heads(events.front());
  for (std::size_t e = 1; e < events.size(); ++e) {
    if (!(events[e].frame() == frame)) throw InputError("event masses use different frames");
    TabulatedStep step;
    step.columns = columns;
    step.rows = heads(events[e]);
    step.aggregated_percent.assign(frame.power_set_size(), 0.0);
    for (const auto& [r, r_pct] : step.rows) {
      for (const auto& [c, c_pct] : step.columns) {
        const auto result = mode == FusionMode::kDisjunctive ? c.unite(r) : c.intersect(r);
        const double cell = round_half_up(c_pct * r_pct / 100.0, decimals);
        step.cells.push_back(TabulatedCell{c, r, cell, result});
        if (result.is_empty()) {
          step.conflict_percent += cell;
        } else {
          step.aggregated_percent[result.bits()] += cell;
        }
      }
    }
    if (mode == FusionMode::kConjunctive) {
      const double keep = 100.0 - step.conflict_percent;
      if (!(keep > 0.0)) throw ComputationError("total conflict in tabulated combination");
      for (double& v : step.aggregated_percent) v = v * 100.0 / keep;
    }
    for (double& v : step.aggregated_percent) v = round_half_up(v, decimals);
    columns.clear();
    for (std::uint32_t bits = 1; bits < step.aggregated_percent.size(); ++bits) {
      if (step.aggregated_percent[bits] != 0.0) {
        columns.emplace_back(frame.subset(bits), step.aggregated_percent[bits]);
      }
    }
    steps.push_back(std::move(step));
  }
  return steps;
}

FusionDecision decide_and_fuse(const MassFunction& combined,
                               const std::vector<std::vector<double>>& horizon_predictions,
                               std::size_t horizon) {
  if (horizon == 0) throw InputError("forecast horizon must be positive");
  if (horizon_predictions.size() != combined.frame().size()) {
    throw InputError("one forecast series per hypothesis is required");
  }
  for (const auto& series : horizon_predictions) {
    if (series.size() != horizon) {
      throw InputError("forecast series has " + std::to_string(series.size()) +
                       " steps, expected horizon " + std::to_string(horizon));
    }
  }
  HypothesisSubset selected = evidence::argmax_subset(combined);
  std::vector<double> fused(horizon, 0.0);
  for (std::size_t t = 0; t < horizon; ++t) {
    double sum = 0.0;
    for (std::size_t j = 0; j < horizon_predictions.size(); ++j) {
      if (selected.contains(j)) sum += horizon_predictions[j][t];
    }
    fused[t] = sum / static_cast<double>(selected.cardinality());
  }
  if (selected.cardinality() == 1) {
    for (std::size_t j = 0; j < horizon_predictions.size(); ++j) {
      if (selected.contains(j)) fused = horizon_predictions[j];
    }
  }
  return FusionDecision{{}, {}, {}, combined, selected, 0, {}, horizon_predictions, fused};
}

// ---------------------------------------------------------------------------
// Predictors

namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_meta_double(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw InputError("predictor checkpoint lacks '" + key + "'");
  double v = 0.0;
  const auto& s = it->second;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw InputError("predictor checkpoint has a bad value for '" + key + "'");
  }
  return v;
}

}  // namespace

void write_predictor(std::ostream& out, const Predictor& predictor) {
  forecast::Checkpoint cp{predictor.params, predictor.training, {}};
  cp.metadata["variant"] = std::string(dataset::variant_name(predictor.input.variant));
  cp.metadata["window"] = std::to_string(predictor.input.window);
  for (std::size_t c = 0; c < dataset::kColumnCount; ++c) {
    cp.metadata["norm_min_" + std::to_string(c)] = format_double(predictor.spec.min[c]);
    cp.metadata["norm_max_" + std::to_string(c)] = format_double(predictor.spec.max[c]);
  }
  forecast::write_checkpoint(out, cp);
}

Predictor read_predictor(std::istream& in) {
  auto cp = forecast::read_checkpoint(in);
  Predictor p;
  auto variant = cp.metadata.find("variant");
  if (variant == cp.metadata.end()) throw InputError("predictor checkpoint lacks 'variant'");
  p.input.variant = dataset::parse_variant(variant->second);
  p.input.window = static_cast<std::size_t>(parse_meta_double(cp.metadata, "window"));
  p.input.validate();
  for (std::size_t c = 0; c < dataset::kColumnCount; ++c) {
    p.spec.min[c] = parse_meta_double(cp.metadata, "norm_min_" + std::to_string(c));
    p.spec.max[c] = parse_meta_double(cp.metadata, "norm_max_" + std::to_string(c));
  }
  p.params = std::move(cp.params);
  p.training = cp.config;
  return p;
}

std::vector<double> forecast_range(const Predictor& predictor,
                                   std::span<const dataset::Record> records, std::size_t first,
                                   std::size_t last) {
  const std::size_t history = predictor.input.history();
  if (first > last || last >= records.size()) throw InputError("forecast range out of bounds");
  if (first < history) {
    throw InputError("insufficient history before the first forecast target");
  }
  const auto window = records.subspan(first - history, last - first + 1 + history);
  const auto scaled = dataset::normalize(window, predictor.spec);
  const auto samples = dataset::build_samples(scaled, predictor.input);
  auto out = forecast::predict(predictor.params, samples.samples);
  for (double& v : out) v = dataset::denormalize(v, predictor.spec);
  return out;
}

FusionDecision run_fusion(std::span<const Predictor> predictors,
                          std::span<const dataset::Record> records, std::int64_t origin,
                          FusionMode mode, std::size_t horizon) {
  if (predictors.size() != kPredictorCount) throw InputError("fusion expects three predictors");
  for (std::size_t j = 0; j < kPredictorCount; ++j) {
    if (predictors[j].input.variant != variant_for(static_cast<PredictorId>(j + 1))) {
      throw InputError("predictor " + std::to_string(j + 1) +
                       " is not bound to its input configuration");
    }
  }
  if (records.empty()) throw InputError("no records to fuse over");
  if (horizon == 0) throw InputError("forecast horizon must be positive");
  dataset::validate_records(records);

  const std::int64_t delta = origin - records.front().timestamp;
  if (delta < 0 || delta % dataset::kHourSeconds != 0 ||
      static_cast<std::size_t>(delta / dataset::kHourSeconds) >= records.size()) {
    throw InputError("forecast origin " + dataset::format_iso8601(origin) +
                     " is not a record timestamp");
  }
  const auto o = static_cast<std::size_t>(delta / dataset::kHourSeconds);
  const std::size_t lookback = kEventWindows.back().last_offset;
  std::size_t max_history = 0;
  for (const auto& p : predictors) max_history = std::max(max_history, p.input.history());
  if (o < lookback + max_history) {
    throw InputError("insufficient history: origin needs " +
                     std::to_string(lookback + max_history) + " earlier records, found " +
                     std::to_string(o));
  }
  if (o + horizon > records.size()) {
    throw InputError("records end before the " + std::to_string(horizon) + " h horizon");
  }

  // Forecasts from the oldest event target through the end of the horizon.
  const std::size_t first = o - lookback;
  const std::size_t last = o + horizon - 1;
  std::vector<std::vector<double>> ranged;
  for (const auto& p : predictors) ranged.push_back(forecast_range(p, records, first, last));

  const auto& frame = predictor_frame();
  std::vector<MassFunction> event_masses;
  std::vector<std::vector<double>> event_accuracies;
  for (const auto& window : kEventWindows) {
    // Targets o - last_offset .. o - first_offset, oldest first.
    const std::size_t begin = o - window.last_offset;
    std::vector<double> actuals;
    for (std::size_t t = begin; t < begin + kEventWindowLength; ++t) {
      actuals.push_back(records[t].load_kw);
    }
    std::vector<double> accuracies;
    for (const auto& series : ranged) {
      std::span<const double> preds(series.data() + (begin - first), kEventWindowLength);
      try {
        accuracies.push_back(predictor_accuracy(preds, actuals));
      } catch (const InputError& e) {
        throw InputError("event E" + std::to_string(window.id) + ": " + e.what());
      }
    }
    event_masses.push_back(event_mass(accuracies, frame));
    event_accuracies.push_back(std::move(accuracies));
  }

  std::vector<std::vector<double>> horizon_predictions;
  for (const auto& series : ranged) {
    horizon_predictions.emplace_back(series.end() - static_cast<std::ptrdiff_t>(horizon),
                                     series.end());
  }

  auto steps = fuse_events_traced(event_masses, mode);
  FusionDecision decision = decide_and_fuse(steps.back().result, horizon_predictions, horizon);
  decision.event_masses = std::move(event_masses);
  decision.event_accuracies = std::move(event_accuracies);
  decision.steps = std::move(steps);
  decision.origin = origin;
  for (std::size_t t = 0; t < horizon; ++t) {
    decision.horizon_timestamps.push_back(records[o + t].timestamp);
  }
  return decision;
}

}  // namespace evifuse::fusion
