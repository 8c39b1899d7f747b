#pragma once

// Evidence-based fusion of the three predictor variants.
//
// Each predictor is scored against actual loads over three lagged event
// windows; per-window accuracies become singleton mass functions over the
// frame {V1, V2, V3}, which are folded pairwise in window order. The fused
// forecast averages the members of the maximal-mass subset.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "evifuse/dataset.hpp"
#include "evifuse/evidence.hpp"
#include "evifuse/forecast.hpp"

namespace evifuse::fusion {

inline constexpr std::size_t kPredictorCount = 3;
inline constexpr std::size_t kEventWindowLength = 5;
inline constexpr std::size_t kDefaultHorizon = 24;

enum class PredictorId { kV1 = 1, kV2 = 2, kV3 = 3 };

dataset::InputVariant variant_for(PredictorId id);
PredictorId predictor_for(dataset::InputVariant variant);
std::string_view predictor_name(PredictorId id);

// Hour offsets before the forecast origin, inclusive.
struct EventWindow {
  int id;
  std::size_t first_offset;
  std::size_t last_offset;
};

inline constexpr std::array<EventWindow, 3> kEventWindows = {
    EventWindow{1, 1, 5}, EventWindow{2, 6, 10}, EventWindow{3, 11, 15}};

// Frame {V1, V2, V3}.
const evidence::FrameOfDiscernment& predictor_frame();

enum class FusionMode { kDisjunctive, kConjunctive };

std::string_view mode_name(FusionMode mode);
FusionMode parse_mode(std::string_view text);

// Mean over the window of max(0, 100 - |pred - actual| / actual * 100).
double predictor_accuracy(std::span<const double> predictions, std::span<const double> actuals);

// Singleton masses proportional to the accuracies, one per frame element.
evidence::MassFunction event_mass(std::span<const double> accuracies,
                                  const evidence::FrameOfDiscernment& frame);

// One cell of a decision matrix: the product of a focal set of the running
// combination with a focal set of the next event.
struct MatrixCell {
  evidence::HypothesisSubset left;
  evidence::HypothesisSubset right;
  double product;
  evidence::HypothesisSubset result;  // union or intersection
};

struct CombinationStep {
  evidence::MassFunction left;
  evidence::MassFunction right;
  std::vector<MatrixCell> cells;
  double conflict;  // conjunctive mode only
  evidence::MassFunction result;
};

evidence::MassFunction combine(const evidence::MassFunction& a, const evidence::MassFunction& b,
                               FusionMode mode);

// Left fold (E1 ⊕ E2) ⊕ E3 ..., keeping every decision-matrix cell.
std::vector<CombinationStep> fuse_events_traced(std::span<const evidence::MassFunction> events,
                                                FusionMode mode);
evidence::MassFunction fuse_events(std::span<const evidence::MassFunction> events,
                                   FusionMode mode = FusionMode::kDisjunctive);

// Decision matrix as printed in tabulated form: masses in percent, every
// cell rounded half-up to `decimals` places before it is aggregated, and each
// step's column heads taken from the previous step's rounded aggregates. The
// rounding makes totals drift from 100 by a few hundredths; use the exact
// evidence combination for anything other than tabulation.
struct TabulatedCell {
  evidence::HypothesisSubset left;
  evidence::HypothesisSubset right;
  double percent;
  evidence::HypothesisSubset result;
};

struct TabulatedStep {
  std::vector<std::pair<evidence::HypothesisSubset, double>> columns;  // running combination
  std::vector<std::pair<evidence::HypothesisSubset, double>> rows;     // next event
  std::vector<TabulatedCell> cells;
  double conflict_percent = 0.0;
  std::vector<double> aggregated_percent;  // dense over 2^n, by encoding

  double total_percent() const;
  // Nonempty subset with the largest aggregate, same tie-break as argmax_subset.
  evidence::HypothesisSubset argmax() const;
};

double round_half_up(double value, int decimals);

std::vector<TabulatedStep> tabulate_decision_matrices(
    std::span<const evidence::MassFunction> events, FusionMode mode = FusionMode::kDisjunctive,
    int decimals = 2);

struct FusionDecision {
  std::vector<evidence::MassFunction> event_masses;
  std::vector<std::vector<double>> event_accuracies;  // [event][predictor]
  std::vector<CombinationStep> steps;
  evidence::MassFunction combined;
  evidence::HypothesisSubset selected;
  std::int64_t origin = 0;
  std::vector<std::int64_t> horizon_timestamps;
  std::vector<std::vector<double>> member_forecasts;  // [predictor][step], kW
  std::vector<double> fused;                          // kW
};

// Selects argmax_subset(combined) and averages its members' forecasts per
// step. Fills `combined`, `selected` and `fused` of the result.
FusionDecision decide_and_fuse(const evidence::MassFunction& combined,
                               const std::vector<std::vector<double>>& horizon_predictions,
                               std::size_t horizon = kDefaultHorizon);

// A trained predictor variant together with the scaling it was trained on.
struct Predictor {
  dataset::InputConfig input;
  forecast::LstmParams params;
  forecast::TrainingConfig training;
  dataset::NormalizationSpec spec;
};

void write_predictor(std::ostream& out, const Predictor& predictor);
Predictor read_predictor(std::istream& in);

// One-step-ahead load forecasts in kW for every target index in
// [first, last] of `records`, each built from observed history.
std::vector<double> forecast_range(const Predictor& predictor,
                                   std::span<const dataset::Record> records, std::size_t first,
                                   std::size_t last);

// Scores the predictors over the event windows before `origin`, fuses, and
// forecasts `horizon` hours starting at `origin`. `records` must contain the
// origin, the horizon and enough history.
FusionDecision run_fusion(std::span<const Predictor> predictors,
                          std::span<const dataset::Record> records, std::int64_t origin,
                          FusionMode mode = FusionMode::kDisjunctive,
                          std::size_t horizon = kDefaultHorizon);

}  // namespace evifuse::fusion
