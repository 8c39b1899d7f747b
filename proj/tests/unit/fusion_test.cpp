#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <random>
#include <sstream>

#include "evifuse/errors.hpp"
#include "evifuse/experiment.hpp"
#include "evifuse/fusion.hpp"
#include "evifuse/metrics.hpp"
#include "oracles.hpp"

using namespace evifuse;
using namespace evifuse::fusion;
using evidence::MassFunction;

namespace {

MassFunction triple(double a, double b, double c) {
  const auto& f = predictor_frame();
  return evidence::make_mass(f, {{f.singleton(0), a}, {f.singleton(1), b}, {f.singleton(2), c}});
}

const std::array<MassFunction, 3>& golden_events() {
  static const std::array<MassFunction, 3> e = {triple(0.30, 0.26, 0.44), triple(0.31, 0.34, 0.35),
                                                triple(0.24, 0.41, 0.35)};
  return e;
}

// Small trained predictors over a synthetic series, shared by the pipeline tests.
struct Pipeline {
  std::vector<dataset::Record> records;
  std::vector<Predictor> predictors;
};

const Pipeline& pipeline() {
  static const Pipeline p = [] {
    Pipeline out;
    out.records = dataset::synth_generate(7, 240);
    experiment::ExperimentConfig cfg;
    cfg.training.epochs = 40;
    cfg.training.hidden_size = 6;
    const auto train = std::vector<dataset::Record>(out.records.begin(), out.records.begin() + 192);
    out.predictors = experiment::train_predictors(train, cfg);
    return out;
  }();
  return p;
}

}  // namespace

TEST(Accuracy, ExactPredictionIsHundred) {
  const std::vector<double> a = {10, 12, 14, 13, 11};
  EXPECT_EQ(predictor_accuracy(a, a), 100.0);
}

TEST(Accuracy, TenPercentOff) {
  const std::vector<double> a = {10, 20, 40, 50, 80};
  std::vector<double> p;
  for (double v : a) p.push_back(v * 1.1);
  EXPECT_NEAR(predictor_accuracy(p, a), 90.0, 1e-12);
  p.clear();
  for (double v : a) p.push_back(v * 0.9);
  EXPECT_NEAR(predictor_accuracy(p, a), 90.0, 1e-12);
}

TEST(Accuracy, ClampedOutlier) {
  // terms 100, 100, 100, 100 and max(0, 100 - 400)
  EXPECT_NEAR(predictor_accuracy(std::vector<double>{1, 1, 1, 1, 5}, std::vector<double>{1, 1, 1, 1, 1}), 80.0,
              1e-12);
}

TEST(Accuracy, RejectsBadWindows) {
  EXPECT_THROW(predictor_accuracy(std::vector<double>{1, 1}, std::vector<double>{1, 1}), InputError);
  EXPECT_THROW(predictor_accuracy(std::vector<double>{1, 1, 1, 1, 1}, std::vector<double>{1, 1, 0, 1, 1}),
               InputError);
}

TEST(EventMass, GoldenFirstEventHeads) {
  const auto m = event_mass(std::vector<double>{60, 52, 88}, predictor_frame());
  EXPECT_NEAR(m.mass_at(1), 0.30, 1e-12);
  EXPECT_NEAR(m.mass_at(2), 0.26, 1e-12);
  EXPECT_NEAR(m.mass_at(4), 0.44, 1e-12);
}

TEST(EventMass, SymmetryAndSurvivor) {
  const auto eq = event_mass(std::vector<double>{70, 70, 70}, predictor_frame());
  for (std::uint32_t b : {1u, 2u, 4u}) EXPECT_NEAR(eq.mass_at(b), 1.0 / 3.0, 1e-15);
  const auto one = event_mass(std::vector<double>{100, 0, 0}, predictor_frame());
  EXPECT_EQ(one.mass_at(1), 1.0);
  EXPECT_EQ(one.focal_sets().size(), 1u);
  EXPECT_THROW(event_mass(std::vector<double>{0, 0, 0}, predictor_frame()), ComputationError);
  EXPECT_THROW(event_mass(std::vector<double>{1, 2}, predictor_frame()), InputError);
}

TEST(Fuse, TabulatedMatchesPrintedTables) {
  const auto steps = tabulate_decision_matrices(golden_events());
  ASSERT_EQ(steps.size(), 2u);
  const double slack = 0.01 + 1e-9;
  const std::vector<double> cells = {9.3, 8.06, 13.64, 10.2, 8.84, 14.95, 10.5, 9.1, 15.4};
  ASSERT_EQ(steps[0].cells.size(), 9u);
  for (std::size_t k = 0; k < 9; ++k) EXPECT_NEAR(steps[0].cells[k].percent, cells[k], slack) << k;
  const auto& final = steps[1].aggregated_percent;
  EXPECT_NEAR(final[1], 2.23, slack);
  EXPECT_GE(final[2], 3.62 - slack);
  EXPECT_LE(final[2], 3.63 + slack);
  EXPECT_NEAR(final[4], 5.39, slack);
  EXPECT_NEAR(final[3], 17.80, slack);
  EXPECT_NEAR(final[5], 21.20, slack);
  EXPECT_NEAR(final[6], 27.68, slack);
  EXPECT_NEAR(final[7], 22.06, slack);
  EXPECT_NEAR(steps[1].total_percent(), 100.0, 0.02 + 1e-9);
  EXPECT_EQ(steps[1].argmax().to_string(), "V2,V3");
}

TEST(Fuse, ExactFoldAgainstTripleProducts) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::array<std::array<double, 3>, 3> w;
    std::vector<MassFunction> events;
    for (auto& e : w) {
      double s = 0.0;
      for (auto& v : e) s += (v = u(rng));
      for (auto& v : e) v /= s;
      events.push_back(triple(e[0], e[1], e[2]));
    }
    std::array<double, 8> want{};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        for (int c = 0; c < 3; ++c) want[(1u << a) | (1u << b) | (1u << c)] += w[0][a] * w[1][b] * w[2][c];
      }
    }
    const auto got = fuse_events(events, FusionMode::kDisjunctive);
    double total = 0.0;
    for (std::uint32_t x = 1; x < 8; ++x) {
      EXPECT_NEAR(got.mass_at(x), want[x], 1e-12);
      total += got.mass_at(x);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    // Grouping does not matter in either mode.
    for (auto mode : {FusionMode::kDisjunctive, FusionMode::kConjunctive}) {
      const auto left = fuse_events(events, mode);
      const auto right = combine(events[0], combine(events[1], events[2], mode), mode);
      for (std::uint32_t x = 0; x < 8; ++x) EXPECT_NEAR(left.mass_at(x), right.mass_at(x), 1e-9);
    }
  }
}

TEST(Fuse, CertaintyIsStable) {
  const std::vector<MassFunction> e = {triple(1, 0, 0), triple(1, 0, 0)};
  for (auto mode : {FusionMode::kDisjunctive, FusionMode::kConjunctive}) {
    EXPECT_EQ(fuse_events(e, mode).mass_at(1), 1.0);
  }
}

TEST(Fuse, TracedCellsCoverCrossProduct) {
  const auto steps = fuse_events_traced(golden_events(), FusionMode::kDisjunctive);
  ASSERT_EQ(steps.size(), 2u);
  EXPECT_EQ(steps[0].cells.size(), 9u);
  EXPECT_EQ(steps[1].cells.size(), 18u);
  double sum = 0.0;
  for (const auto& c : steps[1].cells) sum += c.product;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_EQ(steps[0].conflict, 0.0);
  const auto conj = fuse_events_traced(golden_events(), FusionMode::kConjunctive);
  EXPECT_NEAR(conj[0].conflict, 1.0 - (0.30 * 0.31 + 0.26 * 0.34 + 0.44 * 0.35), 1e-12);
}

TEST(Fuse, RelabelingPermutesDecision) {
  const auto& f = predictor_frame();
  const auto base = fuse_events(golden_events(), FusionMode::kDisjunctive);
  // swap V1 and V3 in every event
  std::vector<MassFunction> swapped;
  for (const auto& e : golden_events()) swapped.push_back(triple(e.mass_at(4), e.mass_at(2), e.mass_at(1)));
  const auto perm = fuse_events(swapped, FusionMode::kDisjunctive);
  auto relabel = [](std::uint32_t x) {
    return (x & 2u) | ((x & 1u) << 2) | ((x & 4u) >> 2);
  };
  for (std::uint32_t x = 1; x < 8; ++x) EXPECT_NEAR(perm.mass_at(relabel(x)), base.mass_at(x), 1e-12);
  EXPECT_EQ(evidence::argmax_subset(perm).bits(), relabel(evidence::argmax_subset(base).bits()));
  EXPECT_EQ(f.size(), 3u);
}

TEST(Fuse, AccurateMemberIsSelected) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> off(0.5, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t good = trial % 3;
    std::vector<MassFunction> events;
    for (int e = 0; e < 3; ++e) {
      const std::vector<double> actual = {50, 52, 55, 53, 51};
      std::vector<double> acc;
      for (std::size_t j = 0; j < 3; ++j) {
        std::vector<double> pred = actual;
        if (j != good) {
          for (auto& v : pred) v *= 1.0 + off(rng);
        }
        acc.push_back(predictor_accuracy(pred, actual));
      }
      events.push_back(event_mass(acc, predictor_frame()));
    }
    const auto sel = evidence::argmax_subset(fuse_events(events, FusionMode::kDisjunctive));
    EXPECT_TRUE(sel.contains(good)) << sel.to_string();
  }
}

TEST(Decide, GoldenMassSelectsPairAndAverages) {
  const auto combined = fuse_events(golden_events());
  std::vector<std::vector<double>> preds(3, std::vector<double>(24));
  for (std::size_t t = 0; t < 24; ++t) {
    preds[0][t] = 30.0 + double(t);
    preds[1][t] = 10.0 + double(t);
    preds[2][t] = 14.0 + double(t);
  }
  const auto d = decide_and_fuse(combined, preds, 24);
  EXPECT_EQ(d.selected.to_string(), "V2,V3");
  EXPECT_EQ(d.fused[0], 12.0);
  for (std::size_t t = 0; t < 24; ++t) EXPECT_EQ(d.fused[t], 12.0 + double(t));
}

TEST(Decide, IdenticalPredictorsPassThrough) {
  std::vector<double> s = {3.3, 4.4, 5.5};
  const std::vector<std::vector<double>> preds = {s, s, s};
  for (const auto& m : {fuse_events(golden_events()), triple(1, 0, 0), triple(0.2, 0.3, 0.5)}) {
    EXPECT_EQ(decide_and_fuse(m, preds, 3).fused, s);
  }
}

TEST(Decide, UniverseIsPlainMean) {
  const auto& f = predictor_frame();
  const auto m = evidence::vacuous_mass(f);
  const std::vector<std::vector<double>> preds = {{1, 2}, {4, 8}, {7, 5}};
  const auto d = decide_and_fuse(m, preds, 2);
  EXPECT_EQ(d.fused[0], (1.0 + 4.0 + 7.0) / 3.0);
  EXPECT_EQ(d.fused[1], (2.0 + 8.0 + 5.0) / 3.0);
  EXPECT_THROW(decide_and_fuse(m, preds, 3), InputError);
}

TEST(Pipeline, FusedStaysInsideSelectedMembers) {
  const auto& p = pipeline();
  const auto origin = experiment::default_origin(p.records, 24);
  const auto d = run_fusion(p.predictors, p.records, origin);
  ASSERT_EQ(d.fused.size(), 24u);
  ASSERT_EQ(d.event_masses.size(), 3u);
  EXPECT_EQ(d.horizon_timestamps.front(), origin);
  for (const auto& m : d.event_masses) EXPECT_NEAR(m.total(), 1.0, 1e-9);
  EXPECT_NEAR(d.combined.total(), 1.0, 1e-9);
  std::vector<double> actual;
  for (std::size_t t = 0; t < 24; ++t) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t j = 0; j < 3; ++j) {
      if (!d.selected.contains(j)) continue;
      lo = std::min(lo, d.member_forecasts[j][t]);
      hi = std::max(hi, d.member_forecasts[j][t]);
    }
    EXPECT_GE(d.fused[t], lo - 1e-12);
    EXPECT_LE(d.fused[t], hi + 1e-12);
    actual.push_back(p.records[p.records.size() - 24 + t].load_kw);
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < 3; ++j) worst = std::max(worst, metrics::mae(d.member_forecasts[j], actual));
  EXPECT_LE(metrics::mae(d.fused, actual), worst + 1e-12);
}

TEST(Pipeline, Deterministic) {
  const auto& p = pipeline();
  const auto origin = experiment::default_origin(p.records, 24);
  const auto a = run_fusion(p.predictors, p.records, origin);
  const auto b = run_fusion(p.predictors, p.records, origin);
  EXPECT_EQ(a.fused, b.fused);
  EXPECT_EQ(a.combined.dense(), b.combined.dense());
}

TEST(Pipeline, RejectsBadArguments) {
  const auto& p = pipeline();
  auto swapped = p.predictors;
  std::swap(swapped[0], swapped[2]);
  const auto origin = experiment::default_origin(p.records, 24);
  EXPECT_THROW(run_fusion(swapped, p.records, origin), InputError);
  EXPECT_THROW(run_fusion(p.predictors, p.records, origin + 1800), InputError);
  EXPECT_THROW(run_fusion(p.predictors, p.records, p.records[10].timestamp), InputError);
  EXPECT_THROW(run_fusion(p.predictors, p.records, p.records[230].timestamp), InputError);
}

TEST(Pipeline, PredictorRoundTrip) {
  const auto& p = pipeline();
  for (const auto& pred : p.predictors) {
    std::stringstream io;
    write_predictor(io, pred);
    const auto back = read_predictor(io);
    EXPECT_EQ(back.input.variant, pred.input.variant);
    EXPECT_EQ(back.input.window, pred.input.window);
    EXPECT_EQ(back.spec.min, pred.spec.min);
    EXPECT_EQ(back.spec.max, pred.spec.max);
    EXPECT_EQ(forecast_range(back, p.records, 200, 220), forecast_range(pred, p.records, 200, 220));
  }
}
