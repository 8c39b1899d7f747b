#include <benchmark/benchmark.h>

#include <random>

#include "evifuse/dataset.hpp"
#include "evifuse/evidence.hpp"
#include "evifuse/forecast.hpp"
#include "evifuse/fusion.hpp"

using namespace evifuse;

namespace {

evidence::MassFunction random_mass(const evidence::FrameOfDiscernment& f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<evidence::MassAssignment> a;
  for (std::uint32_t bits = 1; bits < f.power_set_size(); ++bits) a.emplace_back(f.subset(bits), u(rng));
  return evidence::make_mass(f, a, true);
}

evidence::FrameOfDiscernment frame_of(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("h" + std::to_string(i));
  return evidence::FrameOfDiscernment(names);
}

void BM_Disjunctive(benchmark::State& state) {
  const auto f = frame_of(static_cast<std::size_t>(state.range(0)));
  const auto a = random_mass(f, 1), b = random_mass(f, 2);
  for (auto _ : state) benchmark::DoNotOptimize(evidence::combine_disjunctive(a, b));
}
BENCHMARK(BM_Disjunctive)->Arg(3)->Arg(6)->Arg(10);

void BM_Conjunctive(benchmark::State& state) {
  const auto f = frame_of(static_cast<std::size_t>(state.range(0)));
  const auto a = random_mass(f, 3), b = random_mass(f, 4);
  for (auto _ : state) benchmark::DoNotOptimize(evidence::combine_conjunctive(a, b));
}
BENCHMARK(BM_Conjunctive)->Arg(3)->Arg(6)->Arg(10);

void BM_Belief(benchmark::State& state) {
  const auto f = frame_of(static_cast<std::size_t>(state.range(0)));
  const auto m = random_mass(f, 5);
  const auto x = f.subset(static_cast<std::uint32_t>(f.power_set_size() / 2 - 1));
  for (auto _ : state) benchmark::DoNotOptimize(evidence::belief(m, x));
}
BENCHMARK(BM_Belief)->Arg(4)->Arg(10)->Arg(16);

void BM_FuseThreeEvents(benchmark::State& state) {
  const auto& f = fusion::predictor_frame();
  auto t = [&](double a, double b, double c) {
    return evidence::make_mass(f, {{f.singleton(0), a}, {f.singleton(1), b}, {f.singleton(2), c}});
  };
  const std::vector<evidence::MassFunction> events = {t(0.30, 0.26, 0.44), t(0.31, 0.34, 0.35),
                                                      t(0.24, 0.41, 0.35)};
  for (auto _ : state) benchmark::DoNotOptimize(fusion::fuse_events(events));
}
BENCHMARK(BM_FuseThreeEvents);

forecast::Sequence random_sequence(std::size_t steps, std::size_t width) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  forecast::Sequence s(steps, std::vector<double>(width));
  for (auto& x : s) {
    for (auto& v : x) v = u(rng);
  }
  return s;
}

void BM_LstmForward(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto p = forecast::init_params(4, hidden, 1, 1);
  const auto seq = random_sequence(5, 4);
  for (auto _ : state) benchmark::DoNotOptimize(forecast::forward_sequence(p, seq));
}
BENCHMARK(BM_LstmForward)->Arg(8)->Arg(16)->Arg(64);

void BM_LstmBackward(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto p = forecast::init_params(4, hidden, 1, 1);
  const auto seq = random_sequence(5, 4);
  const std::vector<double> targets(5, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(forecast::backward(p, seq, targets));
}
BENCHMARK(BM_LstmBackward)->Arg(8)->Arg(16)->Arg(64);

void BM_BuildSamples(benchmark::State& state) {
  const auto recs = dataset::synth_generate(7, static_cast<std::size_t>(state.range(0)));
  const auto n = dataset::normalize(recs);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dataset::build_samples(n, {dataset::InputVariant::kWindowed, 5}));
  }
}
BENCHMARK(BM_BuildSamples)->Arg(504)->Arg(8760);

}  // namespace
BENCHMARK_MAIN();
