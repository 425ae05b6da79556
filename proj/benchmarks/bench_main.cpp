// Microbenchmarks for the pipeline's hot paths.

#include <benchmark/benchmark.h>

#include <numeric>

#include "intentbench/dsp.hpp"
#include "intentbench/ingestion.hpp"
#include "intentbench/models.hpp"
#include "intentbench/preprocess.hpp"
#include "intentbench/rng.hpp"
#include "intentbench/split.hpp"

using namespace intentbench;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

template <typename T>
std::vector<T> batch(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<T> x(n * 16 * 125);
  for (auto& v : x) v = static_cast<T>(rng.normal());
  return x;
}

void BM_AlignNearest(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<Timestamp> eeg(n);
  for (std::size_t i = 0; i < n; ++i) eeg[i].nanos = static_cast<std::int64_t>(i) * 8'000'000;
  std::vector<JoystickSample> joy(n / 12 + 1);
  for (std::size_t j = 0; j < joy.size(); ++j) joy[j].t.nanos = static_cast<std::int64_t>(j) * 100'000'000;
  for (auto _ : state) benchmark::DoNotOptimize(align_nearest(eeg, joy, {}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_AlignNearest)->Arg(30'000)->Arg(300'000);

void BM_ZeroPhaseHighpass(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)), 1);
  const auto sos = design_highpass(FilterSpec{}, 125.0);
  for (auto _ : state) benchmark::DoNotOptimize(dsp::filter_zero_phase(x, sos));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ZeroPhaseHighpass)->Arg(30'000);

void BM_ShallowForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  ShallowConvNet<float> m(16, 125, ShallowConvNetSpec{}, 1);
  const auto x = batch<float>(n, 2);
  const BatchView<float> v{x, n, 16, 125};
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(v, false, 0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ShallowForward)->Arg(1)->Arg(128);

void BM_ShallowForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  ShallowConvNet<float> m(16, 125, ShallowConvNetSpec{}, 1);
  const auto x = batch<float>(n, 3);
  const BatchView<float> v{x, n, 16, 125};
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % 5);
  const std::vector<double> w(5, 1.0);
  std::uint64_t step = 0;
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(m, v, y, w, true, step++));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ShallowForwardBackward)->Arg(128);

void BM_ExtractWindows(benchmark::State& state) {
  const std::size_t n = 30'000;
  EegRecording rec;
  rec.channels = standard_montage();
  rec.sample_rate_hz = 125.0;
  rec.timestamps.resize(n);
  for (std::size_t i = 0; i < n; ++i) rec.timestamps[i].nanos = static_cast<std::int64_t>(i) * 8'000'000;
  rec.samples = SampleMatrix::Random(16, static_cast<Eigen::Index>(n));
  std::vector<LabeledSample> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = {rec.timestamps[i], label_from_code(static_cast<int>(i / 500 % 5)), 300, i};
  std::vector<std::size_t> part(n);
  std::iota(part.begin(), part.end(), std::size_t{0});
  for (auto _ : state) benchmark::DoNotOptimize(extract_windows(rec, labels, part, SplitConfig{}, Partition::Train));
}
BENCHMARK(BM_ExtractWindows);

}  // namespace
