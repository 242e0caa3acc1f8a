// Serial reference kernels against the OpenMP versions on synthetic data.
// Argument: number of items. Thread count follows OMP_NUM_THREADS.
#include <benchmark/benchmark.h>

#include <array>
#include <map>

#include "distillhash/distillation.hpp"
#include "distillhash/encoder.hpp"
#include "distillhash/evaluation.hpp"
#include "distillhash/noisy_labels.hpp"
#include "distillhash/reference.hpp"
#include "distillhash/synth.hpp"

namespace {

using namespace dh;

constexpr std::size_t kDim = 64;
constexpr std::size_t kNeighbors = 4;

struct Fixture {
  FeatureSet features;
  ThresholdPair thresholds;
  NeighborGraph graph;
  EncoderModel model;
  EtaField eta;
  BinaryCodes codes;
};

// Built once per size and shared by every benchmark.
const Fixture& fixture(std::size_t n) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  SyntheticSpec spec;
  spec.points_per_cluster = n / spec.n_clusters;
  spec.dim = kDim;
  FeatureSet fs = synth_generate(spec);
  const auto est = estimate_thresholds(fs, 1.0, 1.0, 2'000'000, 1);
  auto graph = build_neighbor_graph(fs, kNeighbors);
  const std::array<std::size_t, 4> dims{kDim, 512, 256, 48};
  auto model = init_encoder(dims, 7);
  auto eta = estimate_eta(model, fs, 1.0);
  auto codes = lsh_baseline(fs, 16, 11);
  return cache
      .emplace(n, Fixture{std::move(fs), est.thresholds, std::move(graph), std::move(model), std::move(eta),
                          std::move(codes)})
      .first->second;
}

void BM_NoisyLabels_Parallel(benchmark::State& state) {
  const auto& f = fixture(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_noisy_labels(f.features, f.thresholds));
}
void BM_NoisyLabels_Serial(benchmark::State& state) {
  const auto& f = fixture(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reference::build_noisy_labels(f.features, f.thresholds));
}

void BM_NeighborGraph_Parallel(benchmark::State& state) {
  const auto& f = fixture(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_neighbor_graph(f.features, kNeighbors));
}
void BM_NeighborGraph_Serial(benchmark::State& state) {
  const auto& f = fixture(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reference::build_neighbor_graph(f.features, kNeighbors));
}

void BM_Distill_Parallel(benchmark::State& state) {
  const auto& f = fixture(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(distill_pairs(f.eta, f.graph));
}
void BM_Distill_Serial(benchmark::State& state) {
  const auto& f = fixture(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reference::distill_pairs(f.eta, f.graph));
}

void BM_ForwardAll_Parallel(benchmark::State& state) {
  const auto& f = fixture(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(forward_all(f.model, f.features));
}
void BM_ForwardAll_Serial(benchmark::State& state) {
  const auto& f = fixture(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reference::forward_all(f.model, f.features));
}

void BM_Map_Parallel(benchmark::State& state) {
  const auto& f = fixture(state.range(0));
  const LabeledCodes db{f.codes, f.features.labels()};
  for (auto _ : state) benchmark::DoNotOptimize(mean_average_precision(db, db, {}));
}
void BM_Map_Serial(benchmark::State& state) {
  const auto& f = fixture(state.range(0));
  const LabeledCodes db{f.codes, f.features.labels()};
  for (auto _ : state) benchmark::DoNotOptimize(reference::mean_average_precision(db, db, {}));
}

#define DH_BENCH(fn) BENCHMARK(fn)->Arg(300)->Arg(600)->Arg(1200)->Unit(benchmark::kMillisecond)

DH_BENCH(BM_NoisyLabels_Parallel);
DH_BENCH(BM_NoisyLabels_Serial);
DH_BENCH(BM_NeighborGraph_Parallel);
DH_BENCH(BM_NeighborGraph_Serial);
DH_BENCH(BM_Distill_Parallel);
DH_BENCH(BM_Distill_Serial);
DH_BENCH(BM_ForwardAll_Parallel);
DH_BENCH(BM_ForwardAll_Serial);
DH_BENCH(BM_Map_Parallel);
DH_BENCH(BM_Map_Serial);

}  // namespace

BENCHMARK_MAIN();
