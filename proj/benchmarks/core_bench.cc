#include <benchmark/benchmark.h>

#include <vector>

#include "dragon/aggregator.h"
#include "dragon/random.h"
#include "dragon/sim/simulator.h"
#include "dragon/topp.h"
#include "dragon/transport/wire.h"

namespace dragon {
namespace {

LogDist RandomDist(std::size_t v, std::uint64_t seed) {
  std::vector<double> w(v);
  for (std::size_t x = 0; x < v; ++x) w[x] = UniformAt(seed, 1, x) * UniformAt(seed, 2, x);
  return LogDist::FromWeights(w);
}

void BM_Aggregate(benchmark::State& state) {
  const auto v = static_cast<std::size_t>(state.range(0));
  DraftRecord l;
  DraftRecord r;
  l.dist = RandomDist(v, 1);
  r.dist = RandomDist(v, 2);
  l.token = SampleInverseCdf(l.dist, 0.3);
  r.token = SampleInverseCdf(r.dist, 0.6);
  l.h = {0.2};
  r.h = {-0.1};
  std::uint32_t step = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(Aggregate(l, r, DrawsForStep(5, step++)));
  }
}
BENCHMARK(BM_Aggregate)->Arg(8)->Arg(64)->Arg(1024)->Arg(32000);

void BM_TopPEncode(benchmark::State& state) {
  const auto p = RandomDist(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(TopPEncode(p, 0.8));
}
BENCHMARK(BM_TopPEncode)->Arg(64)->Arg(1024)->Arg(32000);

void BM_TopPDecode(benchmark::State& state) {
  const auto c = TopPEncode(RandomDist(static_cast<std::size_t>(state.range(0)), 4), 0.8);
  for (auto _ : state) benchmark::DoNotOptimize(TopPDecode(c));
}
BENCHMARK(BM_TopPDecode)->Arg(64)->Arg(1024)->Arg(32000);

void BM_WireRoundTrip(benchmark::State& state) {
  const auto codec = state.range(0) ? transport::Codec::kBlock : transport::Codec::kNone;
  transport::DraftMsg d{1, 2, 0.5, TopPEncode(RandomDist(1024, 5), 0.9), 1.0f};
  for (auto _ : state) benchmark::DoNotOptimize(transport::Decode(transport::Encode(d, codec)));
}
BENCHMARK(BM_WireRoundTrip)->Arg(0)->Arg(1);

void BM_Simulate(benchmark::State& state) {
  const auto trace = sim::AcceptanceTrace::Bernoulli(static_cast<std::size_t>(state.range(0)), 0.4, 0.6, 1);
  sim::SimConfig cfg;
  cfg.costs = {1.0, 1.5, 0.75, 0.75};
  cfg.net = {5.0, 2.0, std::nullopt};
  cfg.strategy = {sim::StrategyKind::kDragon, 0};
  for (auto _ : state) benchmark::DoNotOptimize(sim::Simulate(trace, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(1000)->Arg(10000);

}  // namespace
}  // namespace dragon

BENCHMARK_MAIN();
