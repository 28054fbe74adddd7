#include <benchmark/benchmark.h>

#include "xview/metrics.hpp"
#include "xview/rng.hpp"

namespace {

using namespace xview;

Tensor random_map(std::size_t side, Rng& rng) {
  std::vector<double> v(side * side);
  for (double& x : v) x = rng.uniform(0.0, 1.0);
  return Tensor({side, side}, std::move(v));
}

void BM_AllMetrics(benchmark::State& state) {
  Rng rng(1);
  const auto side = static_cast<std::size_t>(state.range(0));
  const HeatmapPair pair(random_map(side, rng), random_map(side, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kld(pair));
    benchmark::DoNotOptimize(sim(pair));
    benchmark::DoNotOptimize(nss(pair));
  }
}
BENCHMARK(BM_AllMetrics)->Arg(64)->Arg(224);

}  // namespace

BENCHMARK_MAIN();
