#include <benchmark/benchmark.h>

#include "xview/nmf.hpp"
#include "xview/rng.hpp"

namespace {

using namespace xview;

Tensor random_nonneg(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.uniform(0.01, 1.0);
  return Tensor({rows, cols}, std::move(v));
}

// args: c, M, r. Six iterations as in training.
void BM_NmfFactorize(benchmark::State& state) {
  Rng rng(1);
  const auto c = static_cast<std::size_t>(state.range(0)), m = static_cast<std::size_t>(state.range(1)),
             r = static_cast<std::size_t>(state.range(2));
  const Tensor X = random_nonneg(c, m, rng), W = random_nonneg(c, r, rng), H = random_nonneg(r, m, rng);
  for (auto _ : state) benchmark::DoNotOptimize(nmf_factorize(X, W, H, 6));
}
BENCHMARK(BM_NmfFactorize)->Args({16, 192, 8})->Args({16, 64, 8})->Args({64, 588, 64});

}  // namespace

BENCHMARK_MAIN();
