#include <benchmark/benchmark.h>

#include "xview/encoder.hpp"
#include "xview/ops.hpp"

namespace {

using namespace xview;

Tensor random_tensor(Shape shape, Rng& rng, bool grad = false) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor(std::move(shape), std::move(v), grad);
}

// args: channels, spatial size, stride
void BM_Conv2dForward(benchmark::State& state) {
  Rng rng(1);
  const auto c = static_cast<std::size_t>(state.range(0)), s = static_cast<std::size_t>(state.range(1));
  const Tensor x = random_tensor({c, s, s}, rng), k = random_tensor({c, c, 3, 3}, rng), b = random_tensor({c}, rng);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, k, b, static_cast<std::size_t>(state.range(2)), 1));
}
BENCHMARK(BM_Conv2dForward)->Args({8, 64, 1})->Args({16, 32, 1})->Args({32, 16, 2});

void BM_Conv2dBackward(benchmark::State& state) {
  Rng rng(2);
  const auto c = static_cast<std::size_t>(state.range(0)), s = static_cast<std::size_t>(state.range(1));
  const Tensor x = random_tensor({c, s, s}, rng, true), k = random_tensor({c, c, 3, 3}, rng, true);
  const Tensor b = random_tensor({c}, rng, true);
  for (auto _ : state) {
    backward(ops::sum(ops::conv2d(x, k, b, 1, 1)));
    Tensor(x).zero_grad();
    Tensor(k).zero_grad();
    Tensor(b).zero_grad();
  }
}
BENCHMARK(BM_Conv2dBackward)->Args({8, 64})->Args({16, 32});

void BM_EncoderToy(benchmark::State& state) {
  Rng rng(3);
  const Encoder enc(EncoderConfig{}, rng);
  const Tensor img = random_tensor({3, 64, 64}, rng);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(img));
}
BENCHMARK(BM_EncoderToy);

}  // namespace

BENCHMARK_MAIN();
