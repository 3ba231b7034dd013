#include <benchmark/benchmark.h>

#include "scopealign/checkpoint.hpp"
#include "scopealign/metrics.hpp"
#include "scopealign/objectives.hpp"
#include "scopealign/records.hpp"

#include <random>

using namespace scopealign;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, bool grad = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(r * c);
  for (double& x : v) x = d(rng);
  return Tensor::matrix(r, c, std::move(v), grad);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(192);

void BM_EncodeImages(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  Rng rng = make_rng(3, "bench");
  const VisionEncoder enc(EncoderDims{192, 64, 32}, rng);
  const Tensor x = random_matrix(batch, 192, 4);
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(x));
}
BENCHMARK(BM_EncodeImages)->Arg(8)->Arg(32)->Arg(256);

void BM_DetectionLossBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    const Tensor v = random_matrix(n, 32, 5, true), t = random_matrix(n, 32, 6, true);
    const auto [sv, st] = cosine_similarity_matrices({l2_normalize_rows(v), true}, {l2_normalize_rows(t), true});
    backward(detection_loss(sv, st, 0.07));
    benchmark::DoNotOptimize(v.grad());
  }
}
BENCHMARK(BM_DetectionLossBackward)->Arg(8)->Arg(32)->Arg(128);

void BM_Auroc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(7);
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = std::uniform_real_distribution<double>()(rng);
    y[i] = static_cast<int>(i % 5 == 0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(auroc(s, y));
    benchmark::DoNotOptimize(aupr(s, y));
  }
}
BENCHMARK(BM_Auroc)->Arg(200)->Arg(2916)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
