#include <benchmark/benchmark.h>

#include <random>

#include "fgir/bilinear.hpp"

namespace {

void BM_BilinearPool(benchmark::State& state) {
  const std::size_t c = 512, p = 20, side = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> uniform(0.0f, 1.0f);
  std::normal_distribution<double> normal;
  std::vector<float> values(side * side * c);
  for (auto& v : values) v = uniform(rng);
  std::vector<double> matrix(c * p);
  for (auto& m : matrix) m = normal(rng);
  const fgir::SpatialFeatureMap map("m", side, side, c, std::move(values));
  const fgir::ProjectionBasis basis(c, p, std::vector<double>(c, 0.5), std::move(matrix));
  for (auto _ : state) benchmark::DoNotOptimize(fgir::bilinear_pool(map, basis));
}
BENCHMARK(BM_BilinearPool)->Arg(7)->Arg(14)->Unit(benchmark::kMicrosecond);

void BM_FitProjection(benchmark::State& state) {
  const std::size_t c = 64, n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> uniform(-1.0f, 1.0f);
  std::vector<float> samples(n * c);
  for (auto& s : samples) s = uniform(rng);
  for (auto _ : state) benchmark::DoNotOptimize(fgir::fit_projection(samples, c, 20));
}
BENCHMARK(BM_FitProjection)->Arg(10'000)->Unit(benchmark::kMillisecond);

}  // namespace
