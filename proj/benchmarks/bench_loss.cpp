#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "fgir/attribute_head.hpp"
#include "fgir/ranking_loss.hpp"

namespace {

void BM_SmoothRankLoss(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<double> scores(k);
  for (auto& s : scores) s = normal(rng);
  std::vector<std::size_t> positives(k / 8 + 1);
  std::iota(positives.begin(), positives.end(), std::size_t{0});
  const fgir::AttributeLabels labels("x", k, positives);
  for (auto _ : state) benchmark::DoNotOptimize(fgir::smooth_rank_loss(scores, labels));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SmoothRankLoss)->Arg(32)->Arg(336)->Arg(1024);

void BM_HeadGradient(benchmark::State& state) {
  const std::size_t d = 4096, k = 336, batch = 16;
  const auto head = fgir::init_head(d, k, 1);
  std::mt19937_64 rng(2);
  std::normal_distribution<float> normal;
  std::vector<fgir::FeatureVector> xs;
  std::vector<fgir::AttributeLabels> ys;
  for (std::size_t i = 0; i < batch; ++i) {
    std::vector<float> v(d);
    for (auto& x : v) x = normal(rng);
    xs.emplace_back("x" + std::to_string(i), std::move(v));
    ys.emplace_back("x" + std::to_string(i), k, std::vector<std::size_t>{i, i + 20, i + 40});
  }
  for (auto _ : state) benchmark::DoNotOptimize(fgir::head_gradient(head, xs, ys));
}
BENCHMARK(BM_HeadGradient)->Unit(benchmark::kMillisecond);

}  // namespace
