#include <benchmark/benchmark.h>

#include <random>

#include "fgir/retrieval.hpp"

namespace {

fgir::GalleryIndex make_gallery(std::size_t n, std::size_t d, fgir::Metric metric) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> uniform(0.0f, 1.0f);
  std::vector<fgir::FeatureVector> vs;
  std::vector<fgir::ItemAnnotation> anns;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> v(d);
    for (auto& x : v) x = uniform(rng);
    const std::string id = "g" + std::to_string(i);
    vs.emplace_back(id, std::move(v));
    anns.push_back({fgir::AttributeLabels(id, 1, {}), id, std::nullopt});
  }
  return fgir::build_index(std::move(vs), anns, fgir::IndexOptions{metric, true, false});
}

void BM_QueryTopK(benchmark::State& state) {
  const auto metric = state.range(1) == 0 ? fgir::Metric::kEuclidean : fgir::Metric::kHistogramIntersection;
  const auto threads = static_cast<unsigned>(state.range(2));
  const auto index = make_gallery(static_cast<std::size_t>(state.range(0)), 4096, metric);
  std::vector<float> q(4096, 0.5f);
  const fgir::FeatureVector query("q", q);
  for (auto _ : state) benchmark::DoNotOptimize(fgir::query_topk(index, query, 10, std::nullopt, threads));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_QueryTopK)
    ->Args({2000, 0, 1})
    ->Args({2000, 0, 4})
    ->Args({2000, 1, 1})
    ->Args({2000, 1, 4})
    ->Unit(benchmark::kMillisecond);

}  // namespace
