#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "fgir/error.hpp"
#include "fgir/evaluation.hpp"
#include "oracles.hpp"

using namespace fgir;

namespace {

RetrievalResult hits(std::initializer_list<const char*> ids) {
  RetrievalResult r{"q", Metric::kEuclidean, {}};
  double s = 0.0;
  for (const char* id : ids) r.hits.push_back({id, s += 1.0});
  return r;
}

Relevance among(std::set<std::string> ids) {
  return [ids = std::move(ids)](std::string_view id) { return ids.contains(std::string(id)); };
}

ItemAnnotation ann(std::string id, std::string instance, std::vector<std::size_t> attrs = {},
                   std::optional<std::string> coarse = std::nullopt) {
  return {AttributeLabels(std::move(id), 8, std::move(attrs)), std::move(instance), std::move(coarse)};
}

}  // namespace

TEST_CASE("precision_at_k examples") {
  const auto r = hits({"a", "b", "c", "d", "e"});
  CHECK(precision_at_k(r, among({"a", "c", "e"}), 5) == 0.6);
  CHECK(precision_at_k(r, among({}), 5) == 0.0);
  CHECK(precision_at_k(r, among({"a", "b", "c", "d", "e"}), 5) == 1.0);
  // Fewer hits than k still divides by k.
  CHECK(precision_at_k(r, among({"a"}), 10) == 0.1);
  CHECK_THROWS_AS(precision_at_k(r, among({}), 0), Error);
}

TEST_CASE("accuracy_at_k examples") {
  const auto r = hits({"a", "b", "c", "d"});
  CHECK(accuracy_at_k(r, among({"c"}), 3) == 1);
  CHECK(accuracy_at_k(r, among({"d"}), 3) == 0);
  CHECK(accuracy_at_k(r, among({}), 3) == 0);
  CHECK_THROWS_AS(accuracy_at_k(r, among({}), 0), Error);
}

TEST_CASE("attribute_iou examples") {
  CHECK(attribute_iou(AttributeLabels("a", 8, {1, 2, 3}), AttributeLabels("b", 8, {2, 3, 4})) == 0.5);
  CHECK(attribute_iou(AttributeLabels("a", 8, {1, 5}), AttributeLabels("b", 8, {1, 5})) == 1.0);
  CHECK(attribute_iou(AttributeLabels("a", 8, {1}), AttributeLabels("b", 8, {2})) == 0.0);
  CHECK(attribute_iou(AttributeLabels("a", 8, {}), AttributeLabels("b", 8, {})) == 1.0);
  CHECK_THROWS_AS(attribute_iou(AttributeLabels("a", 8, {1}), AttributeLabels("b", 9, {1})), Error);
}

TEST_CASE("metric bounds on random rankings") {
  std::mt19937_64 rng(1);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 200; ++trial) {
    RetrievalResult r{"q", Metric::kEuclidean, {}};
    std::set<std::string> rel;
    for (int i = 0; i < 20; ++i) {
      const std::string id = "g" + std::to_string(i);
      r.hits.push_back({id, static_cast<double>(i)});
      if (coin(rng)) rel.insert(id);
    }
    const auto relevant = among(rel);
    for (std::size_t k = 1; k <= 20; ++k) {
      const double p = precision_at_k(r, relevant, k);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      CHECK((accuracy_at_k(r, relevant, k) == 1) == (p > 0.0));
      if (k > 1) CHECK(accuracy_at_k(r, relevant, k) >= accuracy_at_k(r, relevant, k - 1));
    }
  }
}

TEST_CASE("evaluate on exact duplicates gives perfect fine precision at 1") {
  std::mt19937_64 rng(2);
  std::vector<FeatureVector> vs;
  std::vector<ItemAnnotation> anns;
  std::vector<EvalQuery> queries;
  for (int i = 0; i < 20; ++i) {
    const auto v = oracle::random_vector(rng, 6);
    for (int copy = 0; copy < 2; ++copy) {
      const std::string id = "i" + std::to_string(i) + "_" + std::to_string(copy);
      vs.emplace_back(id, v);
      anns.push_back(ann(id, "inst" + std::to_string(i), {static_cast<std::size_t>(i % 8)}, "g" + std::to_string(i / 5)));
      queries.push_back({vs.back(), anns.back()});
    }
  }
  const auto index = build_index(vs, anns, IndexOptions{});
  EvalOptions opt;
  opt.exclude_self = true;
  opt.ks = {5, 1, 1};
  const auto report = evaluate(index, queries, opt);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.query_count == 40);
  CHECK(report.rows[0].k == 1);
  CHECK(report.rows[0].fine_map == 1.0);
  CHECK(report.rows[0].accuracy == 1.0);
  CHECK(report.rows[0].attribute_iou == 1.0);
  REQUIRE(report.rows[0].coarse_map.has_value());
  CHECK(*report.rows[0].coarse_map == 1.0);
  CHECK(report.rows[1].fine_map == doctest::Approx(0.2));

  opt.threads = 4;
  const auto again = evaluate(index, queries, opt);
  CHECK(again.rows[1].fine_map == report.rows[1].fine_map);
  CHECK(again.rows[1].attribute_iou == report.rows[1].attribute_iou);
}

TEST_CASE("single relevant item ranked first of ten") {
  std::vector<FeatureVector> vs;
  std::vector<ItemAnnotation> anns;
  for (int i = 0; i < 10; ++i) {
    const std::string id = "g" + std::to_string(i);
    vs.emplace_back(id, std::vector<float>{static_cast<float>(i), 1.0f});
    anns.push_back(ann(id, i == 0 ? "target" : "other" + std::to_string(i)));
  }
  const auto index = build_index(vs, anns, IndexOptions{Metric::kEuclidean, false, false});
  const std::vector<EvalQuery> q{{FeatureVector("q", {0.0f, 1.0f}), ann("q", "target")}};
  EvalOptions opt;
  opt.ks = {5};
  const auto report = evaluate(index, q, opt);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].fine_map == 0.2);
  CHECK(report.rows[0].accuracy == 1.0);
  CHECK_FALSE(report.rows[0].coarse_map.has_value());
}

TEST_CASE("random features give chance-level accuracy") {
  // N gallery items, each query's instance matches exactly one of them.
  const std::size_t n = 20, queries_per_seed = 50, seeds = 20;
  std::size_t hits_total = 0, trials = 0;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<FeatureVector> vs;
    std::vector<ItemAnnotation> anns;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = "g" + std::to_string(i);
      vs.emplace_back(id, oracle::random_vector(rng, 8));
      anns.push_back(ann(id, "inst" + std::to_string(i)));
    }
    const auto index = build_index(vs, anns, IndexOptions{});
    std::vector<EvalQuery> qs;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t q = 0; q < queries_per_seed; ++q) {
      qs.push_back({FeatureVector("q" + std::to_string(q), oracle::random_vector(rng, 8)),
                    ann("q" + std::to_string(q), "inst" + std::to_string(pick(rng)))});
    }
    EvalOptions opt;
    opt.ks = {1};
    const auto report = evaluate(index, qs, opt);
    hits_total += static_cast<std::size_t>(std::lround(report.rows[0].accuracy * queries_per_seed));
    trials += queries_per_seed;
  }
  const double p = 1.0 / n;
  const double mean = static_cast<double>(hits_total) / static_cast<double>(trials);
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(trials));
  CHECK(std::abs(mean - p) <= 3 * sigma);
}

TEST_CASE("relevant-hit IoU mode and label errors") {
  std::vector<FeatureVector> vs{FeatureVector("a", {1, 0}), FeatureVector("b", {0.9f, 0.1f})};
  std::vector<ItemAnnotation> anns{ann("a", "x", {1, 2}), ann("b", "y", {1})};
  const auto index = build_index(vs, anns, IndexOptions{});
  const std::vector<EvalQuery> q{{FeatureVector("q", {1, 0}), ann("q", "y", {1})}};
  EvalOptions opt;
  opt.ks = {2};
  CHECK(evaluate(index, q, opt).rows[0].attribute_iou == doctest::Approx(0.75));
  opt.iou_mode = IouMode::kRelevantHits;
  CHECK(evaluate(index, q, opt).rows[0].attribute_iou == 1.0);

  const std::vector<EvalQuery> bad{{FeatureVector("q", {1, 0}), ann("other", "y")}};
  CHECK_THROWS_AS(evaluate(index, bad, opt), Error);
}
