#include <doctest.h>

#include <cmath>
#include <random>

#include "fgir/error.hpp"
#include "fgir/retrieval.hpp"
#include "oracles.hpp"

using namespace fgir;

namespace {

ItemAnnotation ann(const std::string& id) { return {AttributeLabels(id, 4, {}), "inst_" + id, std::nullopt}; }

GalleryIndex make_index(const std::vector<std::pair<std::string, std::vector<float>>>& items, IndexOptions opt) {
  std::vector<FeatureVector> vs;
  std::vector<ItemAnnotation> anns;
  for (const auto& [id, v] : items) {
    vs.emplace_back(id, v);
    anns.push_back(ann(id));
  }
  return build_index(std::move(vs), anns, opt);
}

}  // namespace

TEST_CASE("index normalizes stored vectors") {
  const auto index = make_index({{"a", {3, 4}}}, IndexOptions{});
  CHECK(index.size() == 1);
  CHECK(index.vector(0)[0] == doctest::Approx(0.6));
  CHECK(index.vector(0)[1] == doctest::Approx(0.8));

  CHECK_THROWS_AS(make_index({}, IndexOptions{}), Error);
  CHECK_THROWS_AS(make_index({{"a", {1, 2}}, {"a", {3, 4}}}, IndexOptions{}), Error);
  CHECK_THROWS_AS(make_index({{"a", {1, 2}}, {"b", {3, 4, 5}}}, IndexOptions{}), Error);

  IndexOptions clamp{Metric::kHistogramIntersection, true, true};
  const auto clamped = make_index({{"a", {-3, 4}}}, clamp);
  CHECK(clamped.vector(0)[0] == 0.0f);
  CHECK(clamped.vector(0)[1] == doctest::Approx(0.8));
}

TEST_CASE("index requires an annotation per vector") {
  std::vector<FeatureVector> vs{FeatureVector("a", {1, 0}), FeatureVector("b", {0, 1})};
  const std::vector<ItemAnnotation> anns{ann("a")};
  try {
    build_index(vs, anns, IndexOptions{});
    FAIL("expected missing id");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingId);
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }
}

TEST_CASE("query_topk hand example") {
  const IndexOptions raw{Metric::kEuclidean, false, false};
  const auto index = make_index({{"a", {1, 0}}, {"b", {0, 1}}, {"c", {0.9f, 0.1f}}}, raw);
  const auto r = query_topk(index, FeatureVector("q", {1, 0}), 2);
  REQUIRE(r.hits.size() == 2);
  CHECK(r.query_id == "q");
  CHECK(r.hits[0].gallery_id == "a");
  CHECK(r.hits[0].score == 0.0);
  CHECK(r.hits[1].gallery_id == "c");
  CHECK(r.hits[1].score == doctest::Approx(std::sqrt(0.02)).epsilon(1e-6));

  CHECK(query_topk(index, FeatureVector("q", {1, 0}), 10).hits.size() == 3);

  const auto excluded = query_topk(index, FeatureVector("a", {1, 0}), 3, std::string_view("a"));
  REQUIRE(excluded.hits.size() == 2);
  CHECK(excluded.hits[0].gallery_id == "c");

  CHECK_THROWS_AS(query_topk(index, FeatureVector("q", {1, 0}), 0), Error);
  CHECK_THROWS_AS(query_topk(index, FeatureVector("q", {1, 0, 0}), 1), Error);
}

TEST_CASE("ties break by ascending gallery id") {
  const IndexOptions raw{Metric::kHistogramIntersection, false, false};
  const auto index = make_index({{"z", {1, 1}}, {"m", {1, 1}}, {"a", {1, 1}}, {"q", {0, 0}}}, raw);
  const auto r = query_topk(index, FeatureVector("x", {1, 1}), 3, std::nullopt, 2);
  REQUIRE(r.hits.size() == 3);
  CHECK(r.hits[0].gallery_id == "a");
  CHECK(r.hits[1].gallery_id == "m");
  CHECK(r.hits[2].gallery_id == "z");
}

TEST_CASE("query_topk matches the full-sort oracle") {
  std::mt19937_64 rng(42);
  for (Metric metric : {Metric::kEuclidean, Metric::kHistogramIntersection}) {
    const bool euclid = metric == Metric::kEuclidean;
    const std::size_t n = 500, d = 12;
    std::vector<std::vector<float>> rows;
    std::vector<std::string> ids;
    std::vector<FeatureVector> vs;
    std::vector<ItemAnnotation> anns;
    for (std::size_t i = 0; i < n; ++i) {
      rows.push_back(oracle::random_vector(rng, d, 0.0, 1.0));
      ids.push_back("g" + std::to_string(i));
      vs.emplace_back(ids.back(), rows.back());
      anns.push_back(ann(ids.back()));
    }
    const auto index = build_index(vs, anns, IndexOptions{metric, false, false});
    for (int q = 0; q < 40; ++q) {
      const auto query = oracle::random_vector(rng, d, 0.0, 1.0);
      const std::string exclude = q % 3 == 0 ? ids[static_cast<std::size_t>(q)] : "";
      const auto want = oracle::full_sort_topk(rows, ids, query, 25, euclid, exclude);
      for (unsigned threads : {1u, 4u}) {
        const auto got = query_topk(index, FeatureVector("q", query), 25,
                                    exclude.empty() ? std::nullopt : std::optional<std::string_view>(exclude), threads);
        REQUIRE(got.hits.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
          CHECK(got.hits[i].gallery_id == want[i].id);
          CHECK(std::abs(got.hits[i].score - want[i].score) <= 1e-9 * std::max(1.0, std::abs(want[i].score)));
        }
      }
    }
  }
}

TEST_CASE("smaller k is a prefix of larger k") {
  std::mt19937_64 rng(7);
  std::vector<std::pair<std::string, std::vector<float>>> items;
  for (int i = 0; i < 200; ++i) items.push_back({"g" + std::to_string(i), oracle::random_vector(rng, 6)});
  const auto index = make_index(items, IndexOptions{});
  const FeatureVector q("q", oracle::random_vector(rng, 6));
  const auto big = query_topk(index, q, 50, std::nullopt, 3);
  for (std::size_t k : {1u, 7u, 20u}) {
    const auto small = query_topk(index, q, k);
    REQUIRE(small.hits.size() == k);
    for (std::size_t i = 0; i < k; ++i) CHECK(small.hits[i] == big.hits[i]);
  }
  for (std::size_t i = 1; i < big.hits.size(); ++i) {
    CHECK_FALSE(ranks_before(big.hits[i], big.hits[i - 1], Metric::kEuclidean));
  }
}

TEST_CASE("normalized euclidean ranking follows the dot product") {
  std::mt19937_64 rng(8);
  std::vector<std::pair<std::string, std::vector<float>>> items;
  for (int i = 0; i < 100; ++i) items.push_back({"g" + std::to_string(i), oracle::random_vector(rng, 5)});
  const auto index = make_index(items, IndexOptions{});
  const auto qv = oracle::random_vector(rng, 5);
  const auto r = query_topk(index, FeatureVector("q", qv), 100);
  const auto prepared = index.prepare_query(qv);
  double previous = 2.0;
  for (const auto& hit : r.hits) {
    const double dot = kernels::dot(prepared, index.vector(*index.find(hit.gallery_id)));
    CHECK(dot <= previous + 1e-6);
    previous = dot;
  }
}

TEST_CASE("query_batch excludes each query's own id") {
  std::mt19937_64 rng(9);
  std::vector<std::pair<std::string, std::vector<float>>> items;
  std::vector<FeatureVector> queries;
  for (int i = 0; i < 30; ++i) {
    items.push_back({"g" + std::to_string(i), oracle::random_vector(rng, 4)});
    queries.emplace_back(items.back().first, items.back().second);
  }
  const auto index = make_index(items, IndexOptions{});
  const auto one = query_batch(index, queries, 5, true, 1);
  const auto four = query_batch(index, queries, 5, true, 4);
  REQUIRE(one.size() == queries.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].hits == four[i].hits);
    for (const auto& h : one[i].hits) CHECK(h.gallery_id != queries[i].id());
  }
}

TEST_CASE("metric names round trip") {
  CHECK(parse_metric(to_string(Metric::kEuclidean)) == Metric::kEuclidean);
  CHECK(parse_metric(to_string(Metric::kHistogramIntersection)) == Metric::kHistogramIntersection);
  CHECK(parse_metric("histogram_intersection") == Metric::kHistogramIntersection);
  CHECK_THROWS_AS(parse_metric("cosine"), Error);
}
