#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "fgir/error.hpp"
#include "fgir/ranking_loss.hpp"
#include "oracles.hpp"

using namespace fgir;

namespace {

struct Instance {
  std::vector<double> scores;
  AttributeLabels labels;
};

Instance random_instance(std::mt19937_64& rng, std::size_t max_k, double spread = 3.0) {
  std::uniform_int_distribution<std::size_t> kdist(2, max_k);
  const std::size_t k = kdist(rng);
  std::uniform_int_distribution<std::size_t> pdist(1, k - 1);
  const std::size_t n_pos = pdist(rng);
  std::vector<std::size_t> all(k);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(n_pos);
  std::normal_distribution<double> normal(0.0, spread);
  std::vector<double> scores(k);
  for (auto& s : scores) s = normal(rng);
  return {std::move(scores), AttributeLabels("r", k, std::move(all))};
}

}  // namespace

TEST_CASE("loss on the worked three-label example") {
  const std::vector<double> scores{1.0, 2.0, 0.5};
  const AttributeLabels y("q", 3, {1});
  const auto r = smooth_rank_loss(scores, y);
  // Enumerated: log(1 + e^-1 + e^-1.5).
  CHECK(r.loss == doctest::Approx(0.464368784108).epsilon(1e-11));
  CHECK(r.loss == doctest::Approx(oracle::rank_loss_enumerated(scores, y.mask())).epsilon(1e-12));
  // Central differences, step 1e-4.
  CHECK(r.grad[0] == doctest::Approx(0.23122390).epsilon(1e-6));
  CHECK(r.grad[1] == doctest::Approx(-0.37146828).epsilon(1e-6));
  CHECK(r.grad[2] == doctest::Approx(0.14024438).epsilon(1e-6));
}

TEST_CASE("empty or full positive set gives zero loss and gradient") {
  const std::vector<double> scores{0.3, -2.0, 5.0, 1.0};
  for (const auto& y : {AttributeLabels("e", 4, {}), AttributeLabels("f", 4, {0, 1, 2, 3})}) {
    const auto r = smooth_rank_loss(scores, y);
    CHECK(r.loss == 0.0);
    for (double g : r.grad) CHECK(g == 0.0);
  }
}

TEST_CASE("loss rejects bad input") {
  const AttributeLabels y("q", 3, {1});
  const std::vector<double> short_scores{1.0, 2.0};
  CHECK_THROWS_AS(smooth_rank_loss(short_scores, y), Error);
  const std::vector<double> nan_scores{1.0, std::numeric_limits<double>::quiet_NaN(), 0.0};
  try {
    smooth_rank_loss(nan_scores, y);
    FAIL("expected non-finite error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFinite);
  }
}

TEST_CASE("loss does not overflow for large score gaps") {
  const std::vector<double> scores{1e4, -1e4, 0.0};
  const AttributeLabels y("q", 3, {1});
  const auto r = smooth_rank_loss(scores, y);
  CHECK(std::isfinite(r.loss));
  CHECK(r.loss == doctest::Approx(2e4).epsilon(1e-12));
  CHECK(r.grad[0] == doctest::Approx(1.0));
  CHECK(r.grad[1] == doctest::Approx(-1.0));
}

TEST_CASE("loss matches enumeration and finite differences on random instances") {
  std::mt19937_64 rng(2024);
  double worst_value = 0.0;
  double worst_grad = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    auto inst = random_instance(rng, trial < 150 ? 20 : 50);
    const auto mask = inst.labels.mask();
    const auto r = smooth_rank_loss(inst.scores, inst.labels);
    worst_value = std::max(worst_value, std::abs(r.loss - oracle::rank_loss_enumerated(inst.scores, mask)));
    if (inst.scores.size() <= 20) {
      const auto fd = oracle::central_difference(
          [&](const std::vector<double>& s) { return oracle::rank_loss_enumerated(s, mask); },
          inst.scores);
      worst_grad = std::max(worst_grad, oracle::max_relative_error(r.grad, fd));
    }
    // Sign and sum invariants.
    double sum = 0.0;
    for (std::size_t i = 0; i < r.grad.size(); ++i) {
      sum += r.grad[i];
      if (mask[i]) CHECK(r.grad[i] <= 0.0);
      else CHECK(r.grad[i] >= 0.0);
    }
    CHECK(std::abs(sum) < 1e-6);
    CHECK(r.loss > 0.0);
  }
  CHECK(worst_value < 1e-10);
  CHECK(worst_grad < 1e-4);
}

TEST_CASE("loss is shift invariant and monotone in positive scores") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = random_instance(rng, 20);
    const auto base = smooth_rank_loss(inst.scores, inst.labels);
    for (double c : {-100.0, 0.5, 1e3}) {
      auto shifted = inst.scores;
      for (auto& s : shifted) s += c;
      const auto r = smooth_rank_loss(shifted, inst.labels);
      CHECK(std::abs(r.loss - base.loss) < 1e-6);
      for (std::size_t i = 0; i < r.grad.size(); ++i) CHECK(std::abs(r.grad[i] - base.grad[i]) < 1e-6);
    }
    auto raised = inst.scores;
    raised[inst.labels.positives()[0]] += 0.7;
    CHECK(smooth_rank_loss(raised, inst.labels).loss <= base.loss);
  }
}

TEST_CASE("batch loss averages per-sample results") {
  const std::vector<double> one{1.0, 2.0, 0.5};
  const AttributeLabels y("q", 3, {1});
  const auto single = smooth_rank_loss(one, y);

  const std::vector<AttributeLabels> l1{y};
  const auto b1 = batch_rank_loss(one, 1, l1);
  CHECK(b1.mean_loss == single.loss);
  CHECK(b1.grad == single.grad);

  std::vector<double> two(one);
  two.insert(two.end(), one.begin(), one.end());
  const std::vector<AttributeLabels> l2{y, y};
  const auto b2 = batch_rank_loss(two, 2, l2);
  CHECK(b2.mean_loss == single.loss);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(b2.grad[j] == single.grad[j] / 2);
    CHECK(b2.grad[3 + j] == single.grad[j] / 2);
  }

  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::vector<double> matrix(4 * 6);
  for (auto& s : matrix) s = normal(rng);
  const std::vector<AttributeLabels> labels{AttributeLabels("a", 6, {0}), AttributeLabels("b", 6, {1, 2}),
                                            AttributeLabels("c", 6, {}), AttributeLabels("d", 6, {3, 4, 5})};
  const auto batch = batch_rank_loss(matrix, 4, labels);
  double expected = 0.0;
  for (std::size_t r = 0; r < 4; ++r) {
    const std::vector<double> row(matrix.begin() + static_cast<long>(r * 6), matrix.begin() + static_cast<long>(r * 6 + 6));
    expected += oracle::rank_loss_enumerated(row, labels[r].mask());
  }
  CHECK(std::abs(batch.mean_loss - expected / 4) < 1e-10);

  CHECK_THROWS_AS(batch_rank_loss(matrix, 3, labels), Error);
  const std::vector<AttributeLabels> ragged{AttributeLabels("a", 6, {0}), AttributeLabels("b", 5, {1}),
                                            AttributeLabels("c", 6, {}), AttributeLabels("d", 6, {3})};
  CHECK_THROWS_AS(batch_rank_loss(matrix, 4, ragged), Error);
}
