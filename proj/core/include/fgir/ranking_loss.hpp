#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fgir/feature.hpp"

namespace fgir {

/// Loss value and its gradient with respect to each of the K scores.
struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;
};

/**
 * Smooth pairwise ranking loss
 *
 *     L = log(1 + sum_{v not in Y, u in Y} exp(f_v - f_u))
 *
 * with its exact gradient. The pair sum is factored into per-label
 * exponential sums, shifted by m = max(max_v f_v - min_u f_u, 0), so the
 * cost is O(K) and scores of magnitude 1e4 do not overflow.
 *
 * Samples whose positive set is empty or covers the whole vocabulary have
 * no pairs; they yield loss 0 and a zero gradient.
 */
LossResult smooth_rank_loss(std::span<const double> scores, const AttributeLabels& labels);

struct BatchLoss {
  double mean_loss = 0.0;
  /// Row-major B x K; row b is the per-sample gradient divided by B.
  std::vector<double> grad;
  /// Per-sample losses, length B.
  std::vector<double> losses;
};

/// Mean loss over a row-major B x K score matrix. Rows are reduced in index order.
BatchLoss batch_rank_loss(std::span<const double> score_matrix, std::size_t rows,
                          std::span<const AttributeLabels> labels);

}  // namespace fgir
