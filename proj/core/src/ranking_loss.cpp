#include "fgir/ranking_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fgir/error.hpp"

namespace fgir {

LossResult smooth_rank_loss(std::span<const double> scores, const AttributeLabels& labels) {
  const std::size_t k = labels.vocab_size();
  if (scores.size() != k) {
    throw Error(ErrorCode::kDimensionMismatch,
                "score vector has length " + std::to_string(scores.size()) +
                    " but labels '" + labels.id() + "' have vocabulary " + std::to_string(k));
  }
  require_finite(scores, "scores for '" + labels.id() + "'");

  LossResult out;
  out.grad.assign(k, 0.0);
  const auto mask = labels.mask();
  const std::size_t n_pos = labels.positives().size();
  if (n_pos == 0 || n_pos == k) return out;

  // a: largest negative score, b: smallest positive score. Every pair term is
  // exp(f_v - f_u) = exp(f_v - a) * exp(a - b) * exp(b - f_u), each factor <= 1
  // except the middle one, which is folded into the shift m.
  double a = -std::numeric_limits<double>::infinity();
  double b = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    if (mask[i]) {
      b = std::min(b, scores[i]);
    } else {
      a = std::max(a, scores[i]);
    }
  }
  const double m = std::max(a - b, 0.0);

  double sum_neg = 0.0;
  double sum_pos = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (mask[i]) {
      sum_pos += std::exp(b - scores[i]);
    } else {
      sum_neg += std::exp(scores[i] - a);
    }
  }
  const double bridge = std::exp(a - b - m);
  const double pair_sum = sum_neg * sum_pos * bridge;  // sum of exp(f_v - f_u - m)
  const double z = std::exp(-m) + pair_sum;

  out.loss = m > 0.0 ? m + std::log(z) : std::log1p(pair_sum);
  for (std::size_t i = 0; i < k; ++i) {
    if (mask[i]) {
      out.grad[i] = -std::exp(b - scores[i]) * sum_neg * bridge / z;
    } else {
      out.grad[i] = std::exp(scores[i] - a) * sum_pos * bridge / z;
    }
  }
  return out;
}

BatchLoss batch_rank_loss(std::span<const double> score_matrix, std::size_t rows,
                          std::span<const AttributeLabels> labels) {
  if (rows == 0) throw Error(ErrorCode::kInvalidArgument, "batch is empty");
  if (labels.size() != rows) {
    throw Error(ErrorCode::kShapeMismatch, "batch has " + std::to_string(rows) +
                                               " score rows but " +
                                               std::to_string(labels.size()) + " label sets");
  }
  const std::size_t k = labels.front().vocab_size();
  if (score_matrix.size() != rows * k) {
    throw Error(ErrorCode::kShapeMismatch,
                "score matrix holds " + std::to_string(score_matrix.size()) + " values, expected " +
                    std::to_string(rows) + " x " + std::to_string(k));
  }
  for (const auto& l : labels) {
    if (l.vocab_size() != k) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "labels '" + l.id() + "' have vocabulary " + std::to_string(l.vocab_size()) +
                      ", batch uses " + std::to_string(k));
    }
  }

  BatchLoss out;
  out.grad.assign(rows * k, 0.0);
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto sample = smooth_rank_loss(score_matrix.subspan(r * k, k), labels[r]);
    out.mean_loss += sample.loss;
    out.losses.push_back(sample.loss);
    for (std::size_t j = 0; j < k; ++j) out.grad[r * k + j] = sample.grad[j] * inv_rows;
  }
  out.mean_loss *= inv_rows;
  return out;
}

}  // namespace fgir
