#include "fgir/attribute_head.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>

#include "fgir/error.hpp"
#include "fgir/ranking_loss.hpp"

namespace fgir {

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  constexpr std::size_t kShown = 10;
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < kShown; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > kShown) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

}  // namespace

AttributeHead::AttributeHead(std::size_t in_dim, std::size_t vocab_size)
    : AttributeHead(in_dim, vocab_size, std::vector<double>(in_dim * vocab_size, 0.0),
                    std::vector<double>(vocab_size, 0.0)) {}

AttributeHead::AttributeHead(std::size_t in_dim, std::size_t vocab_size,
                             std::vector<double> weights, std::vector<double> bias)
    : in_dim_(in_dim), vocab_size_(vocab_size), weights_(std::move(weights)),
      bias_(std::move(bias)) {
  if (in_dim_ == 0 || vocab_size_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "attribute head needs positive in_dim and vocab_size");
  }
  if (weights_.size() != in_dim_ * vocab_size_ || bias_.size() != vocab_size_) {
    throw Error(ErrorCode::kShapeMismatch,
                "attribute head parameters do not match " + std::to_string(vocab_size_) + " x " +
                    std::to_string(in_dim_));
  }
  require_finite(weights_, "head weights");
  require_finite(bias_, "head bias");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg); };
  if (epochs == 0) fail("epochs must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be >= 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must lie in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must lie in (0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
}

std::vector<double> predict(const AttributeHead& head, const FeatureVector& x) {
  if (x.dim() != head.in_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature '" + x.id() + "' has dimension " + std::to_string(x.dim()) +
                    ", head expects " + std::to_string(head.in_dim()));
  }
  const std::size_t d = head.in_dim();
  const auto w = head.weights();
  const auto xs = x.values();
  std::vector<double> scores(head.bias().begin(), head.bias().end());
  for (std::size_t k = 0; k < head.vocab_size(); ++k) {
    double acc = 0.0;
    const double* row = w.data() + k * d;
    for (std::size_t j = 0; j < d; ++j) acc += row[j] * xs[j];
    scores[k] += acc;
  }
  return scores;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const TrainConfig& cfg, std::string_view block) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "adam step on '" + std::string(block) + "': parameter, gradient and state sizes differ");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw Error(ErrorCode::kNonFinite, "gradient of parameter block '" + std::string(block) +
                                             "' is non-finite at index " + std::to_string(i));
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
  }
}

HeadGradient head_gradient(const AttributeHead& head, std::span<const FeatureVector> batch,
                           std::span<const AttributeLabels> labels) {
  const std::size_t rows = batch.size();
  const std::size_t k = head.vocab_size();
  const std::size_t d = head.in_dim();
  std::vector<double> scores;
  scores.reserve(rows * k);
  for (const auto& x : batch) {
    const auto s = predict(head, x);
    scores.insert(scores.end(), s.begin(), s.end());
  }
  const auto loss = batch_rank_loss(scores, rows, labels);

  HeadGradient out;
  out.mean_loss = loss.mean_loss;
  out.sample_losses = loss.losses;
  out.weights.assign(k * d, 0.0);
  out.bias.assign(k, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto xs = batch[r].values();
    for (std::size_t i = 0; i < k; ++i) {
      const double g = loss.grad[r * k + i];
      if (g == 0.0) continue;
      out.bias[i] += g;
      double* row = out.weights.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) row[j] += g * xs[j];
    }
  }
  return out;
}

AttributeHead init_head(std::size_t in_dim, std::size_t vocab_size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  std::vector<double> w(in_dim * vocab_size);
  for (auto& x : w) x = uniform(rng);
  return AttributeHead(in_dim, vocab_size, std::move(w), std::vector<double>(vocab_size, 0.0));
}

TrainResult train_head(std::span<const FeatureVector> features,
                       std::span<const AttributeLabels> labels, const TrainConfig& cfg) {
  cfg.validate();
  if (features.empty()) throw Error(ErrorCode::kInvalidArgument, "training set is empty");

  std::unordered_map<std::string, std::size_t> label_of;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!label_of.emplace(labels[i].id(), i).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate label id '" + labels[i].id() + "'");
    }
  }
  std::vector<std::string> offending;
  std::vector<AttributeLabels> aligned;
  aligned.reserve(features.size());
  std::unordered_map<std::string, bool> seen;
  for (const auto& f : features) {
    if (!seen.emplace(f.id(), true).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate feature id '" + f.id() + "'");
    }
    auto it = label_of.find(f.id());
    if (it == label_of.end()) {
      offending.push_back(f.id());
    } else {
      aligned.push_back(labels[it->second]);
    }
  }
  for (const auto& l : labels) {
    if (!seen.contains(l.id())) offending.push_back(l.id());
  }
  if (!offending.empty()) {
    throw Error(ErrorCode::kMissingId,
                "features and labels are not aligned; unmatched ids: " + join_ids(offending));
  }

  const std::size_t d = features.front().dim();
  const std::size_t k = aligned.front().vocab_size();
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].dim() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "feature '" + features[i].id() +
                                                     "' has dimension " +
                                                     std::to_string(features[i].dim()) +
                                                     ", expected " + std::to_string(d));
    }
    if (aligned[i].vocab_size() != k) {
      throw Error(ErrorCode::kDimensionMismatch, "labels '" + aligned[i].id() +
                                                     "' have vocabulary " +
                                                     std::to_string(aligned[i].vocab_size()) +
                                                     ", expected " + std::to_string(k));
    }
  }

  std::mt19937_64 rng(cfg.seed);
  TrainResult result{init_head(d, k, rng()), {}};
  AttributeHead& head = result.head;
  AdamState w_state = AdamState::zeros(k * d);
  AdamState b_state = AdamState::zeros(k);

  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<FeatureVector> batch;
  std::vector<AttributeLabels> batch_labels;
  // Indexed by dataset position and summed in that order, so the epoch loss
  // does not depend on the shuffle.
  std::vector<double> sample_loss(features.size());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      batch_labels.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(features[order[i]]);
        batch_labels.push_back(aligned[order[i]]);
      }
      const auto grad = head_gradient(head, batch, batch_labels);
      for (std::size_t i = start; i < end; ++i) sample_loss[order[i]] = grad.sample_losses[i - start];
      adam_step(head.mutable_weights(), grad.weights, w_state, cfg, "weights");
      adam_step(head.mutable_bias(), grad.bias, b_state, cfg, "bias");
    }
    double epoch_loss = 0.0;
    for (double l : sample_loss) epoch_loss += l;
    result.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return result;
}

}  // namespace fgir
