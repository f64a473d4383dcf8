#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fgir/feature.hpp"

namespace fgir {

/// Affine attribute scorer f(x) = W x + b mapping d-dim features to K scores.
class AttributeHead {
 public:
  /// Zero weights and bias.
  AttributeHead(std::size_t in_dim, std::size_t vocab_size);
  /// `weights` is row-major K x d.
  AttributeHead(std::size_t in_dim, std::size_t vocab_size, std::vector<double> weights,
                std::vector<double> bias);

  std::size_t in_dim() const noexcept { return in_dim_; }
  std::size_t vocab_size() const noexcept { return vocab_size_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> bias() const noexcept { return bias_; }
  std::span<double> mutable_weights() noexcept { return weights_; }
  std::span<double> mutable_bias() noexcept { return bias_; }

  friend bool operator==(const AttributeHead&, const AttributeHead&) = default;

 private:
  std::size_t in_dim_;
  std::size_t vocab_size_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

struct TrainConfig {
  std::size_t epochs = 14;
  std::size_t batch_size = 16;
  double learning_rate = 1e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  bool shuffle = true;

  /// Throws kInvalidArgument on out-of-range fields.
  void validate() const;
};

/// Adam moments for one parameter block.
struct AdamState {
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  static AdamState zeros(std::size_t n) { return {0, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)}; }
};

std::vector<double> predict(const AttributeHead& head, const FeatureVector& x);

/**
 * One bias-corrected Adam update of `params` in place. `block` names the
 * parameter block in error messages (a NaN gradient is rejected before any
 * state is touched).
 */
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const TrainConfig& cfg, std::string_view block = "params");

/// Gradient of the batch ranking loss with respect to head parameters.
struct HeadGradient {
  double mean_loss = 0.0;
  std::vector<double> weights;  // K x d
  std::vector<double> bias;     // K
  std::vector<double> sample_losses;
};

HeadGradient head_gradient(const AttributeHead& head, std::span<const FeatureVector> batch,
                           std::span<const AttributeLabels> labels);

/// Uniform in [-1/sqrt(d), 1/sqrt(d)] weights and zero bias, drawn from `seed`.
AttributeHead init_head(std::size_t in_dim, std::size_t vocab_size, std::uint64_t seed);

struct TrainResult {
  AttributeHead head;
  /// Mean training loss per epoch; each sample's loss is taken before the update of its batch.
  std::vector<double> loss_history;
};

/**
 * Trains a head with mini-batch Adam. Labels are matched to features by id;
 * feature order defines the dataset order before shuffling.
 */
TrainResult train_head(std::span<const FeatureVector> features,
                       std::span<const AttributeLabels> labels, const TrainConfig& cfg);

}  // namespace fgir
