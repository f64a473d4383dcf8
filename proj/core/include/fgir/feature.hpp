#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

/**
 * @file feature.hpp
 *
 * @brief Core value types shared by every stage: global descriptors,
 * spatial activation maps and multi-hot attribute sets.
 *
 * All types validate on construction and are immutable afterwards, so they
 * can be shared freely between threads.
 */

namespace fgir {

/// Dense global descriptor (fc-layer activations, pooled bilinear features, attribute scores).
class FeatureVector {
 public:
  /// Throws if `values` is empty or holds NaN/infinity.
  FeatureVector(std::string id, std::vector<float> values);

  const std::string& id() const noexcept { return id_; }
  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  float operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::string id_;
  std::vector<float> values_;
};

/**
 * h x w x c activation map in location-major layout: the c channels of
 * location (0,0) come first, then (0,1), row by row.
 */
class SpatialFeatureMap {
 public:
  SpatialFeatureMap(std::string id, std::size_t height, std::size_t width, std::size_t channels,
                    std::vector<float> values);

  const std::string& id() const noexcept { return id_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t locations() const noexcept { return height_ * width_; }
  std::span<const float> values() const noexcept { return values_; }

  /// Channel vector at flat location index `loc` (row * width + col).
  std::span<const float> location(std::size_t loc) const {
    return std::span<const float>(values_).subspan(loc * channels_, channels_);
  }

 private:
  std::string id_;
  std::size_t height_;
  std::size_t width_;
  std::size_t channels_;
  std::vector<float> values_;
};

/// Multi-hot positive attribute set over a vocabulary of `vocab_size` words.
class AttributeLabels {
 public:
  /// `positives` may arrive in any order; duplicates and indices >= vocab_size are rejected.
  AttributeLabels(std::string id, std::size_t vocab_size, std::vector<std::size_t> positives);

  const std::string& id() const noexcept { return id_; }
  std::size_t vocab_size() const noexcept { return vocab_size_; }
  /// Strictly increasing.
  std::span<const std::size_t> positives() const noexcept { return positives_; }
  bool contains(std::size_t attribute) const noexcept;

  /// Dense membership mask of length vocab_size.
  std::vector<bool> mask() const;

  friend bool operator==(const AttributeLabels&, const AttributeLabels&) = default;

 private:
  std::string id_;
  std::size_t vocab_size_;
  std::vector<std::size_t> positives_;
};

/// Ground truth carried by every item: instance identity, optional coarse group and attributes.
struct ItemAnnotation {
  AttributeLabels attributes;
  std::string instance_id;
  std::optional<std::string> coarse_id;

  const std::string& id() const noexcept { return attributes.id(); }
};

/// Unit-norm copy of `v`; inputs with norm below 1e-12 are returned unchanged.
FeatureVector l2_normalize(const FeatureVector& v);
std::vector<float> l2_normalize(std::span<const float> v);

double euclidean_distance(const FeatureVector& a, const FeatureVector& b);

/// Sum of element-wise minima. A similarity: larger means closer. Negative components are allowed.
double histogram_intersection(const FeatureVector& a, const FeatureVector& b);

namespace kernels {

// Unchecked span kernels used by the scan loops. Accumulate in double.
double squared_euclidean(std::span<const float> a, std::span<const float> b) noexcept;
double histogram_intersection(std::span<const float> a, std::span<const float> b) noexcept;
double dot(std::span<const float> a, std::span<const float> b) noexcept;

}  // namespace kernels

/// Throws a kNonFinite error naming `what` and the offending index if `values` has NaN/inf.
void require_finite(std::span<const float> values, const std::string& what);
void require_finite(std::span<const double> values, const std::string& what);

}  // namespace fgir
