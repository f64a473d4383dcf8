#include "fgir/feature.hpp"

#include <algorithm>
#include <cmath>

#include "fgir/error.hpp"

namespace fgir {

namespace {

template <typename T>
void check_finite(std::span<const T> values, const std::string& what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::kNonFinite,
                  what + " has a non-finite value at index " + std::to_string(i));
    }
  }
}

void check_same_dim(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch,
                "vector dimensions differ: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

constexpr double kZeroNorm = 1e-12;

}  // namespace

void require_finite(std::span<const float> values, const std::string& what) {
  check_finite(values, what);
}

void require_finite(std::span<const double> values, const std::string& what) {
  check_finite(values, what);
}

FeatureVector::FeatureVector(std::string id, std::vector<float> values)
    : id_(std::move(id)), values_(std::move(values)) {
  if (values_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "feature vector '" + id_ + "' has dimension 0");
  }
  check_finite<float>(values_, "feature vector '" + id_ + "'");
}

SpatialFeatureMap::SpatialFeatureMap(std::string id, std::size_t height, std::size_t width,
                                     std::size_t channels, std::vector<float> values)
    : id_(std::move(id)), height_(height), width_(width), channels_(channels),
      values_(std::move(values)) {
  if (height_ == 0 || width_ == 0 || channels_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "feature map '" + id_ + "' has a zero extent");
  }
  if (values_.size() != height_ * width_ * channels_) {
    throw Error(ErrorCode::kShapeMismatch,
                "feature map '" + id_ + "' holds " + std::to_string(values_.size()) +
                    " values, expected " + std::to_string(height_ * width_ * channels_));
  }
  check_finite<float>(values_, "feature map '" + id_ + "'");
}

AttributeLabels::AttributeLabels(std::string id, std::size_t vocab_size,
                                 std::vector<std::size_t> positives)
    : id_(std::move(id)), vocab_size_(vocab_size), positives_(std::move(positives)) {
  if (vocab_size_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "labels '" + id_ + "' have an empty vocabulary");
  }
  std::sort(positives_.begin(), positives_.end());
  if (auto dup = std::adjacent_find(positives_.begin(), positives_.end());
      dup != positives_.end()) {
    throw Error(ErrorCode::kDuplicateId,
                "labels '" + id_ + "' repeat attribute " + std::to_string(*dup));
  }
  if (!positives_.empty() && positives_.back() >= vocab_size_) {
    throw Error(ErrorCode::kOutOfRange, "labels '" + id_ + "' use attribute " +
                                            std::to_string(positives_.back()) +
                                            " outside vocabulary of size " +
                                            std::to_string(vocab_size_));
  }
}

bool AttributeLabels::contains(std::size_t attribute) const noexcept {
  return std::binary_search(positives_.begin(), positives_.end(), attribute);
}

std::vector<bool> AttributeLabels::mask() const {
  std::vector<bool> out(vocab_size_, false);
  for (auto p : positives_) out[p] = true;
  return out;
}

std::vector<float> l2_normalize(std::span<const float> v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  const double norm = std::sqrt(sq);
  std::vector<float> out(v.begin(), v.end());
  if (norm < kZeroNorm) return out;
  for (auto& x : out) x = static_cast<float>(x / norm);
  return out;
}

FeatureVector l2_normalize(const FeatureVector& v) {
  return FeatureVector(v.id(), l2_normalize(v.values()));
}

double euclidean_distance(const FeatureVector& a, const FeatureVector& b) {
  check_same_dim(a.dim(), b.dim());
  return std::sqrt(kernels::squared_euclidean(a.values(), b.values()));
}

double histogram_intersection(const FeatureVector& a, const FeatureVector& b) {
  check_same_dim(a.dim(), b.dim());
  return kernels::histogram_intersection(a.values(), b.values());
}

namespace kernels {

double squared_euclidean(std::span<const float> a, std::span<const float> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

double histogram_intersection(std::span<const float> a, std::span<const float> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::min(a[i], b[i]);
  return acc;
}

double dot(std::span<const float> a, std::span<const float> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

}  // namespace kernels

}  // namespace fgir
