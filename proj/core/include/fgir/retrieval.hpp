#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fgir/feature.hpp"

namespace fgir {

enum class Metric {
  kEuclidean,              ///< distance, smaller is better
  kHistogramIntersection,  ///< similarity, larger is better
};

std::string_view to_string(Metric metric) noexcept;
/// Accepts "euclidean" and "histint" / "histogram_intersection".
Metric parse_metric(std::string_view name);

struct IndexOptions {
  Metric metric = Metric::kEuclidean;
  bool normalize = true;
  /// Clamp negative components to zero after normalization (histogram-intersection variant).
  bool clamp_negative = false;
};

struct Hit {
  std::string gallery_id;
  double score = 0.0;

  friend bool operator==(const Hit&, const Hit&) = default;
};

struct RetrievalResult {
  std::string query_id;
  Metric metric = Metric::kEuclidean;
  /// Best first; ties broken by ascending gallery id.
  std::vector<Hit> hits;
};

/// Immutable brute-force gallery. Safe to query concurrently.
class GalleryIndex {
 public:
  GalleryIndex(std::vector<FeatureVector> vectors, std::vector<ItemAnnotation> annotations,
               IndexOptions options);

  Metric metric() const noexcept { return options_.metric; }
  bool normalized() const noexcept { return options_.normalize; }
  const IndexOptions& options() const noexcept { return options_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }

  const std::string& id(std::size_t i) const { return ids_[i]; }
  std::span<const float> vector(std::size_t i) const {
    return std::span<const float>(data_).subspan(i * dim_, dim_);
  }
  const ItemAnnotation& annotation(std::size_t i) const { return annotations_[i]; }
  std::optional<std::size_t> find(std::string_view id) const;

  /// Applies the index's normalize/clamp rule to a query vector.
  std::vector<float> prepare_query(std::span<const float> q) const;

 private:
  IndexOptions options_;
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> data_;  // size() x dim(), row-major
  std::vector<ItemAnnotation> annotations_;
  std::unordered_map<std::string, std::size_t> position_;
};

/**
 * Builds an index from vectors and annotations matched by id. Vectors keep
 * their input order.
 */
GalleryIndex build_index(std::vector<FeatureVector> vectors,
                         std::span<const ItemAnnotation> annotations, IndexOptions options);

/// Reconstructs an index from stored, already-prepared rows (no re-normalization).
GalleryIndex restore_index(std::vector<FeatureVector> stored,
                           std::vector<ItemAnnotation> annotations, IndexOptions options);

/// True when `a` ranks strictly before `b` under `metric`.
bool ranks_before(const Hit& a, const Hit& b, Metric metric) noexcept;

/**
 * Exact top-k scan. The gallery is split into `threads` contiguous chunks,
 * each keeping a bounded best-k heap, and the chunks are merged under the
 * same total order, so the output does not depend on the thread count.
 */
RetrievalResult query_topk(const GalleryIndex& index, const FeatureVector& query, std::size_t k,
                           std::optional<std::string_view> exclude_id = std::nullopt,
                           unsigned threads = 1);

/// Runs query_topk for every query; queries are distributed over `threads` workers.
std::vector<RetrievalResult> query_batch(const GalleryIndex& index,
                                         std::span<const FeatureVector> queries, std::size_t k,
                                         bool exclude_self, unsigned threads = 1);

}  // namespace fgir
