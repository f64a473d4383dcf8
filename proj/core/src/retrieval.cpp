#include "fgir/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "fgir/error.hpp"
#include "fgir/parallel.hpp"

namespace fgir {

std::string_view to_string(Metric metric) noexcept {
  return metric == Metric::kEuclidean ? "euclidean" : "histint";
}

Metric parse_metric(std::string_view name) {
  if (name == "euclidean") return Metric::kEuclidean;
  if (name == "histint" || name == "histogram_intersection") return Metric::kHistogramIntersection;
  throw Error(ErrorCode::kInvalidArgument, "unknown metric '" + std::string(name) + "'");
}

namespace {

void prepare_in_place(std::vector<float>& v, const IndexOptions& options) {
  if (options.normalize) v = l2_normalize(v);
  if (options.clamp_negative) {
    for (auto& x : v) x = std::max(x, 0.0f);
  }
}

double score_of(Metric metric, std::span<const float> q, std::span<const float> g) {
  return metric == Metric::kEuclidean ? std::sqrt(kernels::squared_euclidean(q, g))
                                      : kernels::histogram_intersection(q, g);
}

}  // namespace

bool ranks_before(const Hit& a, const Hit& b, Metric metric) noexcept {
  if (a.score != b.score) {
    return metric == Metric::kEuclidean ? a.score < b.score : a.score > b.score;
  }
  return a.gallery_id < b.gallery_id;
}

GalleryIndex::GalleryIndex(std::vector<FeatureVector> vectors,
                           std::vector<ItemAnnotation> annotations, IndexOptions options)
    : options_(options) {
  if (vectors.empty()) throw Error(ErrorCode::kInvalidArgument, "gallery is empty");
  if (annotations.size() != vectors.size()) {
    throw Error(ErrorCode::kShapeMismatch, "gallery has " + std::to_string(vectors.size()) +
                                               " vectors but " +
                                               std::to_string(annotations.size()) + " annotations");
  }
  dim_ = vectors.front().dim();
  ids_.reserve(vectors.size());
  data_.reserve(vectors.size() * dim_);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = vectors[i];
    if (v.dim() != dim_) {
      throw Error(ErrorCode::kDimensionMismatch, "gallery vector '" + v.id() + "' has dimension " +
                                                     std::to_string(v.dim()) + ", expected " +
                                                     std::to_string(dim_));
    }
    if (annotations[i].id() != v.id()) {
      throw Error(ErrorCode::kMissingId, "annotation '" + annotations[i].id() +
                                             "' is not aligned with vector '" + v.id() + "'");
    }
    if (!position_.emplace(v.id(), i).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate gallery id '" + v.id() + "'");
    }
    if (options_.normalize && !options_.clamp_negative) {
      const double norm = std::sqrt(kernels::dot(v.values(), v.values()));
      if (norm >= 1e-12 && std::abs(norm - 1.0) > 1e-5) {
        throw Error(ErrorCode::kInvalidArgument,
                    "stored vector '" + v.id() + "' is not unit norm in a normalized index");
      }
    }
    ids_.push_back(v.id());
    data_.insert(data_.end(), v.values().begin(), v.values().end());
  }
  annotations_ = std::move(annotations);
}

std::optional<std::size_t> GalleryIndex::find(std::string_view id) const {
  auto it = position_.find(std::string(id));
  if (it == position_.end()) return std::nullopt;
  return it->second;
}

std::vector<float> GalleryIndex::prepare_query(std::span<const float> q) const {
  std::vector<float> out(q.begin(), q.end());
  prepare_in_place(out, options_);
  return out;
}

GalleryIndex build_index(std::vector<FeatureVector> vectors,
                         std::span<const ItemAnnotation> annotations, IndexOptions options) {
  if (vectors.empty()) throw Error(ErrorCode::kInvalidArgument, "gallery is empty");
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    if (!by_id.emplace(annotations[i].id(), i).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate annotation id '" + annotations[i].id() + "'");
    }
  }
  std::vector<std::string> missing;
  std::vector<ItemAnnotation> aligned;
  std::vector<FeatureVector> prepared;
  aligned.reserve(vectors.size());
  prepared.reserve(vectors.size());
  for (auto& v : vectors) {
    auto it = by_id.find(v.id());
    if (it == by_id.end()) {
      missing.push_back(v.id());
      continue;
    }
    aligned.push_back(annotations[it->second]);
    std::vector<float> values(v.values().begin(), v.values().end());
    prepare_in_place(values, options);
    prepared.emplace_back(v.id(), std::move(values));
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) list += (i ? ", " : "") + missing[i];
    throw Error(ErrorCode::kMissingId, "no annotation for gallery ids: " + list);
  }
  return GalleryIndex(std::move(prepared), std::move(aligned), options);
}

GalleryIndex restore_index(std::vector<FeatureVector> stored,
                           std::vector<ItemAnnotation> annotations, IndexOptions options) {
  return GalleryIndex(std::move(stored), std::move(annotations), options);
}

RetrievalResult query_topk(const GalleryIndex& index, const FeatureVector& query, std::size_t k,
                           std::optional<std::string_view> exclude_id, unsigned threads) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (query.dim() != index.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "query '" + query.id() + "' has dimension " +
                                                   std::to_string(query.dim()) +
                                                   ", index has " + std::to_string(index.dim()));
  }
  const Metric metric = index.metric();
  const auto q = index.prepare_query(query.values());
  const auto excluded = exclude_id ? index.find(*exclude_id) : std::nullopt;

  auto better = [metric](const Hit& a, const Hit& b) { return ranks_before(a, b, metric); };
  const std::size_t chunks = chunk_count(index.size(), threads);
  std::vector<std::vector<Hit>> partial(chunks);

  parallel_chunks(index.size(), threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    // Max-heap on "worse": top() is the weakest of the current best-k.
    std::priority_queue<Hit, std::vector<Hit>, decltype(better)> heap(better);
    for (std::size_t i = begin; i < end; ++i) {
      if (excluded && *excluded == i) continue;
      Hit hit{index.id(i), score_of(metric, q, index.vector(i))};
      if (heap.size() < k) {
        heap.push(std::move(hit));
      } else if (better(hit, heap.top())) {
        heap.pop();
        heap.push(std::move(hit));
      }
    }
    auto& out = partial[chunk];
    out.reserve(heap.size());
    while (!heap.empty()) {
      out.push_back(heap.top());
      heap.pop();
    }
  });

  RetrievalResult result{query.id(), metric, {}};
  for (auto& p : partial) {
    result.hits.insert(result.hits.end(), std::make_move_iterator(p.begin()),
                       std::make_move_iterator(p.end()));
  }
  std::sort(result.hits.begin(), result.hits.end(), better);
  if (result.hits.size() > k) result.hits.resize(k);
  return result;
}

std::vector<RetrievalResult> query_batch(const GalleryIndex& index,
                                         std::span<const FeatureVector> queries, std::size_t k,
                                         bool exclude_self, unsigned threads) {
  std::vector<RetrievalResult> results(queries.size());
  parallel_chunks(queries.size(), threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto exclude =
          exclude_self ? std::optional<std::string_view>(queries[i].id()) : std::nullopt;
      results[i] = query_topk(index, queries[i], k, exclude, 1);
    }
  });
  return results;
}

}  // namespace fgir
