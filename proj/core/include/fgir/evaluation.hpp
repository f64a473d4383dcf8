#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fgir/feature.hpp"
#include "fgir/retrieval.hpp"

namespace fgir {

/// Relevance oracle: gallery id -> is this hit a correct retrieval for the query.
using Relevance = std::function<bool(std::string_view gallery_id)>;

/**
 * Relevant hits among the first min(k, |hits|) divided by k. This is the
 * per-query quantity whose mean over queries the reports call "mAP":
 * 3 relevant in the top 5 gives 0.6.
 */
double precision_at_k(const RetrievalResult& result, const Relevance& relevant, std::size_t k);

/// 1 if any of the first k hits is relevant, else 0.
int accuracy_at_k(const RetrievalResult& result, const Relevance& relevant, std::size_t k);

/// |A ∩ B| / |A ∪ B|; 1.0 when both sets are empty.
double attribute_iou(const AttributeLabels& a, const AttributeLabels& b);

enum class IouMode {
  kAllHits,       ///< mean IoU over the first k hits
  kRelevantHits,  ///< mean IoU over the relevant hits among the first k (0 if none)
};

struct EvalQuery {
  FeatureVector feature;
  ItemAnnotation annotation;
};

struct EvalOptions {
  std::vector<std::size_t> ks{1, 5, 10};
  bool exclude_self = false;
  IouMode iou_mode = IouMode::kAllHits;
  unsigned threads = 1;
  std::string feature_name = "features";
};

struct EvalRow {
  std::size_t k = 0;
  double fine_map = 0.0;
  std::optional<double> coarse_map;
  double attribute_iou = 0.0;
  double accuracy = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;  ///< ascending k
  std::size_t query_count = 0;
  std::string metric;
  std::string feature;
};

/**
 * Retrieves top-max(ks) for every query and averages the per-query
 * metrics. Fine relevance is a shared instance id; the coarse column is
 * produced only when every query and gallery item has a coarse id.
 */
EvalReport evaluate(const GalleryIndex& index, std::span<const EvalQuery> queries,
                    const EvalOptions& options = {});

}  // namespace fgir
