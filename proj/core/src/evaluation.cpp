#include "fgir/evaluation.hpp"

#include <algorithm>

#include "fgir/error.hpp"
#include "fgir/parallel.hpp"

namespace fgir {

namespace {

void check_k(const RetrievalResult& result, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (result.hits.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "retrieval result for '" + result.query_id + "' has no hits");
  }
}

struct QueryScores {
  std::vector<double> fine;
  std::vector<double> coarse;
  std::vector<double> iou;
  std::vector<double> accuracy;
};

}  // namespace

double precision_at_k(const RetrievalResult& result, const Relevance& relevant, std::size_t k) {
  check_k(result, k);
  const std::size_t n = std::min(k, result.hits.size());
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (relevant(result.hits[i].gallery_id)) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(k);
}

int accuracy_at_k(const RetrievalResult& result, const Relevance& relevant, std::size_t k) {
  check_k(result, k);
  const std::size_t n = std::min(k, result.hits.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (relevant(result.hits[i].gallery_id)) return 1;
  }
  return 0;
}

double attribute_iou(const AttributeLabels& a, const AttributeLabels& b) {
  if (a.vocab_size() != b.vocab_size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "attribute vocabularies differ: " + std::to_string(a.vocab_size()) + " vs " +
                    std::to_string(b.vocab_size()));
  }
  const auto pa = a.positives();
  const auto pb = b.positives();
  if (pa.empty() && pb.empty()) return 1.0;
  std::size_t inter = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < pa.size() && j < pb.size()) {
    if (pa[i] == pb[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (pa[i] < pb[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = pa.size() + pb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

EvalReport evaluate(const GalleryIndex& index, std::span<const EvalQuery> queries,
                    const EvalOptions& options) {
  if (queries.empty()) throw Error(ErrorCode::kInvalidArgument, "no queries to evaluate");
  if (options.ks.empty()) throw Error(ErrorCode::kInvalidArgument, "k list is empty");
  std::vector<std::size_t> ks(options.ks.begin(), options.ks.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.front() < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  const std::size_t k_max = ks.back();

  const std::size_t vocab = index.annotation(0).attributes.vocab_size();
  bool with_coarse = true;
  for (std::size_t i = 0; i < index.size(); ++i) {
    with_coarse = with_coarse && index.annotation(i).coarse_id.has_value();
  }
  std::vector<std::string> bad;
  for (const auto& q : queries) {
    if (q.annotation.id() != q.feature.id() || q.annotation.attributes.vocab_size() != vocab) {
      bad.push_back(q.feature.id());
    }
    with_coarse = with_coarse && q.annotation.coarse_id.has_value();
  }
  if (!bad.empty()) {
    std::string list;
    for (std::size_t i = 0; i < bad.size() && i < 10; ++i) list += (i ? ", " : "") + bad[i];
    throw Error(ErrorCode::kMissingId, "queries with missing or mismatched labels: " + list);
  }

  const std::size_t nq = queries.size();
  const std::size_t nk = ks.size();
  // Per-query metrics laid out [query][k]; reduced below in query order.
  QueryScores scores;
  scores.fine.assign(nq * nk, 0.0);
  scores.coarse.assign(nq * nk, 0.0);
  scores.iou.assign(nq * nk, 0.0);
  scores.accuracy.assign(nq * nk, 0.0);

  parallel_chunks(nq, options.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t qi = begin; qi < end; ++qi) {
      const auto& q = queries[qi];
      const auto exclude = options.exclude_self
                               ? std::optional<std::string_view>(q.feature.id())
                               : std::nullopt;
      const auto result = query_topk(index, q.feature, k_max, exclude, 1);
      auto annotation_of = [&](std::string_view gid) -> const ItemAnnotation& {
        return index.annotation(*index.find(gid));
      };
      const Relevance fine = [&](std::string_view gid) {
        return annotation_of(gid).instance_id == q.annotation.instance_id;
      };
      const Relevance coarse = [&](std::string_view gid) {
        return with_coarse && annotation_of(gid).coarse_id == q.annotation.coarse_id;
      };
      for (std::size_t ki = 0; ki < nk; ++ki) {
        const std::size_t k = ks[ki];
        const std::size_t slot = qi * nk + ki;
        scores.fine[slot] = precision_at_k(result, fine, k);
        scores.accuracy[slot] = accuracy_at_k(result, fine, k);
        if (with_coarse) scores.coarse[slot] = precision_at_k(result, coarse, k);

        const std::size_t n = std::min(k, result.hits.size());
        double iou_sum = 0.0;
        std::size_t iou_count = 0;
        for (std::size_t h = 0; h < n; ++h) {
          const auto& gid = result.hits[h].gallery_id;
          if (options.iou_mode == IouMode::kRelevantHits && !fine(gid)) continue;
          iou_sum += attribute_iou(q.annotation.attributes, annotation_of(gid).attributes);
          ++iou_count;
        }
        scores.iou[slot] = iou_count ? iou_sum / static_cast<double>(iou_count) : 0.0;
      }
    }
  });

  EvalReport report;
  report.query_count = nq;
  report.metric = std::string(to_string(index.metric()));
  if (index.normalized()) report.metric = "l2+" + report.metric;
  report.feature = options.feature_name;
  const auto count = static_cast<double>(nq);
  for (std::size_t ki = 0; ki < nk; ++ki) {
    EvalRow row;
    row.k = ks[ki];
    double fine = 0.0, coarse = 0.0, iou = 0.0, acc = 0.0;
    for (std::size_t qi = 0; qi < nq; ++qi) {
      const std::size_t slot = qi * nk + ki;
      fine += scores.fine[slot];
      coarse += scores.coarse[slot];
      iou += scores.iou[slot];
      acc += scores.accuracy[slot];
    }
    row.fine_map = fine / count;
    if (with_coarse) row.coarse_map = coarse / count;
    row.attribute_iou = iou / count;
    row.accuracy = acc / count;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace fgir
