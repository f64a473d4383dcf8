#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fgir/evaluation.hpp"
#include "fgir/retrieval.hpp"

namespace fgir {

/// Shortest round-trip decimal form, always with a decimal point ("1.0", "0.6", "1e-07").
std::string format_real(double value);

inline constexpr std::string_view kQueryCsvHeader = "rank,gallery_id,score";
inline constexpr std::string_view kReportCsvHeader = "k,metric,value";

/// `rank,gallery_id,score` rows, rank starting at 1.
void write_query_csv(std::ostream& out, const RetrievalResult& result);
/// Inverse of write_query_csv; the query id is supplied by the caller.
RetrievalResult read_query_csv(const std::filesystem::path& path, std::string query_id);

/// `k,metric,value` rows; per k: fine_map, [coarse_map,] attribute_iou, accuracy.
void write_report_csv(std::ostream& out, const EvalReport& report);

/// Fixed-width table with one column per metric and k, grouped by metric then k.
std::string format_report_table(const EvalReport& report);

/**
 * Static ranked-gallery page for one query. When `image_dir` is given, each
 * hit shows `<image_dir>/<id>.{jpg,jpeg,png}` if such a file exists.
 */
std::string render_html_gallery(const RetrievalResult& result,
                                const std::optional<std::filesystem::path>& image_dir);

}  // namespace fgir
