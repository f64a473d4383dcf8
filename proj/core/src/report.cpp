#include "fgir/report.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "fgir/error.hpp"

namespace fgir {

namespace fs = std::filesystem;

std::string format_real(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  std::string s(buf.data(), ec == std::errc() ? ptr : buf.data());
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void write_query_csv(std::ostream& out, const RetrievalResult& result) {
  out << kQueryCsvHeader << '\n';
  for (std::size_t i = 0; i < result.hits.size(); ++i) {
    out << (i + 1) << ',' << result.hits[i].gallery_id << ',' << format_real(result.hits[i].score)
        << '\n';
  }
}

RetrievalResult read_query_csv(const fs::path& path, std::string query_id) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "'" + path.string() + "': cannot open query CSV");
  const auto where = [&](std::size_t line) { return path.string() + ":" + std::to_string(line) + ": "; };
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kBadFormat, where(1) + "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kQueryCsvHeader) {
    throw Error(ErrorCode::kBadFormat, where(1) + "header must be '" + std::string(kQueryCsvHeader) + "'");
  }
  RetrievalResult result{std::move(query_id), Metric::kEuclidean, {}};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw Error(ErrorCode::kBadFormat, where(line_no) + "expected rank,gallery_id,score");
    }
    const std::string rank_text = line.substr(0, c1);
    const std::string id = line.substr(c1 + 1, c2 - c1 - 1);
    const std::string score_text = line.substr(c2 + 1);
    std::size_t rank = 0;
    double score = 0.0;
    auto r1 = std::from_chars(rank_text.data(), rank_text.data() + rank_text.size(), rank);
    auto r2 = std::from_chars(score_text.data(), score_text.data() + score_text.size(), score);
    if (r1.ec != std::errc() || r1.ptr != rank_text.data() + rank_text.size() || r2.ec != std::errc() ||
        r2.ptr != score_text.data() + score_text.size() || id.empty()) {
      throw Error(ErrorCode::kBadFormat, where(line_no) + "malformed row");
    }
    if (rank != result.hits.size() + 1) {
      throw Error(ErrorCode::kBadFormat, where(line_no) + "ranks must be consecutive from 1");
    }
    result.hits.push_back({id, score});
  }
  return result;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << kReportCsvHeader << '\n';
  for (const auto& row : report.rows) {
    out << row.k << ",fine_map," << format_real(row.fine_map) << '\n';
    if (row.coarse_map) out << row.k << ",coarse_map," << format_real(*row.coarse_map) << '\n';
    out << row.k << ",attribute_iou," << format_real(row.attribute_iou) << '\n';
    out << row.k << ",accuracy," << format_real(row.accuracy) << '\n';
  }
}

std::string format_report_table(const EvalReport& report) {
  const bool coarse = !report.rows.empty() && report.rows.front().coarse_map.has_value();
  std::ostringstream out;
  out << "feature: " << report.feature << "   metric: " << report.metric
      << "   queries: " << report.query_count << "\n\n";

  auto section = [&](const std::string& title, auto value_of) {
    out << std::left << std::setw(34) << title;
    for (const auto& row : report.rows) out << std::right << std::setw(8) << ("top-" + std::to_string(row.k));
    out << '\n';
    out << std::left << std::setw(34) << "";
    for (const auto& row : report.rows) {
      out << std::right << std::setw(8) << std::fixed << std::setprecision(2) << value_of(row);
    }
    out << "\n\n";
  };
  section("Fine-level Similarity (mAP)", [](const EvalRow& r) { return r.fine_map; });
  if (coarse) section("Coarse-level Similarity (mAP)", [](const EvalRow& r) { return *r.coarse_map; });
  section("Attribute Similarity (IoU)", [](const EvalRow& r) { return r.attribute_iou; });
  section("Retrieval accuracy (>=1 match)", [](const EvalRow& r) { return r.accuracy; });
  return out.str();
}

namespace {

std::string escape_html(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::optional<fs::path> find_image(const fs::path& dir, const std::string& id) {
  for (const char* ext : {".jpg", ".jpeg", ".png"}) {
    fs::path candidate = dir / (id + ext);
    if (fs::exists(candidate)) return candidate;
  }
  return std::nullopt;
}

}  // namespace

std::string render_html_gallery(const RetrievalResult& result,
                                const std::optional<fs::path>& image_dir) {
  std::ostringstream html;
  const std::string qid = escape_html(result.query_id);
  html << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
       << "<title>Retrieval results for " << qid << "</title>\n"
       << "<style>\n"
       << "body{font-family:sans-serif;margin:2em}\n"
       << ".hits{display:flex;flex-wrap:wrap;gap:1em}\n"
       << ".hit{width:160px;border:1px solid #ccc;padding:.5em;text-align:center}\n"
       << ".hit img{max-width:150px;max-height:200px}\n"
       << ".ph{width:150px;height:150px;background:#eee;display:flex;align-items:center;justify-content:center}\n"
       << "</style>\n</head>\n<body>\n"
       << "<h1>Query " << qid << "</h1>\n";
  if (image_dir) {
    if (auto img = find_image(*image_dir, result.query_id)) {
      html << "<p><img src=\"" << escape_html(img->generic_string()) << "\" alt=\"" << qid
           << "\" style=\"max-height:240px\"></p>\n";
    }
  }
  html << "<div class=\"hits\">\n";
  for (std::size_t i = 0; i < result.hits.size(); ++i) {
    const auto& hit = result.hits[i];
    const std::string gid = escape_html(hit.gallery_id);
    html << "<div class=\"hit\"><div>#" << (i + 1) << "</div>";
    std::optional<fs::path> img;
    if (image_dir) img = find_image(*image_dir, hit.gallery_id);
    if (img) {
      html << "<img src=\"" << escape_html(img->generic_string()) << "\" alt=\"" << gid << "\">";
    } else {
      html << "<div class=\"ph\">" << gid << "</div>";
    }
    html << "<div>" << gid << "</div><div>" << escape_html(format_real(hit.score))
         << "</div></div>\n";
  }
  html << "</div>\n</body>\n</html>\n";
  return html.str();
}

}  // namespace fgir
