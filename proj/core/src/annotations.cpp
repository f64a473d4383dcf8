#include "fgir/annotations.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "fgir/error.hpp"

namespace fgir {

namespace fs = std::filesystem;

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

[[noreturn]] void line_error(ErrorCode code, const std::string& source, std::size_t line,
                             const std::string& msg) {
  throw Error(code, source + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

AnnotationSet::AnnotationSet(std::vector<std::string> vocab, std::vector<ItemAnnotation> items)
    : vocab_(std::move(vocab)), items_(std::move(items)) {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& a = items_[i];
    if (a.attributes.vocab_size() != vocab_.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "annotation '" + a.id() + "' uses a vocabulary of " +
                      std::to_string(a.attributes.vocab_size()) + ", expected " +
                      std::to_string(vocab_.size()));
    }
    if (!position_.emplace(a.id(), i).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate annotation id '" + a.id() + "'");
    }
  }
}

const ItemAnnotation* AnnotationSet::find(std::string_view id) const {
  auto it = position_.find(std::string(id));
  return it == position_.end() ? nullptr : &items_[it->second];
}

std::vector<AttributeLabels> AnnotationSet::labels() const {
  std::vector<AttributeLabels> out;
  out.reserve(items_.size());
  for (const auto& a : items_) out.push_back(a.attributes);
  return out;
}

std::vector<std::string> load_vocab(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "'" + path.string() + "': cannot open vocabulary");
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    vocab.push_back(line);
  }
  while (!vocab.empty() && vocab.back().empty()) vocab.pop_back();
  if (vocab.empty()) throw Error(ErrorCode::kBadFormat, "'" + path.string() + "': vocabulary is empty");
  return vocab;
}

AnnotationSet parse_annotations(std::istream& csv, std::vector<std::string> vocab,
                                const std::string& source) {
  if (vocab.empty()) throw Error(ErrorCode::kBadFormat, source + ": vocabulary is empty");
  const std::size_t k = vocab.size();
  std::string line;
  if (!std::getline(csv, line)) line_error(ErrorCode::kBadFormat, source, 1, "missing header");
  strip_cr(line);
  if (line != kAnnotationHeader) {
    line_error(ErrorCode::kBadFormat, source, 1,
               "header must be '" + std::string(kAnnotationHeader) + "'");
  }

  std::vector<ItemAnnotation> items;
  std::unordered_set<std::string> ids;
  std::size_t line_no = 1;
  while (std::getline(csv, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 4) {
      line_error(ErrorCode::kBadFormat, source, line_no,
                 "expected 4 fields, found " + std::to_string(fields.size()));
    }
    std::string id(fields[0]);
    if (id.empty()) line_error(ErrorCode::kBadFormat, source, line_no, "empty id");
    if (fields[1].empty()) line_error(ErrorCode::kBadFormat, source, line_no, "empty instance_id");
    if (!ids.insert(id).second) {
      line_error(ErrorCode::kDuplicateId, source, line_no, "duplicate id '" + id + "'");
    }

    std::vector<std::size_t> attrs;
    if (!fields[3].empty()) {
      std::unordered_set<std::size_t> seen;
      for (auto token : split(fields[3], ';')) {
        std::size_t value = 0;
        const auto* end = token.data() + token.size();
        const auto [ptr, ec] = std::from_chars(token.data(), end, value);
        if (token.empty() || ec != std::errc() || ptr != end) {
          line_error(ErrorCode::kBadFormat, source, line_no,
                     "attribute index '" + std::string(token) + "' is not a non-negative integer");
        }
        if (value >= k) {
          line_error(ErrorCode::kOutOfRange, source, line_no,
                     "attribute index " + std::to_string(value) + " outside vocabulary of size " +
                         std::to_string(k));
        }
        if (!seen.insert(value).second) {
          line_error(ErrorCode::kDuplicateId, source, line_no,
                     "attribute index " + std::to_string(value) + " repeated");
        }
        attrs.push_back(value);
      }
    }
    std::optional<std::string> coarse;
    if (!fields[2].empty()) coarse = std::string(fields[2]);
    items.push_back(ItemAnnotation{AttributeLabels(id, k, std::move(attrs)), std::string(fields[1]),
                                   std::move(coarse)});
  }
  return AnnotationSet(std::move(vocab), std::move(items));
}

AnnotationSet load_annotations(const fs::path& csv_path, const fs::path& vocab_path) {
  auto vocab = load_vocab(vocab_path);
  std::ifstream in(csv_path);
  if (!in) throw Error(ErrorCode::kIo, "'" + csv_path.string() + "': cannot open annotations");
  return parse_annotations(in, std::move(vocab), csv_path.string());
}

void write_annotations(std::ostream& csv, const AnnotationSet& set) {
  csv << kAnnotationHeader << '\n';
  for (const auto& a : set.items()) {
    csv << a.id() << ',' << a.instance_id << ',' << a.coarse_id.value_or("") << ',';
    bool first = true;
    for (auto p : a.attributes.positives()) {
      if (!first) csv << ';';
      csv << p;
      first = false;
    }
    csv << '\n';
  }
}

void save_annotations(const fs::path& csv_path, const fs::path& vocab_path,
                      const AnnotationSet& set) {
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw Error(ErrorCode::kIo, "'" + csv_path.string() + "': cannot create file");
  write_annotations(csv, set);
  std::ofstream vocab(vocab_path, std::ios::trunc);
  if (!vocab) throw Error(ErrorCode::kIo, "'" + vocab_path.string() + "': cannot create file");
  for (const auto& name : set.vocab()) vocab << name << '\n';
}

}  // namespace fgir
