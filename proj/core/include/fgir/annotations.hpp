#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fgir/feature.hpp"

namespace fgir {

/**
 * Parsed annotation file plus its vocabulary.
 *
 *     id,instance_id,coarse_id,attrs
 *     id1,dress_388,,4;7;12
 *
 * `attrs` holds semicolon-separated indices into vocab.txt (one name per
 * line, line number = index). coarse_id may be empty.
 */
class AnnotationSet {
 public:
  AnnotationSet() = default;
  AnnotationSet(std::vector<std::string> vocab, std::vector<ItemAnnotation> items);

  const std::vector<std::string>& vocab() const noexcept { return vocab_; }
  const std::vector<ItemAnnotation>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }

  /// nullptr when absent.
  const ItemAnnotation* find(std::string_view id) const;
  std::vector<AttributeLabels> labels() const;

 private:
  std::vector<std::string> vocab_;
  std::vector<ItemAnnotation> items_;
  std::unordered_map<std::string, std::size_t> position_;
};

inline constexpr std::string_view kAnnotationHeader = "id,instance_id,coarse_id,attrs";

std::vector<std::string> load_vocab(const std::filesystem::path& path);
AnnotationSet load_annotations(const std::filesystem::path& csv_path,
                               const std::filesystem::path& vocab_path);
/// `source` prefixes error messages ("<source>:<line>: ...").
AnnotationSet parse_annotations(std::istream& csv, std::vector<std::string> vocab,
                                const std::string& source = "<annotations>");

void write_annotations(std::ostream& csv, const AnnotationSet& set);
void save_annotations(const std::filesystem::path& csv_path,
                      const std::filesystem::path& vocab_path, const AnnotationSet& set);

}  // namespace fgir
