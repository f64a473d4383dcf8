#include "fgir/container.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "fgir/error.hpp"

namespace fgir {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kMetaFile = "meta.json";
constexpr std::string_view kIdsFile = "ids.txt";

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

[[noreturn]] void fail(ErrorCode code, const fs::path& where, const std::string& msg) {
  throw Error(code, quoted(where) + ": " + msg);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const fs::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, path, "cannot create file");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) fail(ErrorCode::kIo, path, "write failed");
}

std::uint32_t to_little(std::uint32_t bits) {
  if constexpr (std::endian::native == std::endian::little) {
    return bits;
  } else {
    return ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits >> 8) & 0xff00u) |
           (bits >> 24);
  }
}

std::vector<char> encode_f32(std::span<const float> values) {
  std::vector<char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(values[i]));
    std::memcpy(bytes.data() + i * 4, &bits, 4);
  }
  return bytes;
}

std::vector<float> decode_f32(const std::string& bytes, const fs::path& path) {
  std::vector<float> values(bytes.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + i * 4, 4);
    values[i] = std::bit_cast<float>(to_little(bits));
    if (!std::isfinite(values[i])) {
      fail(ErrorCode::kNonFinite, path,
           "non-finite value at byte offset " + std::to_string(i * 4));
    }
  }
  return values;
}

bool is_plain_file_name(const std::string& name) {
  return !name.empty() && name.find('/') == std::string::npos &&
         name.find('\\') == std::string::npos && name != "." && name != "..";
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::size_t Tensor::element_count() const noexcept {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

const Tensor& TensorContainer::tensor(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::kMissingId, "container has no tensor named '" + std::string(name) + "'");
}

bool TensorContainer::has_tensor(std::string_view name) const noexcept {
  for (const auto& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

void save_container(const fs::path& dir, const TensorContainer& container) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, dir, "cannot create directory: " + ec.message());

  json meta;
  meta["magic"] = kContainerMagic;
  meta["format_version"] = kContainerVersion;
  meta["dtype"] = "f32";
  meta["byte_order"] = "little";
  meta["metadata"] = container.metadata;
  meta["tensors"] = json::array();
  std::unordered_set<std::string> names;
  for (const auto& t : container.tensors) {
    if (!is_plain_file_name(t.name) || !names.insert(t.name).second) {
      throw Error(ErrorCode::kInvalidArgument, "invalid or duplicate tensor name '" + t.name + "'");
    }
    if (t.data.size() != t.element_count()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "tensor '" + t.name + "' holds " + std::to_string(t.data.size()) +
                      " values but its shape has " + std::to_string(t.element_count()));
    }
    const std::string file = t.name + ".f32";
    meta["tensors"].push_back({{"name", t.name}, {"file", file}, {"shape", t.shape}});
    const auto bytes = encode_f32(t.data);
    write_bytes(dir / file, bytes.data(), bytes.size());
  }
  if (container.ids) {
    if (!container.tensors.empty() && !container.tensors.front().shape.empty() &&
        container.ids->size() != container.tensors.front().shape.front()) {
      throw Error(ErrorCode::kShapeMismatch, "ids do not match the leading tensor dimension");
    }
    std::string text;
    for (const auto& id : *container.ids) {
      if (id.empty() || id.find('\n') != std::string::npos || id.find('\r') != std::string::npos) {
        throw Error(ErrorCode::kInvalidArgument, "ids must be non-empty single-line strings");
      }
      text += id;
      text += '\n';
    }
    write_bytes(dir / kIdsFile, text.data(), text.size());
    meta["ids"] = kIdsFile;
  } else {
    meta["ids"] = nullptr;
    fs::remove(dir / kIdsFile, ec);
  }
  const std::string text = meta.dump(2) + "\n";
  write_bytes(dir / kMetaFile, text.data(), text.size());
}

TensorContainer load_container(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::kIo, dir, "not a container directory");
  const fs::path meta_path = dir / kMetaFile;
  if (!fs::exists(meta_path)) fail(ErrorCode::kBadFormat, meta_path, "missing meta.json");

  json meta;
  try {
    meta = json::parse(read_text(meta_path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kBadFormat, meta_path,
         "invalid JSON at byte offset " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!meta.is_object() || meta.value("magic", json()) != kContainerMagic) {
    fail(ErrorCode::kBadFormat, meta_path, "missing or wrong magic (expected 'fgir.tensor')");
  }
  if (!meta.contains("format_version") || !meta["format_version"].is_number_integer() ||
      meta["format_version"].get<int>() != kContainerVersion) {
    fail(ErrorCode::kBadFormat, meta_path,
         "unsupported format_version (expected " + std::to_string(kContainerVersion) + ")");
  }
  if (meta.value("dtype", json()) != "f32") fail(ErrorCode::kBadFormat, meta_path, "dtype must be 'f32'");
  if (meta.contains("byte_order") && meta["byte_order"] != "little") {
    fail(ErrorCode::kBadFormat, meta_path, "byte_order must be 'little'");
  }
  if (!meta.contains("tensors") || !meta["tensors"].is_array()) {
    fail(ErrorCode::kBadFormat, meta_path, "'tensors' must be an array");
  }

  TensorContainer out;
  if (meta.contains("metadata") && meta["metadata"].is_object()) out.metadata = meta["metadata"];
  std::unordered_set<std::string> names;
  for (const auto& entry : meta["tensors"]) {
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string() ||
        !entry.contains("file") || !entry["file"].is_string() || !entry.contains("shape") ||
        !entry["shape"].is_array()) {
      fail(ErrorCode::kBadFormat, meta_path, "tensor entries need string name/file and array shape");
    }
    Tensor t;
    t.name = entry["name"].get<std::string>();
    const auto file = entry["file"].get<std::string>();
    if (!is_plain_file_name(file) || !names.insert(t.name).second) {
      fail(ErrorCode::kBadFormat, meta_path, "invalid or duplicate tensor '" + t.name + "'");
    }
    for (const auto& s : entry["shape"]) {
      if (!s.is_number_integer() || s.get<long long>() <= 0) {
        fail(ErrorCode::kShapeMismatch, meta_path,
             "tensor '" + t.name + "' has a non-positive or non-integer extent");
      }
      t.shape.push_back(s.get<std::size_t>());
    }
    if (t.shape.empty()) fail(ErrorCode::kShapeMismatch, meta_path, "tensor '" + t.name + "' has no axes");

    const fs::path data_path = dir / file;
    if (!fs::exists(data_path)) fail(ErrorCode::kIo, data_path, "tensor file is missing");
    const std::string bytes = read_text(data_path);
    const std::size_t expected = t.element_count() * 4;
    if (bytes.size() < expected) {
      fail(ErrorCode::kTruncated, data_path,
           "expected " + std::to_string(expected) + " bytes, found " + std::to_string(bytes.size()));
    }
    if (bytes.size() > expected) {
      fail(ErrorCode::kShapeMismatch, data_path,
           "declared shape needs " + std::to_string(expected) + " bytes, file has " +
               std::to_string(bytes.size()));
    }
    t.data = decode_f32(bytes, data_path);
    out.tensors.push_back(std::move(t));
  }

  if (meta.contains("ids") && meta["ids"].is_string()) {
    const auto ids_name = meta["ids"].get<std::string>();
    const fs::path ids_path = dir / ids_name;
    if (!is_plain_file_name(ids_name) || !fs::exists(ids_path)) {
      fail(ErrorCode::kMissingId, ids_path, "declared ids file is missing");
    }
    auto lines = split_lines(read_text(ids_path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) {
        fail(ErrorCode::kBadFormat, ids_path, "line " + std::to_string(i + 1) + ": empty id");
      }
    }
    if (!out.tensors.empty() && lines.size() != out.tensors.front().shape.front()) {
      fail(ErrorCode::kShapeMismatch, ids_path,
           std::to_string(lines.size()) + " ids for leading dimension " +
               std::to_string(out.tensors.front().shape.front()));
    }
    out.ids = std::move(lines);
  }
  return out;
}

namespace {

const Tensor& feature_tensor(const TensorContainer& c, const fs::path& dir) {
  if (c.has_tensor("features")) return c.tensor("features");
  if (c.tensors.size() == 1) return c.tensors.front();
  fail(ErrorCode::kBadFormat, dir, "container has no 'features' tensor");
}

const std::vector<std::string>& feature_ids(const TensorContainer& c, const fs::path& dir) {
  if (!c.ids) fail(ErrorCode::kMissingId, dir, "feature container has no ids.txt");
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < c.ids->size(); ++i) {
    if (!seen.insert((*c.ids)[i]).second) {
      fail(ErrorCode::kDuplicateId, dir / kIdsFile,
           "line " + std::to_string(i + 1) + ": duplicate id '" + (*c.ids)[i] + "'");
    }
  }
  return *c.ids;
}

}  // namespace

FeatureSet load_features(const fs::path& dir) {
  const auto c = load_container(dir);
  const Tensor& t = feature_tensor(c, dir);
  const auto& ids = feature_ids(c, dir);
  if (ids.size() != t.shape.front()) {
    fail(ErrorCode::kShapeMismatch, dir, "ids do not match the feature tensor's leading dimension");
  }
  const std::size_t n = t.shape.front();
  if (t.shape.size() == 2) {
    const std::size_t d = t.shape[1];
    std::vector<FeatureVector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.emplace_back(ids[i], std::vector<float>(t.data.begin() + static_cast<std::ptrdiff_t>(i * d),
                                                  t.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * d)));
    }
    return out;
  }
  if (t.shape.size() == 4) {
    const std::size_t h = t.shape[1], w = t.shape[2], ch = t.shape[3];
    const std::size_t per = h * w * ch;
    std::vector<SpatialFeatureMap> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.emplace_back(ids[i], h, w, ch,
                       std::vector<float>(t.data.begin() + static_cast<std::ptrdiff_t>(i * per),
                                          t.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * per)));
    }
    return out;
  }
  fail(ErrorCode::kShapeMismatch, dir,
       "feature tensor must have 2 axes (n, d) or 4 axes (n, h, w, c); found " +
           std::to_string(t.shape.size()));
}

std::vector<FeatureVector> load_vectors(const fs::path& dir) {
  auto set = load_features(dir);
  if (auto* v = std::get_if<std::vector<FeatureVector>>(&set)) return std::move(*v);
  fail(ErrorCode::kShapeMismatch, dir, "expected (n, d) vectors, found (n, h, w, c) maps");
}

std::vector<SpatialFeatureMap> load_maps(const fs::path& dir) {
  auto set = load_features(dir);
  if (auto* m = std::get_if<std::vector<SpatialFeatureMap>>(&set)) return std::move(*m);
  fail(ErrorCode::kShapeMismatch, dir, "expected (n, h, w, c) maps, found (n, d) vectors");
}

void save_vectors(const fs::path& dir, std::span<const FeatureVector> vectors,
                  const json& metadata, std::string_view tensor_name) {
  if (vectors.empty()) throw Error(ErrorCode::kInvalidArgument, "no vectors to save");
  const std::size_t d = vectors.front().dim();
  TensorContainer c;
  c.metadata = metadata;
  Tensor t{std::string(tensor_name), {vectors.size(), d}, {}};
  t.data.reserve(vectors.size() * d);
  std::vector<std::string> ids;
  ids.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (v.dim() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "vector '" + v.id() + "' has dimension " +
                                                     std::to_string(v.dim()) + ", expected " +
                                                     std::to_string(d));
    }
    t.data.insert(t.data.end(), v.values().begin(), v.values().end());
    ids.push_back(v.id());
  }
  c.tensors.push_back(std::move(t));
  c.ids = std::move(ids);
  save_container(dir, c);
}

void save_maps(const fs::path& dir, std::span<const SpatialFeatureMap> maps, const json& metadata) {
  if (maps.empty()) throw Error(ErrorCode::kInvalidArgument, "no maps to save");
  const auto& first = maps.front();
  TensorContainer c;
  c.metadata = metadata;
  Tensor t{"features", {maps.size(), first.height(), first.width(), first.channels()}, {}};
  std::vector<std::string> ids;
  for (const auto& m : maps) {
    if (m.height() != first.height() || m.width() != first.width() ||
        m.channels() != first.channels()) {
      throw Error(ErrorCode::kShapeMismatch, "map '" + m.id() + "' differs in shape from '" +
                                                 first.id() + "'");
    }
    t.data.insert(t.data.end(), m.values().begin(), m.values().end());
    ids.push_back(m.id());
  }
  c.tensors.push_back(std::move(t));
  c.ids = std::move(ids);
  save_container(dir, c);
}

}  // namespace fgir
