#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgir/feature.hpp"

/**
 * @file container.hpp
 *
 * @brief Tensor container: a directory with `meta.json`, one raw
 * little-endian f32 file per tensor and an optional `ids.txt`.
 *
 *     meta.json   {"magic": "fgir.tensor", "format_version": 1, "dtype": "f32",
 *                  "byte_order": "little", "ids": "ids.txt" | null,
 *                  "tensors": [{"name": ..., "file": ..., "shape": [...]}],
 *                  "metadata": {...}}
 *     <name>.f32  prod(shape) * 4 bytes, row-major
 *     ids.txt     one UTF-8 id per line, aligned with the leading axis of the first tensor
 */

namespace fgir {

inline constexpr std::string_view kContainerMagic = "fgir.tensor";
inline constexpr int kContainerVersion = 1;

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> data;

  std::size_t element_count() const noexcept;
};

struct TensorContainer {
  std::vector<Tensor> tensors;
  std::optional<std::vector<std::string>> ids;
  nlohmann::json metadata = nlohmann::json::object();

  /// Throws kMissingId if absent.
  const Tensor& tensor(std::string_view name) const;
  bool has_tensor(std::string_view name) const noexcept;
};

/// Creates `dir` if needed and overwrites any previous container files in it.
void save_container(const std::filesystem::path& dir, const TensorContainer& container);
TensorContainer load_container(const std::filesystem::path& dir);

using FeatureSet = std::variant<std::vector<FeatureVector>, std::vector<SpatialFeatureMap>>;

/// 2-axis (n, d) tensors load as vectors, 4-axis (n, h, w, c) as spatial maps.
FeatureSet load_features(const std::filesystem::path& dir);
std::vector<FeatureVector> load_vectors(const std::filesystem::path& dir);
std::vector<SpatialFeatureMap> load_maps(const std::filesystem::path& dir);

void save_vectors(const std::filesystem::path& dir, std::span<const FeatureVector> vectors,
                  const nlohmann::json& metadata = nlohmann::json::object(),
                  std::string_view tensor_name = "features");
void save_maps(const std::filesystem::path& dir, std::span<const SpatialFeatureMap> maps,
               const nlohmann::json& metadata = nlohmann::json::object());

}  // namespace fgir
