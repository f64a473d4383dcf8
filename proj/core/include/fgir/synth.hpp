#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "fgir/annotations.hpp"
#include "fgir/container.hpp"

namespace fgir {

struct MapShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
};

struct SynthConfig {
  std::size_t n_instances = 200;
  std::size_t copies_per_instance = 2;
  std::size_t dim = 64;
  /// When set, spatial maps of this shape are generated instead of vectors.
  std::optional<MapShape> map_shape;
  std::size_t vocab_size = 32;
  std::size_t attrs_per_instance = 4;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
  /// Instances per coarse group (coarse_id); 0 leaves coarse_id empty.
  std::size_t instances_per_group = 10;
};

struct SynthDataset {
  FeatureSet features;
  AnnotationSet annotations;
};

/**
 * Desk-scale stand-in for exported backbone features.
 *
 * Each attribute has a Gaussian embedding; an instance draws a random
 * attribute subset and a prototype equal to the normalized sum of its
 * attribute embeddings plus a coarse-group offset and an instance-specific
 * Gaussian component. Copies are prototype + N(0, noise_sigma^2) noise.
 * Spatial maps use the same prototype per location, passed through ReLU.
 *
 * Ids: item `i{instance}_{copy}`, instance `inst{instance}`, coarse `g{group}`,
 * zero-padded so lexical order equals generation order.
 */
SynthDataset synth_generate(const SynthConfig& cfg);

}  // namespace fgir
