#include "fgir/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "fgir/error.hpp"

namespace fgir {

namespace {

std::string padded(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

std::size_t digits(std::size_t n) { return std::to_string(n > 0 ? n - 1 : 0).size(); }

constexpr double kGroupWeight = 0.5;
constexpr double kInstanceWeight = 0.25;

}  // namespace

SynthDataset synth_generate(const SynthConfig& cfg) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg); };
  if (cfg.n_instances == 0) fail("n_instances must be positive");
  if (cfg.copies_per_instance == 0) fail("copies_per_instance must be positive");
  if (cfg.vocab_size == 0) fail("vocabulary size must be positive");
  if (cfg.attrs_per_instance == 0 || cfg.attrs_per_instance > cfg.vocab_size) {
    fail("attrs_per_instance must lie in [1, K]");
  }
  if (!(cfg.noise_sigma >= 0.0) || !std::isfinite(cfg.noise_sigma)) fail("noise_sigma must be >= 0");
  const bool maps = cfg.map_shape.has_value();
  if (maps && (cfg.map_shape->height == 0 || cfg.map_shape->width == 0 ||
               cfg.map_shape->channels == 0)) {
    fail("map shape extents must be positive");
  }
  if (!maps && cfg.dim == 0) fail("dim must be positive");

  const std::size_t channels = maps ? cfg.map_shape->channels : cfg.dim;
  const std::size_t locations = maps ? cfg.map_shape->height * cfg.map_shape->width : 1;
  const std::size_t k = cfg.vocab_size;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;

  std::vector<double> embeddings(k * channels);
  for (auto& e : embeddings) e = normal(rng);
  const std::size_t groups =
      cfg.instances_per_group ? (cfg.n_instances + cfg.instances_per_group - 1) / cfg.instances_per_group : 0;
  std::vector<double> group_centers(groups * channels);
  for (auto& g : group_centers) g = normal(rng);

  std::vector<std::string> vocab(k);
  for (std::size_t a = 0; a < k; ++a) vocab[a] = "attr_" + padded(a, digits(k));

  const std::size_t inst_w = digits(cfg.n_instances);
  const std::size_t copy_w = digits(cfg.copies_per_instance);
  const std::size_t group_w = digits(groups);

  std::vector<std::size_t> all_attrs(k);
  std::iota(all_attrs.begin(), all_attrs.end(), std::size_t{0});
  const double attr_scale = 1.0 / std::sqrt(static_cast<double>(cfg.attrs_per_instance));

  std::vector<FeatureVector> vectors;
  std::vector<SpatialFeatureMap> map_list;
  std::vector<ItemAnnotation> items;
  std::vector<double> prototype(locations * channels);

  for (std::size_t inst = 0; inst < cfg.n_instances; ++inst) {
    std::vector<std::size_t> attrs;
    std::sample(all_attrs.begin(), all_attrs.end(), std::back_inserter(attrs),
                cfg.attrs_per_instance, rng);
    const std::size_t group = groups ? inst / cfg.instances_per_group : 0;

    for (std::size_t loc = 0; loc < locations; ++loc) {
      for (std::size_t j = 0; j < channels; ++j) {
        double v = kInstanceWeight * normal(rng);
        for (auto a : attrs) v += attr_scale * embeddings[a * channels + j];
        if (groups) v += kGroupWeight * group_centers[group * channels + j];
        prototype[loc * channels + j] = v;
      }
    }

    const std::string inst_id = "inst" + padded(inst, inst_w);
    std::optional<std::string> coarse;
    if (groups) coarse = "g" + padded(group, group_w);
    for (std::size_t copy = 0; copy < cfg.copies_per_instance; ++copy) {
      const std::string id = "i" + padded(inst, inst_w) + "_" + padded(copy, copy_w);
      std::vector<float> values(prototype.size());
      for (std::size_t i = 0; i < values.size(); ++i) {
        double v = prototype[i] + cfg.noise_sigma * normal(rng);
        if (maps) v = std::max(v, 0.0);
        values[i] = static_cast<float>(v);
      }
      if (maps) {
        map_list.emplace_back(id, cfg.map_shape->height, cfg.map_shape->width, channels,
                              std::move(values));
      } else {
        vectors.emplace_back(id, std::move(values));
      }
      items.push_back(ItemAnnotation{AttributeLabels(id, k, attrs), inst_id, coarse});
    }
  }

  SynthDataset out{maps ? FeatureSet(std::move(map_list)) : FeatureSet(std::move(vectors)),
                   AnnotationSet(std::move(vocab), std::move(items))};
  return out;
}

}  // namespace fgir
