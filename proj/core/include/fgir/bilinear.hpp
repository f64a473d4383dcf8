#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fgir/feature.hpp"

namespace fgir {

struct IcaConfig {
  std::size_t max_iters = 200;
  double tol = 1e-4;
  /// Locations beyond this count are uniformly subsampled.
  std::size_t sample_cap = 100'000;
  std::uint64_t seed = 0;
};

struct FitMeta {
  std::size_t iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
};

/**
 * Centering vector plus a c x p projection (whitening composed with an ICA
 * rotation). A location vector x projects to matrix^T (x - mean).
 */
class ProjectionBasis {
 public:
  /// `matrix` is row-major c x p.
  ProjectionBasis(std::size_t channels, std::size_t dims, std::vector<double> mean,
                  std::vector<double> matrix, FitMeta meta = {});

  std::size_t channels() const noexcept { return channels_; }
  std::size_t dims() const noexcept { return dims_; }
  std::span<const double> mean() const noexcept { return mean_; }
  std::span<const double> matrix() const noexcept { return matrix_; }
  const FitMeta& fit_meta() const noexcept { return meta_; }

  /// Projects one c-vector into `out` (length p).
  void project(std::span<const float> x, std::span<double> out) const;

 private:
  std::size_t channels_;
  std::size_t dims_;
  std::vector<double> mean_;
  std::vector<double> matrix_;
  FitMeta meta_;
};

/**
 * Fits a p-dim ICA basis from every spatial location of `maps`: center,
 * PCA-whiten onto the top p components, then rotate with symmetric FastICA
 * (logcosh contrast). If FastICA does not reach `cfg.tol` within
 * `cfg.max_iters`, the whitening-only basis is returned with
 * `fit_meta().converged == false`.
 */
ProjectionBasis fit_projection(std::span<const SpatialFeatureMap> maps, std::size_t p,
                               const IcaConfig& cfg = {});

/// Same, from a row-major (samples x c) matrix of location vectors.
ProjectionBasis fit_projection(std::span<const float> samples, std::size_t channels,
                               std::size_t p, const IcaConfig& cfg = {});

/// Projects every location; result has the same h, w and p channels.
SpatialFeatureMap project_map(const SpatialFeatureMap& map, const ProjectionBasis& basis);

/// Pooled bilinear descriptor; an ordinary feature vector of length c * p.
using BilinearDescriptor = FeatureVector;

/**
 * Sum over locations of the outer product alpha ⊗ beta, where alpha is the
 * input location vector and beta its projection. Flattened row-major:
 * value[i * p + j] = sum_loc alpha[i] * beta[j]. Length c * p.
 */
BilinearDescriptor bilinear_pool(const SpatialFeatureMap& map, const ProjectionBasis& basis);

}  // namespace fgir
