#include "fgir/bilinear.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fgir/error.hpp"

namespace fgir {

namespace {

using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::size_t kChunkRows = 4096;

// W <- (W W^T)^{-1/2} W
Matrix symmetric_decorrelation(const Matrix& w) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(w * w.transpose());
  const Eigen::VectorXd inv_sqrt = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose() * w;
}

// Copies sample rows [begin, end) of `picked` into a dense chunk.
RowMatrix gather(std::span<const float> samples, std::size_t channels,
                 std::span<const std::size_t> picked) {
  RowMatrix chunk(static_cast<Eigen::Index>(picked.size()), static_cast<Eigen::Index>(channels));
  for (std::size_t r = 0; r < picked.size(); ++r) {
    const float* src = samples.data() + picked[r] * channels;
    for (std::size_t j = 0; j < channels; ++j) chunk(r, j) = src[j];
  }
  return chunk;
}

}  // namespace

ProjectionBasis::ProjectionBasis(std::size_t channels, std::size_t dims, std::vector<double> mean,
                                 std::vector<double> matrix, FitMeta meta)
    : channels_(channels), dims_(dims), mean_(std::move(mean)), matrix_(std::move(matrix)),
      meta_(meta) {
  if (channels_ == 0 || dims_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "projection basis needs positive c and p");
  }
  if (dims_ > channels_) {
    throw Error(ErrorCode::kInvalidArgument, "projection dims p = " + std::to_string(dims_) +
                                                 " exceed channels c = " + std::to_string(channels_));
  }
  if (mean_.size() != channels_ || matrix_.size() != channels_ * dims_) {
    throw Error(ErrorCode::kShapeMismatch, "projection basis tensors do not match c = " +
                                               std::to_string(channels_) +
                                               ", p = " + std::to_string(dims_));
  }
  require_finite(mean_, "projection mean");
  require_finite(matrix_, "projection matrix");
}

void ProjectionBasis::project(std::span<const float> x, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < channels_; ++i) {
    const double centered = static_cast<double>(x[i]) - mean_[i];
    const double* row = matrix_.data() + i * dims_;
    for (std::size_t j = 0; j < dims_; ++j) out[j] += row[j] * centered;
  }
}

ProjectionBasis fit_projection(std::span<const float> samples, std::size_t channels,
                               std::size_t p, const IcaConfig& cfg) {
  if (channels == 0 || p == 0) {
    throw Error(ErrorCode::kInvalidArgument, "fit_projection needs positive c and p");
  }
  if (channels < p) {
    throw Error(ErrorCode::kInvalidArgument, "cannot project " + std::to_string(channels) +
                                                 " channels onto " + std::to_string(p) + " dims");
  }
  if (samples.size() % channels != 0) {
    throw Error(ErrorCode::kShapeMismatch, "sample buffer is not a multiple of c");
  }
  const std::size_t total = samples.size() / channels;
  if (total < p) {
    throw Error(ErrorCode::kInvalidArgument, "only " + std::to_string(total) +
                                                 " samples available for a " + std::to_string(p) +
                                                 "-dim projection");
  }
  require_finite(samples, "projection fitting samples");

  std::vector<std::size_t> picked(total);
  std::iota(picked.begin(), picked.end(), std::size_t{0});
  if (cfg.sample_cap > 0 && total > cfg.sample_cap) {
    std::vector<std::size_t> sub;
    sub.reserve(cfg.sample_cap);
    std::mt19937_64 rng(cfg.seed);
    std::sample(picked.begin(), picked.end(), std::back_inserter(sub), cfg.sample_cap, rng);
    picked = std::move(sub);
  }
  const std::size_t n = picked.size();
  const auto c = static_cast<Eigen::Index>(channels);
  const auto span_of = [&](std::size_t begin) {
    return std::span<const std::size_t>(picked).subspan(begin, std::min(kChunkRows, n - begin));
  };

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(c);
  for (std::size_t b = 0; b < n; b += kChunkRows) {
    mean += gather(samples, channels, span_of(b)).colwise().sum().transpose();
  }
  mean /= static_cast<double>(n);

  Matrix cov = Matrix::Zero(c, c);
  for (std::size_t b = 0; b < n; b += kChunkRows) {
    RowMatrix chunk = gather(samples, channels, span_of(b));
    chunk.rowwise() -= mean.transpose();
    cov.selfadjointView<Eigen::Lower>().rankUpdate(chunk.transpose());
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::kNonFinite, "covariance eigendecomposition failed");
  }
  const auto pi = static_cast<Eigen::Index>(p);
  const double top = eig.eigenvalues()(c - 1);
  Matrix whitening(c, pi);  // c x p, column i = v_i / sqrt(lambda_i), descending lambda
  for (Eigen::Index i = 0; i < pi; ++i) {
    const double lambda = eig.eigenvalues()(c - 1 - i);
    if (!(lambda > 1e-12 * std::max(top, 1e-300))) {
      throw Error(ErrorCode::kInvalidArgument,
                  "fitting samples span fewer than " + std::to_string(p) + " dimensions");
    }
    whitening.col(i) = eig.eigenvectors().col(c - 1 - i) / std::sqrt(lambda);
  }

  // Whitened samples, n x p.
  Matrix z(static_cast<Eigen::Index>(n), pi);
  for (std::size_t b = 0; b < n; b += kChunkRows) {
    const auto rows = span_of(b);
    RowMatrix chunk = gather(samples, channels, rows);
    chunk.rowwise() -= mean.transpose();
    z.middleRows(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(rows.size())) =
        chunk * whitening;
  }

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  Matrix w(pi, pi);
  for (Eigen::Index i = 0; i < pi; ++i)
    for (Eigen::Index j = 0; j < pi; ++j) w(i, j) = normal(rng);
  w = symmetric_decorrelation(w);

  FitMeta meta;
  meta.seed = cfg.seed;
  meta.samples = n;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    const Matrix wx = z * w.transpose();  // n x p
    const Matrix g = wx.array().tanh().matrix();
    const Eigen::VectorXd g_prime_mean = (1.0 - g.array().square()).colwise().sum().transpose() * inv_n;
    Matrix next = (g.transpose() * z) * inv_n - g_prime_mean.asDiagonal() * w;
    next = symmetric_decorrelation(next);
    const double lim =
        ((next.cwiseProduct(w)).rowwise().sum().cwiseAbs().array() - 1.0).abs().maxCoeff();
    w = next;
    meta.iterations = it;
    if (!std::isfinite(lim)) break;
    if (lim < cfg.tol) {
      meta.converged = true;
      break;
    }
  }

  const Matrix composed = meta.converged ? Matrix(whitening * w.transpose()) : whitening;
  std::vector<double> matrix(channels * p);
  for (Eigen::Index i = 0; i < c; ++i)
    for (Eigen::Index j = 0; j < pi; ++j) matrix[i * pi + j] = composed(i, j);
  return ProjectionBasis(channels, p, std::vector<double>(mean.data(), mean.data() + c),
                         std::move(matrix), meta);
}

ProjectionBasis fit_projection(std::span<const SpatialFeatureMap> maps, std::size_t p,
                               const IcaConfig& cfg) {
  if (maps.empty()) throw Error(ErrorCode::kInvalidArgument, "no feature maps to fit");
  const std::size_t channels = maps.front().channels();
  std::size_t total = 0;
  for (const auto& m : maps) {
    if (m.channels() != channels) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "feature map '" + m.id() + "' has " + std::to_string(m.channels()) +
                      " channels, expected " + std::to_string(channels));
    }
    total += m.values().size();
  }
  std::vector<float> samples;
  samples.reserve(total);
  for (const auto& m : maps) samples.insert(samples.end(), m.values().begin(), m.values().end());
  return fit_projection(samples, channels, p, cfg);
}

namespace {

void check_channels(const SpatialFeatureMap& map, const ProjectionBasis& basis) {
  if (map.channels() != basis.channels()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature map '" + map.id() + "' has " + std::to_string(map.channels()) +
                    " channels, basis expects " + std::to_string(basis.channels()));
  }
}

}  // namespace

SpatialFeatureMap project_map(const SpatialFeatureMap& map, const ProjectionBasis& basis) {
  check_channels(map, basis);
  const std::size_t p = basis.dims();
  std::vector<float> out(map.locations() * p);
  std::vector<double> beta(p);
  for (std::size_t loc = 0; loc < map.locations(); ++loc) {
    basis.project(map.location(loc), beta);
    for (std::size_t j = 0; j < p; ++j) out[loc * p + j] = static_cast<float>(beta[j]);
  }
  return SpatialFeatureMap(map.id(), map.height(), map.width(), p, std::move(out));
}

BilinearDescriptor bilinear_pool(const SpatialFeatureMap& map, const ProjectionBasis& basis) {
  check_channels(map, basis);
  const std::size_t c = map.channels();
  const std::size_t p = basis.dims();
  std::vector<double> acc(c * p, 0.0);
  std::vector<double> beta(p);
  for (std::size_t loc = 0; loc < map.locations(); ++loc) {
    const auto alpha = map.location(loc);
    basis.project(alpha, beta);
    for (std::size_t i = 0; i < c; ++i) {
      const double a = alpha[i];
      if (a == 0.0) continue;
      double* row = acc.data() + i * p;
      for (std::size_t j = 0; j < p; ++j) row[j] += a * beta[j];
    }
  }
  return BilinearDescriptor(map.id(), std::vector<float>(acc.begin(), acc.end()));
}

}  // namespace fgir
