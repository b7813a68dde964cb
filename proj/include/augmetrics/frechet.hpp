#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "augmetrics/error.hpp"

namespace augmetrics {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// n feature vectors of dimension d, one per row.
class FeatureSet {
 public:
  FeatureSet(std::size_t n, std::size_t d, std::vector<double> data) : n_(n), d_(d), data_(std::move(data)) {
    require(d_ >= 1, ErrorCode::InvalidArgument, "feature dimension must be at least 1");
    require(data_.size() == n_ * d_, ErrorCode::InvalidArgument, "feature data size does not match n*d");
    for (double v : data_) require(std::isfinite(v), ErrorCode::InvalidArgument, "feature values must be finite");
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }
  double at(std::size_t row, std::size_t col) const { return data_[row * d_ + col]; }
  const std::vector<double>& data() const noexcept { return data_; }

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> matrix() const {
    return {data_.data(), static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(d_)};
  }

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<double> data_;
};

struct GaussianMoments {
  Vector mean;
  Matrix cov;
};

/// Column means and unbiased (n-1) sample covariance. Accumulation order is
/// fixed, so results are reproducible bit for bit.
inline GaussianMoments gaussian_moments(const FeatureSet& f) {
  require(f.n() >= 2, ErrorCode::TooFewSamples, "need at least 2 samples, got " + std::to_string(f.n()));
  const auto x = f.matrix();
  GaussianMoments m;
  m.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - m.mean.transpose();
  m.cov = (centered.transpose() * centered) / static_cast<double>(f.n() - 1);
  m.cov = (0.5 * (m.cov + m.cov.transpose())).eval();
  return m;
}

inline constexpr double kSymmetryTolerance = 1e-9;
inline constexpr double kEigenClampTolerance = 1e-8;

/**
 * Principal square root of a symmetric positive semidefinite matrix via
 * M = Q diag(l) Q^T  ->  Q diag(sqrt(l)) Q^T.
 *
 * Eigenvalues in [-1e-8 * scale, 0) are rounding noise and clamp to zero;
 * anything more negative means the input is genuinely indefinite and is
 * reported as NegativeEigenvalue. scale is the largest |eigenvalue|.
 * Positive eigenvalues under d * epsilon * scale are below the solver's
 * resolution and are zeroed too, since their square roots would be noise.
 */
inline Matrix sqrtm_psd(const Matrix& m) {
  require(m.rows() == m.cols(), ErrorCode::NotSymmetric, "matrix is not square");
  if (m.size() == 0) return m;
  const double magnitude = std::max(1.0, m.cwiseAbs().maxCoeff());
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTolerance * magnitude, ErrorCode::NotSymmetric,
          "matrix is not symmetric within tolerance");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  require(eig.info() == Eigen::Success, ErrorCode::NegativeEigenvalue, "eigendecomposition did not converge");
  Vector values = eig.eigenvalues();
  const double scale = values.cwiseAbs().maxCoeff();
  const double floor = static_cast<double>(values.size()) * std::numeric_limits<double>::epsilon() * scale;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0) {
      require(values[i] >= -kEigenClampTolerance * scale, ErrorCode::NegativeEigenvalue,
              "eigenvalue " + std::to_string(values[i]) + " is below tolerance");
      values[i] = 0.0;
    } else if (values[i] < floor) {
      values[i] = 0.0;
    }
  }
  const Matrix& q = eig.eigenvectors();
  Matrix root = q * values.cwiseSqrt().asDiagonal() * q.transpose();
  return 0.5 * (root + root.transpose());
}

/**
 * Squared Frechet distance between two Gaussians:
 *   |m_a - m_b|^2 + tr(C_a) + tr(C_b) - 2 tr((C_a C_b)^(1/2)).
 *
 * The cross term is evaluated as tr(sqrtm(C_a^(1/2) C_b C_a^(1/2))), which
 * has the same trace for PSD inputs but keeps every eigensolve symmetric.
 * Results below 1e-8 in magnitude are floating noise and returned as 0.
 */
inline double frechet_distance(const GaussianMoments& a, const GaussianMoments& b) {
  require(a.mean.size() == b.mean.size() && a.cov.rows() == b.cov.rows(), ErrorCode::DimensionMismatch,
          "moment dimensions differ: " + std::to_string(a.mean.size()) + " vs " + std::to_string(b.mean.size()));
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const Matrix root_a = sqrtm_psd(a.cov);
  Matrix product = root_a * b.cov * root_a;
  product = (0.5 * (product + product.transpose())).eval();
  const double cross = sqrtm_psd(product).trace();
  const double d2 = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * cross;
  if (std::abs(d2) < 1e-8) return 0.0;
  return std::max(d2, 0.0);
}

inline double fid(const FeatureSet& a, const FeatureSet& b) {
  require(a.d() == b.d(), ErrorCode::DimensionMismatch,
          "feature dimensions differ: " + std::to_string(a.d()) + " vs " + std::to_string(b.d()));
  return frechet_distance(gaussian_moments(a), gaussian_moments(b));
}

}  // namespace augmetrics
