#pragma once

// ZCA whitening: W = E diag((lambda + eps)^(-1/2)) E' from the
// eigendecomposition of the training covariance. Fit on the training split
// only; the same transform is applied to train, test, and synthetic
// initialization so all feature spaces stay consistent.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "att/errors.hpp"
#include "att/matrix.hpp"

namespace att {

struct ZcaTransform {
  std::vector<double> mean;  // D
  Matrix whitening;          // D x D, symmetric
  double epsilon = 1e-6;
};

inline ZcaTransform zca_fit(const Matrix& train_features, double epsilon) {
  if (epsilon <= 0.0) throw ConfigError("zca_epsilon", "must be positive");
  if (train_features.rows < 2) throw DimensionError("zca_fit: need at least 2 rows");
  const std::size_t n = train_features.rows;
  const std::size_t d = train_features.cols;

  ZcaTransform t;
  t.epsilon = epsilon;
  t.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) t.mean[j] += train_features(i, j);
  }
  for (double& m : t.mean) m /= static_cast<double>(n);

  Eigen::MatrixXd centered(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      centered(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          train_features(i, j) - t.mean[j];
    }
  }
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n - 1);
  if (!cov.allFinite()) throw DimensionError("zca_fit: non-finite covariance");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw DimensionError("zca_fit: eigendecomposition failed");
  Eigen::VectorXd scale = eig.eigenvalues();
  for (Eigen::Index k = 0; k < scale.size(); ++k) {
    // Eigenvalues of a PSD covariance can come out slightly negative; the
    // epsilon floor keeps the scaling real and finite.
    const double lam = scale[k] > 0.0 ? scale[k] : 0.0;
    scale[k] = 1.0 / std::sqrt(lam + epsilon);
  }
  const Eigen::MatrixXd w =
      eig.eigenvectors() * scale.asDiagonal() * eig.eigenvectors().transpose();

  t.whitening = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      t.whitening(i, j) = w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return t;
}

inline Matrix zca_apply(const ZcaTransform& t, const Matrix& features) {
  const std::size_t d = t.mean.size();
  if (features.cols != d) throw DimensionError("zca_apply: feature width mismatch");
  Matrix out(features.rows, d);
  for (std::size_t i = 0; i < features.rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        acc += (features(i, k) - t.mean[k]) * t.whitening(k, j);
      }
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace att
