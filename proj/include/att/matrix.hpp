#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "att/errors.hpp"

namespace att {

// Dense row-major matrix of doubles. Deliberately minimal: the library only
// needs element access, rows as spans, and equality.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  std::size_t size() const { return data.size(); }

  bool operator==(const Matrix&) const = default;
};

// Flat network parameter vector. Length is always tied to an Architecture;
// every operation taking one checks the length at its boundary.
struct ParamVector {
  std::vector<double> v;

  ParamVector() = default;
  explicit ParamVector(std::size_t n, double fill = 0.0) : v(n, fill) {}

  std::size_t size() const { return v.size(); }
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }

  bool operator==(const ParamVector&) const = default;
};

struct LabeledBatch {
  Matrix features;          // n x input_dim
  std::vector<int> labels;  // n, each in [0, num_classes)

  std::size_t size() const { return labels.size(); }

  bool operator==(const LabeledBatch&) const = default;
};

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline bool all_finite(const ParamVector& p) { return all_finite(std::span(p.v)); }
inline bool all_finite(const Matrix& m) { return all_finite(std::span(m.data)); }

inline double dot(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_distance(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) throw DimensionError("squared_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// y += alpha * x
inline void axpy(ParamVector& y, double alpha, const ParamVector& x) {
  if (y.size() != x.size()) throw DimensionError("axpy: length mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

inline void axpy(Matrix& y, double alpha, const Matrix& x) {
  if (y.rows != x.rows || y.cols != x.cols) throw DimensionError("axpy: shape mismatch");
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += alpha * x.data[i];
}

inline int max_label(const std::vector<int>& labels) {
  int m = -1;
  for (int l : labels) m = l > m ? l : m;
  return m;
}

}  // namespace att
