#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "att/arch.hpp"
#include "att/errors.hpp"
#include "att/matrix.hpp"
#include "att/rng.hpp"

namespace att {

// Weight init: Kaiming-style uniform U(-sqrt(6/fan_in), sqrt(6/fan_in)),
// biases zero. Weights are drawn in layout order from Rng(seed), so the
// result is a pure function of (arch, seed).
inline ParamVector init_params(const Architecture& arch, std::uint64_t seed) {
  validate_arch(arch);
  ParamVector p(param_count(arch));
  auto bl = blocks(arch, p);
  Rng rng(seed);
  auto fill_uniform = [&rng](std::span<double> w, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& x : w) x = rng.uniform(-bound, bound);
  };
  if (arch.kind == ArchKind::Linear) {
    fill_uniform(bl.w1, arch.input_dim);
  } else {
    fill_uniform(bl.w1, arch.input_dim);
    fill_uniform(bl.w2, arch.hidden_dim);
  }
  return p;
}

namespace detail {

inline void check_batch(const Architecture& arch, const LabeledBatch& batch) {
  if (batch.size() == 0) throw DimensionError("batch is empty");
  if (batch.features.rows != batch.labels.size()) {
    throw DimensionError("batch: feature rows != label count");
  }
  if (batch.features.cols != arch.input_dim) {
    throw DimensionError("batch: feature width " + std::to_string(batch.features.cols) +
                         " != input_dim " + std::to_string(arch.input_dim));
  }
}

// out[i][c] = sum_d X[i][d] * W[c][d] + b[c]
inline void affine(const Matrix& x, std::span<const double> w, std::span<const double> b,
                   std::size_t out_dim, Matrix& out) {
  out = Matrix(x.rows, out_dim);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* xi = x.data.data() + i * x.cols;
    for (std::size_t c = 0; c < out_dim; ++c) {
      const double* wc = w.data() + c * x.cols;
      double acc = 0.0;
      for (std::size_t d = 0; d < x.cols; ++d) acc += xi[d] * wc[d];
      out(i, c) = acc + b[c];
    }
  }
}

// Hidden pre-activations (Mlp1H). Exposed so gradient-check suites can reject
// instances sitting on a ReLU kink.
inline Matrix hidden_preact(const Architecture& arch, const ParamVector& params,
                            const Matrix& features) {
  auto bl = blocks(arch, params);
  Matrix u;
  affine(features, bl.w1, bl.b1, arch.hidden_dim, u);
  return u;
}

// relu'(0) = 0 by convention, so runs are deterministic at the kink.
inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double relu_mask(double x) { return x > 0.0 ? 1.0 : 0.0; }

// Row-wise softmax with max-subtraction.
inline Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const auto zi = logits.row(i);
    double zmax = zi[0];
    for (double z : zi) zmax = std::max(zmax, z);
    double denom = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c) {
      const double e = std::exp(zi[c] - zmax);
      p(i, c) = e;
      denom += e;
    }
    for (std::size_t c = 0; c < logits.cols; ++c) p(i, c) /= denom;
  }
  return p;
}

}  // namespace detail

inline Matrix forward(const Architecture& arch, const ParamVector& params,
                      const LabeledBatch& batch) {
  detail::check_batch(arch, batch);
  auto bl = blocks(arch, params);
  if (arch.kind == ArchKind::Linear) {
    Matrix logits;
    detail::affine(batch.features, bl.w1, bl.b1, arch.num_classes, logits);
    return logits;
  }
  Matrix u;
  detail::affine(batch.features, bl.w1, bl.b1, arch.hidden_dim, u);
  for (double& x : u.data) x = detail::relu(x);
  Matrix logits;
  detail::affine(u, bl.w2, bl.b2, arch.num_classes, logits);
  return logits;
}

// Mean cross-entropy over the batch, log-sum-exp stabilized.
inline double ce_loss(const Matrix& logits, const std::vector<int>& labels) {
  if (logits.rows != labels.size()) throw DimensionError("ce_loss: rows != labels");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols) {
      throw LabelError("label " + std::to_string(y) + " out of range [0, " +
                       std::to_string(logits.cols) + ")");
    }
    const auto zi = logits.row(i);
    double zmax = zi[0];
    for (double z : zi) zmax = std::max(zmax, z);
    double sum = 0.0;
    for (double z : zi) sum += std::exp(z - zmax);
    total += (zmax + std::log(sum)) - zi[static_cast<std::size_t>(y)];
  }
  return total / static_cast<double>(logits.rows);
}

// Exact gradient of ce_loss(forward(...)) w.r.t. params.
inline ParamVector grad(const Architecture& arch, const ParamVector& params,
                        const LabeledBatch& batch) {
  detail::check_batch(arch, batch);
  auto bl = blocks(arch, params);
  const std::size_t n = batch.size();
  const Matrix& x = batch.features;

  ParamVector g(param_count(arch));
  auto gb = blocks(arch, g);

  if (arch.kind == ArchKind::Linear) {
    Matrix logits;
    detail::affine(x, bl.w1, bl.b1, arch.num_classes, logits);
    Matrix dz = detail::softmax_rows(logits);
    for (std::size_t i = 0; i < n; ++i) {
      dz(i, static_cast<std::size_t>(batch.labels[i])) -= 1.0;
      for (std::size_t c = 0; c < arch.num_classes; ++c) dz(i, c) /= static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < arch.num_classes; ++c) {
        const double d = dz(i, c);
        gb.b1[c] += d;
        double* gw = gb.w1.data() + c * arch.input_dim;
        const double* xi = x.data.data() + i * x.cols;
        for (std::size_t k = 0; k < arch.input_dim; ++k) gw[k] += d * xi[k];
      }
    }
    return g;
  }

  Matrix u;
  detail::affine(x, bl.w1, bl.b1, arch.hidden_dim, u);
  Matrix h(u.rows, u.cols);
  for (std::size_t i = 0; i < u.data.size(); ++i) h.data[i] = detail::relu(u.data[i]);
  Matrix logits;
  detail::affine(h, bl.w2, bl.b2, arch.num_classes, logits);

  Matrix dz = detail::softmax_rows(logits);
  for (std::size_t i = 0; i < n; ++i) {
    dz(i, static_cast<std::size_t>(batch.labels[i])) -= 1.0;
    for (std::size_t c = 0; c < arch.num_classes; ++c) dz(i, c) /= static_cast<double>(n);
  }

  // Output layer.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < arch.num_classes; ++c) {
      const double d = dz(i, c);
      gb.b2[c] += d;
      double* gw = gb.w2.data() + c * arch.hidden_dim;
      const double* hi = h.data.data() + i * h.cols;
      for (std::size_t k = 0; k < arch.hidden_dim; ++k) gw[k] += d * hi[k];
    }
  }

  // du = (dz W2) .* relu'(u)
  Matrix du(n, arch.hidden_dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < arch.hidden_dim; ++k) {
      double acc = 0.0;
      for (std::size_t c = 0; c < arch.num_classes; ++c) {
        acc += dz(i, c) * bl.w2[c * arch.hidden_dim + k];
      }
      du(i, k) = acc * detail::relu_mask(u(i, k));
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < arch.hidden_dim; ++k) {
      const double d = du(i, k);
      gb.b1[k] += d;
      double* gw = gb.w1.data() + k * arch.input_dim;
      const double* xi = x.data.data() + i * x.cols;
      for (std::size_t q = 0; q < arch.input_dim; ++q) gw[q] += d * xi[q];
    }
  }
  return g;
}

// params - step_size * g, as a new vector.
inline ParamVector sgd_step(const ParamVector& params, const ParamVector& g, double step_size) {
  if (params.size() != g.size()) throw DimensionError("sgd_step: length mismatch");
  ParamVector out = params;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= step_size * g[i];
  return out;
}

// Argmax prediction accuracy; ties resolve to the lowest class index.
inline double accuracy(const Architecture& arch, const ParamVector& params,
                       const LabeledBatch& batch) {
  const Matrix logits = forward(arch, params, batch);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols; ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    if (static_cast<int>(best) == batch.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows);
}

}  // namespace att
