#pragma once

// Exact meta-gradients of the normalized matching loss with respect to the
// synthetic features and the student step size, by reverse traversal of the
// unrolled SGD steps.
//
// With theta_{k+1} = theta_k - lr * g(theta_k, X) and L evaluated at step t,
// the adjoint lambda_k = dL/dtheta_k obeys
//     lambda_k = lambda_{k+1} - lr * H(theta_k) lambda_{k+1},
// and each step contributes
//     dL/dlr += -g(theta_k)' lambda_{k+1}
//     dL/dX  += -lr * d/dX [ g(theta_k, X)' lambda_{k+1} ].
// Both second-order terms are gradients of the scalar s(theta, X) =
// g(theta, X)' v, computed in closed form per architecture below (the Hessian
// is symmetric, so grad_theta s = H v).

#include <cstddef>
#include <vector>

#include "att/arch.hpp"
#include "att/errors.hpp"
#include "att/matrix.hpp"
#include "att/nn.hpp"
#include "att/synth.hpp"
#include "att/unroll.hpp"

namespace att {

struct MetaGradients {
  Matrix d_features;
  double d_lr = 0.0;
};

namespace detail {

// Row-wise softmax JVP: out_i = p_i .* (a_i - (p_i . a_i) 1), scaled by 1/n.
inline Matrix softmax_jvp_rows(const Matrix& p, const Matrix& a, double scale) {
  Matrix out(p.rows, p.cols);
  for (std::size_t i = 0; i < p.rows; ++i) {
    double pa = 0.0;
    for (std::size_t c = 0; c < p.cols; ++c) pa += p(i, c) * a(i, c);
    for (std::size_t c = 0; c < p.cols; ++c) {
      out(i, c) = scale * p(i, c) * (a(i, c) - pa);
    }
  }
  return out;
}

// out[i][r] = sum_c m[i][c] * w[c*cols_r + r]   (i.e. M * W for row-major W)
inline Matrix mat_rowmajor_prod(const Matrix& m, std::span<const double> w, std::size_t cols_r) {
  Matrix out(m.rows, cols_r);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      const double v = m(i, c);
      if (v == 0.0) continue;
      const double* wc = w.data() + c * cols_r;
      for (std::size_t r = 0; r < cols_r; ++r) out(i, r) += v * wc[r];
    }
  }
  return out;
}

// acc_w[c*D + d] += sum_i m[i][c] * x[i][d];  acc_b[c] += sum_i m[i][c]
inline void accumulate_outer(const Matrix& m, const Matrix& x, std::span<double> acc_w,
                             std::span<double> acc_b) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* xi = x.data.data() + i * x.cols;
    for (std::size_t c = 0; c < m.cols; ++c) {
      const double v = m(i, c);
      acc_b[c] += v;
      double* wc = acc_w.data() + c * x.cols;
      for (std::size_t d = 0; d < x.cols; ++d) wc[d] += v * xi[d];
    }
  }
}

// Gradients of s(theta, X) = grad_theta ce(theta; X, y) . v with respect to
// theta (the Hessian-vector product) and to X (the mixed term). ReLU masks are
// piecewise constant and treated as such; relu'(0) = 0.
inline void backprop_through_grad(const Architecture& arch, const ParamVector& theta,
                                  const Matrix& x, const std::vector<int>& labels,
                                  const ParamVector& v, ParamVector& d_theta, Matrix& d_x) {
  const std::size_t n = x.rows;
  const double inv_n = 1.0 / static_cast<double>(n);
  auto th = blocks(arch, theta);
  auto vb = blocks(arch, v);

  d_theta = ParamVector(param_count(arch));
  d_x = Matrix(n, x.cols);
  auto dt = blocks(arch, d_theta);

  if (arch.kind == ArchKind::Linear) {
    Matrix z;
    affine(x, th.w1, th.b1, arch.num_classes, z);
    const Matrix p = softmax_rows(z);
    Matrix dz = p;
    for (std::size_t i = 0; i < n; ++i) {
      dz(i, static_cast<std::size_t>(labels[i])) -= 1.0;
      for (std::size_t c = 0; c < arch.num_classes; ++c) dz(i, c) *= inv_n;
    }

    Matrix a;
    affine(x, vb.w1, vb.b1, arch.num_classes, a);  // A = X Vw' + 1 vb'
    const Matrix s = softmax_jvp_rows(p, a, inv_n);

    accumulate_outer(s, x, dt.w1, dt.b1);

    // dX = S W + dZ Vw
    const Matrix sx = mat_rowmajor_prod(s, th.w1, arch.input_dim);
    const Matrix dzv = mat_rowmajor_prod(dz, vb.w1, arch.input_dim);
    for (std::size_t i = 0; i < d_x.data.size(); ++i) d_x.data[i] = sx.data[i] + dzv.data[i];
    return;
  }

  // Mlp1H
  Matrix u;
  affine(x, th.w1, th.b1, arch.hidden_dim, u);
  Matrix r(u.rows, u.cols);
  Matrix h(u.rows, u.cols);
  for (std::size_t i = 0; i < u.data.size(); ++i) {
    r.data[i] = relu_mask(u.data[i]);
    h.data[i] = relu(u.data[i]);
  }
  Matrix z;
  affine(h, th.w2, th.b2, arch.num_classes, z);
  const Matrix p = softmax_rows(z);
  Matrix dz = p;
  for (std::size_t i = 0; i < n; ++i) {
    dz(i, static_cast<std::size_t>(labels[i])) -= 1.0;
    for (std::size_t c = 0; c < arch.num_classes; ++c) dz(i, c) *= inv_n;
  }

  Matrix a1;
  affine(x, vb.w1, vb.b1, arch.hidden_dim, a1);  // A1 = X V1' + 1 v1'
  Matrix a2;
  affine(h, vb.w2, vb.b2, arch.num_classes, a2);  // A2 = H V2' + 1 v2'

  Matrix ra1 = a1;
  for (std::size_t i = 0; i < ra1.data.size(); ++i) ra1.data[i] *= r.data[i];

  // B = (R .* A1) W2' + A2
  Matrix b(n, arch.num_classes);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < arch.num_classes; ++c) {
      const double* w2c = th.w2.data() + c * arch.hidden_dim;
      double acc = a2(i, c);
      for (std::size_t k = 0; k < arch.hidden_dim; ++k) acc += ra1(i, k) * w2c[k];
      b(i, c) = acc;
    }
  }
  const Matrix s = softmax_jvp_rows(p, b, inv_n);

  // Output layer: dW2 = S' H + dZ' (R .* A1), db2 = colsum(S).
  accumulate_outer(s, h, dt.w2, dt.b2);
  {
    // dZ' (R .* A1) has no bias contribution; discard the colsum.
    std::vector<double> scratch(arch.num_classes, 0.0);
    accumulate_outer(dz, ra1, dt.w2, std::span<double>(scratch));
  }

  // G_U = (S W2 + dZ V2) .* R
  const Matrix sw2 = mat_rowmajor_prod(s, th.w2, arch.hidden_dim);
  const Matrix dzv2 = mat_rowmajor_prod(dz, vb.w2, arch.hidden_dim);
  Matrix gu(n, arch.hidden_dim);
  for (std::size_t i = 0; i < gu.data.size(); ++i) {
    gu.data[i] = (sw2.data[i] + dzv2.data[i]) * r.data[i];
  }

  accumulate_outer(gu, x, dt.w1, dt.b1);

  // dX = G_U W1 + ((dZ W2) .* R) V1
  const Matrix guw1 = mat_rowmajor_prod(gu, th.w1, arch.input_dim);
  Matrix du = mat_rowmajor_prod(dz, th.w2, arch.hidden_dim);
  for (std::size_t i = 0; i < du.data.size(); ++i) du.data[i] *= r.data[i];
  const Matrix duv1 = mat_rowmajor_prod(du, vb.w1, arch.input_dim);
  for (std::size_t i = 0; i < d_x.data.size(); ++i) d_x.data[i] = guw1.data[i] + duv1.data[i];
}

}  // namespace detail

// Reverse-mode meta-gradients of match_loss(states[t_sel], start, target).
// Steps beyond t_sel are never traversed.
inline MetaGradients meta_gradients(const UnrollTape& tape, std::size_t t_sel,
                                    const ParamVector& start, const ParamVector& target) {
  if (t_sel < 1 || t_sel >= tape.states.size()) {
    throw DimensionError("meta_gradients: t_sel out of range");
  }
  const double denom = squared_distance(start, target);
  if (denom <= 0.0) {
    throw DegenerateExpertError("meta_gradients: start equals target");
  }
  for (std::size_t k = 0; k <= t_sel; ++k) {
    if (!all_finite(tape.states[k])) {
      throw DivergedError("meta_gradients: non-finite tape state", k);
    }
  }

  const std::size_t n_params = tape.states[0].size();
  ParamVector lambda(n_params);
  for (std::size_t i = 0; i < n_params; ++i) {
    lambda[i] = 2.0 * (tape.states[t_sel][i] - target[i]) / denom;
  }

  MetaGradients out;
  out.d_features = Matrix(tape.features.rows, tape.features.cols);
  out.d_lr = 0.0;

  ParamVector d_theta_s;
  Matrix d_x_s;
  for (std::size_t k = t_sel; k-- > 0;) {
    out.d_lr -= dot(tape.step_grads[k], lambda);
    detail::backprop_through_grad(tape.arch, tape.states[k], tape.features, tape.labels, lambda,
                                  d_theta_s, d_x_s);
    axpy(out.d_features, -tape.lr, d_x_s);
    axpy(lambda, -tape.lr, d_theta_s);
  }
  return out;
}

// Central finite differences of the same quantities, recomputing the full
// unroll per perturbation. Verification oracle, deliberately independent of
// the reverse sweep above.
inline MetaGradients fd_oracle(const Architecture& arch, const ParamVector& start,
                               const SyntheticDataset& synth, std::size_t t_sel,
                               const ParamVector& target, double h) {
  if (h <= 0.0) throw DimensionError("fd_oracle: h must be positive");
  auto loss_at = [&](const SyntheticDataset& s) {
    const UnrollTape tape = unroll(arch, start, s, t_sel);
    return match_loss(tape.states[t_sel], start, target);
  };

  MetaGradients out;
  out.d_features = Matrix(synth.features.rows, synth.features.cols);

  SyntheticDataset probe = synth;
  for (std::size_t i = 0; i < synth.features.data.size(); ++i) {
    const double orig = synth.features.data[i];
    probe.features.data[i] = orig + h;
    const double lp = loss_at(probe);
    probe.features.data[i] = orig - h;
    const double lm = loss_at(probe);
    probe.features.data[i] = orig;
    out.d_features.data[i] = (lp - lm) / (2.0 * h);
  }

  probe.lr_student = synth.lr_student + h;
  const double lp = loss_at(probe);
  probe.lr_student = synth.lr_student - h;
  const double lm = loss_at(probe);
  out.d_lr = (lp - lm) / (2.0 * h);
  return out;
}

}  // namespace att
