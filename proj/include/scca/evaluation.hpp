#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "scca/rounding.hpp"
#include "scca/stream.hpp"
#include "scca/whitening.hpp"

namespace scca {

/// Population second moments of a paired source, plus the canonical
/// correlations it was constructed with (descending).
struct GroundTruth {
  Matrix c_x;
  Matrix c_y;
  Matrix c_xy;
  Vector rho;

  Index dx() const { return c_x.rows(); }
  Index dy() const { return c_y.rows(); }
};

inline void validate(const GroundTruth& g) {
  if (g.c_x.rows() == 0 || g.c_x.rows() != g.c_x.cols())
    throw input_error("ground truth: c_x must be square and non-empty");
  if (g.c_y.rows() == 0 || g.c_y.rows() != g.c_y.cols())
    throw input_error("ground truth: c_y must be square and non-empty");
  if (g.c_xy.rows() != g.dx() || g.c_xy.cols() != g.dy())
    throw input_error("ground truth: c_xy must be dx by dy");
  if (g.rho.size() < 1 || g.rho.size() > std::min(g.dx(), g.dy()))
    throw input_error("ground truth: rho length must lie in [1, min(dx, dy)]");
  require_finite(g.c_x, "ground truth c_x");
  require_finite(g.c_y, "ground truth c_y");
  require_finite(g.c_xy, "ground truth c_xy");
  require_finite(g.rho, "ground truth rho");
}

/// Whitened population cross-covariance; its singular values are the
/// canonical correlations.
inline Matrix population_T(const GroundTruth& g) {
  validate(g);
  return inv_sqrt_psd(g.c_x, 0.0) * g.c_xy * inv_sqrt_psd(g.c_y, 0.0);
}

/// Symmetric dilation of a rectangular matrix: [[0, T], [T', 0]].
/// Its eigenvalues are plus/minus the singular values of T.
inline Matrix dilate_dense(const Matrix& t) {
  const Index d = t.rows() + t.cols();
  Matrix out = Matrix::Zero(d, d);
  out.topRightCorner(t.rows(), t.cols()) = t;
  out.bottomLeftCorner(t.cols(), t.rows()) = t.transpose();
  return out;
}

/// Inner product between a lifted iterate and a whitened cross-covariance.
inline double lifted_objective(const Matrix& m, const Matrix& t) {
  if (m.rows() != t.rows() || m.cols() != t.cols())
    throw input_error("lifted_objective: dimension mismatch");
  return (m.array() * t.array()).sum();
}

/// Best attainable lifted objective: the sum of the k largest singular
/// values of the whitened cross-covariance.
inline double optimum_value(const Matrix& t, int k) {
  if (k < 1 || k > std::min(t.rows(), t.cols()))
    throw input_error("optimum_value: k must lie in [1, min(dims)]");
  const ThinSvd svd = svd_thin(t);
  return svd.values.head(k).sum();
}

/// Correlation captured by extracted factor pairs: Tr(U~' C_xy V~).
inline double trace_objective(const Matrix& u_tilde, const Matrix& v_tilde,
                              const Matrix& c_xy) {
  if (u_tilde.rows() != c_xy.rows() || v_tilde.rows() != c_xy.cols() ||
      u_tilde.cols() != v_tilde.cols())
    throw input_error("trace_objective: dimension mismatch");
  return (u_tilde.transpose() * c_xy * v_tilde).trace();
}

/// How far factor columns are from orthonormality under a covariance:
/// the spectral norm of F' C F - I. Zero for exactly whitened factors.
inline double orthogonality_gap(const Matrix& f, const Matrix& c) {
  if (f.rows() != c.rows() || c.rows() != c.cols())
    throw input_error("orthogonality_gap: dimension mismatch");
  if (f.cols() == 0) return 0.0;
  const Matrix gram = f.transpose() * c * f -
                      Matrix::Identity(f.cols(), f.cols());
  const SymEig eig = sym_eig(gram);
  return std::max(std::abs(eig.values[0]),
                  std::abs(eig.values[eig.values.size() - 1]));
}

/// Batch solution computed from every sample the stream yields.
struct SaaResult {
  CcaSolution solution;
  Matrix t_hat;
  double objective = 0.0;
  int64_t count = 0;
};

/// Sample-average solver: accumulates full-batch second moments, whitens
/// the cross-covariance (with ridge reg_lambda), and reads the top-k
/// singular directions off directly.
inline SaaResult saa_solve(SampleSource& stream, Index dx, Index dy, int k,
                           double reg_lambda) {
  if (dx < 1 || dy < 1) throw input_error("saa_solve: dimensions must be positive");
  if (k < 1 || k > std::min(dx, dy))
    throw input_error("saa_solve: k must lie in [1, min(dx, dy)]");
  if (reg_lambda < 0.0) throw input_error("saa_solve: reg_lambda must be >= 0");

  Matrix cx = Matrix::Zero(dx, dx);
  Matrix cy = Matrix::Zero(dy, dy);
  Matrix cxy = Matrix::Zero(dx, dy);
  int64_t n = 0;
  while (auto s = stream.next()) {
    if (s->x.size() != dx || s->y.size() != dy)
      throw input_error("saa_solve: sample dimension mismatch");
    cx.noalias() += s->x * s->x.transpose();
    cy.noalias() += s->y * s->y.transpose();
    cxy.noalias() += s->x * s->y.transpose();
    n += 1;
  }
  if (n == 0) throw input_error("saa_solve: the stream yielded no samples");
  const double inv_n = 1.0 / static_cast<double>(n);
  cx *= inv_n;
  cy *= inv_n;
  cxy *= inv_n;

  Matrix wx, wy;
  try {
    wx = inv_sqrt_psd(cx, reg_lambda);
    wy = inv_sqrt_psd(cy, reg_lambda);
  } catch (const numerical_error& e) {
    throw numerical_error(std::string(e.what()) +
                          "; use a positive ridge (lambda)");
  }

  SaaResult out;
  out.count = n;
  out.t_hat = wx * cxy * wy;
  const ThinSvd svd = svd_thin(out.t_hat);
  out.objective = svd.values.head(k).sum();
  out.solution.u = svd.left.leftCols(k);
  out.solution.v = svd.right.leftCols(k);
  out.solution.selected_count = k;
  out.solution = extract_factors(out.solution, wx, wy);
  return out;
}

/// Problem constants implied by a norm bound B and covariance floors,
/// with the step sizes and excess-risk guarantees they induce.
struct TheoryConstants {
  double B = 0.0;
  double r_x = 0.0;
  double r_y = 0.0;
  double r = 0.0;
  Index d_x = 0;
  Index d_y = 0;
  Index d_max = 0;
  Index d_dilation = 0;
  double G = 0.0;
  double kappa = 0.0;
  int64_t tau_min = 0;
  double eta_msg = 0.0;
  double eta_meg = 0.0;
  double bound_msg = 0.0;
  double bound_meg = 0.0;
};

inline TheoryConstants compute_theory_constants(double B, double r_x,
                                                double r_y, Index d_x,
                                                Index d_y, int k, int64_t T,
                                                double delta) {
  if (!(B > 0.0) || !std::isfinite(B))
    throw input_error("theory constants: B must be positive and finite");
  if (!(r_x > 0.0) || !(r_y > 0.0))
    throw input_error("theory constants: covariance floors must be positive");
  if (d_x < 1 || d_y < 1)
    throw input_error("theory constants: dimensions must be positive");
  if (k < 1 || k > std::min(d_x, d_y))
    throw input_error("theory constants: k must lie in [1, min(dx, dy)]");
  if (T < 1) throw input_error("theory constants: T must be positive");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw input_error("theory constants: delta must lie in (0, 1)");

  TheoryConstants c;
  c.B = B;
  c.r_x = r_x;
  c.r_y = r_y;
  c.r = std::min(r_x, r_y);
  c.d_x = d_x;
  c.d_y = d_y;
  c.d_max = std::max(d_x, d_y);
  c.d_dilation = d_x + d_y;
  c.G = 2.0 * B / std::sqrt(r_x * r_y);
  c.kappa = 8.0 * B * B *
            std::sqrt(2.0 * std::log(static_cast<double>(c.d_max))) /
            (c.r * c.r);
  c.tau_min = min_aux_size(B, r_x, r_y, d_x, d_y, delta);

  const double root_t = std::sqrt(static_cast<double>(T));
  const double root_k = std::sqrt(static_cast<double>(k));
  c.eta_msg = 2.0 * root_k / (c.G * root_t);
  c.bound_msg =
      (2.0 * root_k * c.G + 2.0 * k * c.kappa + k * B / c.r) / root_t;

  const double log_dil = std::log(static_cast<double>(c.d_dilation));
  c.eta_meg =
      std::log1p(std::sqrt(log_dil / (c.G * static_cast<double>(T)))) / c.G;
  c.bound_meg = 2.0 * k * c.G * std::sqrt(log_dil / static_cast<double>(T)) +
                2.0 * k * c.kappa / root_t;
  return c;
}

}  // namespace scca
