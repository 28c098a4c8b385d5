#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "scca/common.hpp"

namespace scca {

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
/// Satisfies a = vectors * values.asDiagonal() * vectors.transpose().
struct SymEig {
  Vector values;
  Matrix vectors;
};

/// Thin singular value decomposition, singular values descending.
/// Satisfies a = left * values.asDiagonal() * right.transpose().
struct ThinSvd {
  Matrix left;
  Vector values;
  Matrix right;
};

/// Symmetric eigendecomposition with eigenvalues sorted descending.
/// The input must be symmetric to within 1e-8 entrywise; it is
/// symmetrized before factorization. Equal eigenvalues keep the
/// backend's column order, so repeated calls are deterministic.
inline SymEig sym_eig(const Matrix& a) {
  if (a.size() == 0) throw input_error("sym_eig: empty matrix");
  if (a.rows() != a.cols()) throw input_error("sym_eig: matrix must be square");
  require_finite(a, "sym_eig");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-8)
    throw input_error("sym_eig: matrix is not symmetric");

  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success)
    throw numerical_error("sym_eig: eigendecomposition did not converge");

  const Index n = a.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  const Vector& raw = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&raw](Index i, Index j) { return raw[i] > raw[j]; });

  SymEig out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    out.values[i] = raw[order[static_cast<std::size_t>(i)]];
    out.vectors.col(i) = solver.eigenvectors().col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// Thin SVD of a rectangular matrix: left is d1 x m, right is d2 x m with
/// m = min(d1, d2), singular values nonnegative and descending.
inline ThinSvd svd_thin(const Matrix& a) {
  if (a.size() == 0) throw input_error("svd_thin: empty matrix");
  require_finite(a, "svd_thin");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

/// Inverse symmetric square root (a + eig_floor * I)^{-1/2} of a PSD
/// matrix. Fails if the floored matrix is still numerically singular.
inline Matrix inv_sqrt_psd(const Matrix& a, double eig_floor) {
  if (eig_floor < 0.0)
    throw input_error("inv_sqrt_psd: eig_floor must be nonnegative");
  const Matrix shifted =
      a + eig_floor * Matrix::Identity(a.rows(), a.cols());
  const SymEig eig = sym_eig(shifted);
  const double lambda_min = eig.values.minCoeff();
  if (lambda_min <= 0.0)
    throw numerical_error(
        "inv_sqrt_psd: matrix is numerically singular (smallest eigenvalue " +
        fmt_g(lambda_min) + ")");
  const Vector inv_sqrt = eig.values.cwiseSqrt().cwiseInverse();
  return eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.transpose();
}

/// Matrix exponential of a symmetric matrix via eigendecomposition.
inline Matrix sym_exp(const Matrix& a) {
  const SymEig eig = sym_eig(a);
  const Vector e = eig.values.array().exp().matrix();
  return eig.vectors * e.asDiagonal() * eig.vectors.transpose();
}

/// Matrix logarithm of a symmetric positive definite matrix. Eigenvalues
/// below eig_floor are raised to eig_floor before taking logs, which keeps
/// the result finite for nearly singular inputs.
inline Matrix sym_log(const Matrix& a, double eig_floor) {
  if (!(eig_floor > 0.0))
    throw input_error("sym_log: eig_floor must be positive");
  const SymEig eig = sym_eig(a);
  const Vector l =
      eig.values.cwiseMax(eig_floor).array().log().matrix();
  return eig.vectors * l.asDiagonal() * eig.vectors.transpose();
}

/// Euclidean projection of s onto {v : 0 <= v_i <= 1, sum_i v_i <= k}.
///
/// If entrywise clipping is already feasible it is the projection.
/// Otherwise the projection is clip(s - mu, 0, 1), where mu > 0 solves
/// sum_i clip(s_i - mu, 0, 1) = k. That function of mu is continuous,
/// nonincreasing, and piecewise linear with breakpoints at s_i and
/// s_i - 1, so the root is located exactly by scanning the sorted
/// breakpoints and interpolating on the crossing segment. No iterative
/// tolerance is involved.
inline Vector project_capped_box_sum(const Vector& s, double k) {
  if (!(k > 0.0))
    throw input_error("project_capped_box_sum: k must be positive");
  require_finite(s, "project_capped_box_sum");

  const Index m = s.size();
  Vector clipped = s.cwiseMax(0.0).cwiseMin(1.0);
  /* small slack keeps the projection idempotent under float summation */
  if (clipped.sum() <= k + 1e-12) return clipped;

  std::vector<double> bps;
  bps.reserve(static_cast<std::size_t>(2 * m) + 1);
  bps.push_back(0.0);
  for (Index i = 0; i < m; ++i) {
    if (s[i] > 0.0) bps.push_back(s[i]);
    if (s[i] - 1.0 > 0.0) bps.push_back(s[i] - 1.0);
  }
  std::sort(bps.begin(), bps.end());

  const auto f = [&s](double mu) {
    return (s.array() - mu).cwiseMax(0.0).cwiseMin(1.0).sum();
  };

  double lo = 0.0;
  double f_lo = f(lo);
  double mu = bps.back();
  for (std::size_t j = 1; j < bps.size(); ++j) {
    const double hi = bps[j];
    const double f_hi = f(hi);
    if (f_hi <= k) {
      mu = (f_lo > f_hi) ? lo + (f_lo - k) * (hi - lo) / (f_lo - f_hi) : lo;
      break;
    }
    lo = hi;
    f_lo = f_hi;
  }
  return (s.array() - mu).cwiseMax(0.0).cwiseMin(1.0).matrix();
}

/// Caps a descending nonnegative spectrum at `cap` while preserving total
/// mass `trace_target` and the mutual ratios of uncapped entries: finds
/// the smallest count c such that setting the c largest entries to cap
/// and rescaling the rest to carry the remaining mass leaves every
/// rescaled entry at or below cap.
inline Vector entropy_cap(const Vector& lambda, double cap,
                          double trace_target) {
  const Index m = lambda.size();
  if (m == 0) throw input_error("entropy_cap: empty spectrum");
  if (!(cap > 0.0 && cap <= 1.0))
    throw input_error("entropy_cap: cap must lie in (0, 1]");
  if (!(trace_target > 0.0))
    throw input_error("entropy_cap: trace_target must be positive");
  require_finite(lambda, "entropy_cap");
  for (Index i = 0; i + 1 < m; ++i)
    if (lambda[i] < lambda[i + 1] - 1e-12)
      throw input_error("entropy_cap: spectrum must be sorted descending");
  if (lambda.minCoeff() < -1e-12)
    throw input_error("entropy_cap: spectrum must be nonnegative");
  if (std::abs(lambda.sum() - trace_target) > 1e-9)
    throw input_error("entropy_cap: spectrum mass (" + fmt_g(lambda.sum()) +
                      ") does not match trace_target (" + fmt_g(trace_target) +
                      ")");
  if (static_cast<double>(m) * cap < trace_target - 1e-9)
    throw numerical_error(
        "entropy_cap: no spectrum of this size fits under the cap");

  Vector tail_sum(m + 1);
  tail_sum[m] = 0.0;
  for (Index c = m - 1; c >= 0; --c)
    tail_sum[c] = tail_sum[c + 1] + std::max(lambda[c], 0.0);

  bool degenerate = false;
  for (Index c = 0; c <= m; ++c) {
    const double rem_target = trace_target - static_cast<double>(c) * cap;
    if (c == m) {
      if (std::abs(rem_target) <= 1e-9) return Vector::Constant(m, cap);
      break;
    }
    if (rem_target < -1e-12) break; /* further caps only overshoot */
    const double rem_sum = tail_sum[c];
    if (rem_sum <= 0.0) {
      if (rem_target <= 1e-9) {
        Vector out = Vector::Zero(m);
        out.head(c).setConstant(cap);
        return out;
      }
      degenerate = true; /* mass left over but nothing to rescale */
      continue;
    }
    const double scale = std::max(rem_target, 0.0) / rem_sum;
    if (std::max(lambda[c], 0.0) * scale <= cap) {
      Vector out(m);
      out.head(c).setConstant(cap);
      for (Index i = c; i < m; ++i) out[i] = std::max(lambda[i], 0.0) * scale;
      return out;
    }
  }
  if (degenerate)
    throw numerical_error(
        "entropy_cap: zero-mass tail cannot absorb the uncapped target");
  throw numerical_error("entropy_cap: no feasible cap count");
}

}  // namespace scca
