#pragma once

#include <cstdint>
#include <vector>

#include "scca/spectral.hpp"

namespace scca {

/// Streaming covariance estimate for one view, with a lazily cached
/// whitening transform. The state counts every sample it has absorbed
/// (auxiliary samples included), so an update at total count n performs
/// cov <- (n/(n+1)) cov + (1/(n+1)) x x^T.
class WhitenerState {
 public:
  WhitenerState(Matrix cov, std::int64_t count, double reg_lambda)
      : cov_(std::move(cov)), count_(count), reg_lambda_(reg_lambda) {
    if (cov_.rows() != cov_.cols())
      throw input_error("WhitenerState: covariance must be square");
    if (count_ <= 0) throw input_error("WhitenerState: count must be positive");
    if (reg_lambda_ < 0.0)
      throw input_error("WhitenerState: reg_lambda must be nonnegative");
  }

  Index dim() const { return cov_.rows(); }
  std::int64_t count() const { return count_; }
  double reg_lambda() const { return reg_lambda_; }
  const Matrix& covariance() const { return cov_; }

  /// Absorbs one sample into the running covariance.
  void update(const Vector& x) {
    if (x.size() != dim())
      throw input_error("WhitenerState::update: dimension mismatch");
    require_finite(x, "WhitenerState::update");
    const double n = static_cast<double>(count_);
    cov_ = (n / (n + 1.0)) * cov_ + (1.0 / (n + 1.0)) * (x * x.transpose());
    count_ += 1;
    cache_valid_ = false;
  }

  /// (cov + reg_lambda I)^{-1/2}, cached until the next update.
  const Matrix& whitening_matrix() const {
    if (!cache_valid_) {
      try {
        cache_ = inv_sqrt_psd(cov_, reg_lambda_);
      } catch (const numerical_error&) {
        throw numerical_error(
            "whitening_matrix: covariance is numerically singular; "
            "use a positive reg_lambda or a larger auxiliary set (tau)");
      }
      cache_valid_ = true;
    }
    return cache_;
  }

 private:
  Matrix cov_;
  std::int64_t count_;
  double reg_lambda_;
  mutable Matrix cache_;
  mutable bool cache_valid_ = false;
};

/// Builds the covariance estimate from an auxiliary batch:
/// cov = (1/tau) sum_i x_i x_i^T with count tau.
inline WhitenerState init_from_aux(const std::vector<Vector>& aux,
                                   double reg_lambda) {
  if (aux.empty()) throw input_error("init_from_aux: empty auxiliary set");
  const Index d = aux.front().size();
  Matrix cov = Matrix::Zero(d, d);
  for (const Vector& x : aux) {
    if (x.size() != d)
      throw input_error("init_from_aux: dimension mismatch in auxiliary set");
    require_finite(x, "init_from_aux");
    cov.noalias() += x * x.transpose();
  }
  cov /= static_cast<double>(aux.size());
  return WhitenerState(std::move(cov),
                       static_cast<std::int64_t>(aux.size()), reg_lambda);
}

/// Rank-capped whitening transform: the top K eigendirections of the
/// floored covariance are whitened exactly, every direction orthogonal
/// to them is scaled by a single tail constant. Applying it to a vector
/// costs O(dim * K) instead of a dense O(dim^2) product.
class CappedWhitener {
 public:
  CappedWhitener(Matrix basis, Vector top_eigs, double tail_constant)
      : basis_(std::move(basis)),
        inv_sqrt_top_(top_eigs.cwiseSqrt().cwiseInverse()),
        tail_constant_(tail_constant),
        inv_sqrt_tail_(1.0 / std::sqrt(tail_constant)) {}

  Index dim() const { return basis_.rows(); }
  Index cap_rank() const { return basis_.cols(); }
  double tail_constant() const { return tail_constant_; }

  Vector apply(const Vector& x) const {
    if (x.size() != dim())
      throw input_error("CappedWhitener::apply: dimension mismatch");
    const Vector proj = basis_.transpose() * x;
    return basis_ * (inv_sqrt_top_.cwiseProduct(proj) - inv_sqrt_tail_ * proj) +
           inv_sqrt_tail_ * x;
  }

  /// Dense materialization, for inspection and factor extraction.
  Matrix dense() const {
    const Matrix eye = Matrix::Identity(dim(), dim());
    return basis_ * inv_sqrt_top_.asDiagonal() * basis_.transpose() +
           inv_sqrt_tail_ * (eye - basis_ * basis_.transpose());
  }

 private:
  Matrix basis_;
  Vector inv_sqrt_top_;
  double tail_constant_;
  double inv_sqrt_tail_;
};

/// Caps the whitener of `state` at rank K: eigendecomposes
/// cov + reg_lambda I, keeps the top K eigenpairs, and replaces the
/// remaining eigenvalues by max(reg_lambda, residual_trace / (dim - K)).
inline CappedWhitener capped_whitening_matrix(const WhitenerState& state,
                                              Index K) {
  const Index d = state.dim();
  if (K < 1 || K > d)
    throw input_error("capped_whitening_matrix: K must lie in [1, dim]");
  const Matrix floored =
      state.covariance() +
      state.reg_lambda() * Matrix::Identity(d, d);
  const SymEig eig = sym_eig(floored);
  if (eig.values[K - 1] <= 0.0)
    throw numerical_error(
        "capped_whitening_matrix: covariance is numerically singular in the "
        "top K directions; use a positive reg_lambda or a larger auxiliary "
        "set (tau)");
  double tail = 1.0; /* inert when K == dim: no direction is left over */
  if (K < d) {
    const double residual = eig.values.tail(d - K).sum();
    tail = std::max(state.reg_lambda(),
                    residual / static_cast<double>(d - K));
    if (tail <= 0.0)
      throw numerical_error(
          "capped_whitening_matrix: zero tail mass with reg_lambda = 0; "
          "use a positive reg_lambda or a larger auxiliary set (tau)");
  }
  return CappedWhitener(eig.vectors.leftCols(K), eig.values.head(K), tail);
}

/// Smallest auxiliary sample size tau ensuring that, with probability at
/// least 1 - delta, both streaming covariance estimates stay above half
/// their population eigenvalue floors (r_x, r_y) for all time, given the
/// squared-norm bound B on the data.
inline std::int64_t min_aux_size(double B, double r_x, double r_y,
                                 std::int64_t d_x, std::int64_t d_y,
                                 double delta) {
  if (!(B > 0.0) || !(r_x > 0.0) || !(r_y > 0.0))
    throw input_error("min_aux_size: B, r_x, r_y must be positive");
  if (d_x < 1 || d_y < 1)
    throw input_error("min_aux_size: dimensions must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw input_error("min_aux_size: delta must lie in (0, 1)");

  const auto rate = [B](double r) {
    return 3.0 * r * r / (6.0 * B * B + B * r);
  };
  const double burn = std::log(1.0 / (1.0 - delta));
  const auto view_terms = [burn](double c, double d) {
    const double t1 = (1.0 / c) * std::log(2.0 * d / burn) - 1.0;
    const double t2 = (1.0 / c) * std::log(2.0 * d);
    return std::max(t1, t2);
  };
  const double need =
      std::max(view_terms(rate(r_x), static_cast<double>(d_x)),
               view_terms(rate(r_y), static_cast<double>(d_y)));
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(need)));
}

}  // namespace scca
