#pragma once

#include "scca/whitening.hpp"

namespace scca {

/// Rank-one gradient estimate left * right^T, kept factored. The dense
/// form is materialized only where a consumer genuinely needs it.
struct GradientEstimate {
  Vector left;
  Vector right;

  Matrix dense() const { return left * right.transpose(); }
  double frobenius_norm() const { return left.norm() * right.norm(); }
};

/// Gradient estimate at one sample under the given whitening transforms:
/// (wx x)(wy y)^T.
inline GradientEstimate inexact_gradient(const Matrix& wx, const Matrix& wy,
                                         const Vector& x, const Vector& y) {
  if (wx.cols() != x.size() || wy.cols() != y.size())
    throw input_error("inexact_gradient: dimension mismatch");
  require_finite(x, "inexact_gradient");
  require_finite(y, "inexact_gradient");
  return {wx * x, wy * y};
}

/// Rank-capped variant; the whiteners are applied in O(dim * K).
inline GradientEstimate inexact_gradient(const CappedWhitener& wx,
                                         const CappedWhitener& wy,
                                         const Vector& x, const Vector& y) {
  require_finite(x, "inexact_gradient");
  require_finite(y, "inexact_gradient");
  return {wx.apply(x), wy.apply(y)};
}

/// Same computation under reference (population) whitening transforms;
/// paired with inexact_gradient to measure oracle error.
inline GradientEstimate reference_gradient(const Matrix& wx, const Matrix& wy,
                                           const Vector& x, const Vector& y) {
  return inexact_gradient(wx, wy, x, y);
}

/// Spectral norm of g.dense() - d.dense(). The difference has rank at
/// most two, so it is reduced by thin QR of the two column pairs to a
/// small core whose SVD gives the norm; no dense d_x x d_y matrix is
/// formed.
inline double gradient_error(const GradientEstimate& g,
                             const GradientEstimate& d) {
  if (g.left.size() != d.left.size() || g.right.size() != d.right.size())
    throw input_error("gradient_error: dimension mismatch");
  const Index dx = g.left.size();
  const Index dy = g.right.size();

  Matrix a(dx, 2);
  a.col(0) = g.left;
  a.col(1) = d.left;
  Matrix b(dy, 2);
  b.col(0) = g.right;
  b.col(1) = -d.right;

  const Index ra = std::min<Index>(dx, 2);
  const Index rb = std::min<Index>(dy, 2);
  const Eigen::HouseholderQR<Matrix> qa(a);
  const Eigen::HouseholderQR<Matrix> qb(b);
  const Matrix r_a =
      qa.matrixQR().topRows(ra).triangularView<Eigen::Upper>();
  const Matrix r_b =
      qb.matrixQR().topRows(rb).triangularView<Eigen::Upper>();
  const Matrix core = r_a * r_b.transpose();
  return svd_thin(core).values.maxCoeff();
}

/// Self-adjoint dilation of a rank-one gradient estimate: the symmetric
/// (d_x + d_y) matrix with the estimate in the off-diagonal blocks. Also
/// exposes the two stacked vectors of the equivalent half-difference of
/// rank-one terms.
struct DilatedGradient {
  Vector left;
  Vector right;

  Index dim() const { return left.size() + right.size(); }

  Matrix dense() const {
    const Index dx = left.size();
    const Index dy = right.size();
    Matrix m = Matrix::Zero(dx + dy, dx + dy);
    m.topRightCorner(dx, dy) = left * right.transpose();
    m.bottomLeftCorner(dy, dx) = m.topRightCorner(dx, dy).transpose();
    return m;
  }

  /// dense() == 0.5 * (p p^T - q q^T) with p, q the stacked vectors.
  Vector stacked_sum() const {
    Vector p(dim());
    p << left, right;
    return p;
  }
  Vector stacked_diff() const {
    Vector q(dim());
    q << left, -right;
    return q;
  }
};

inline DilatedGradient dilate(const GradientEstimate& g) {
  return {g.left, g.right};
}

}  // namespace scca
