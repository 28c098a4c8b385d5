#pragma once

#include <cstdio>
#include <vector>

#include "scca/spectral.hpp"

namespace scca {

/// Rank-k solution: paired directions in whitened space with orthonormal
/// columns, plus their unwhitened counterparts once factors have been
/// extracted. `heuristic` marks solutions whose pairing is not exact.
struct CcaSolution {
  Matrix u;
  Matrix v;
  Matrix u_tilde;
  Matrix v_tilde;
  Index selected_count = 0;
  bool heuristic = false;
};

/// Systematic (Madow) sampling: selects indices with exact marginals w_i
/// using a single uniform draw. The selection size is floor(sum w) or
/// ceil(sum w) and never exceeds `budget`. Index i is selected iff its
/// prefix-sum interval (P_{i-1}, P_i] contains a grid point u + m.
inline std::vector<Index> sample_k_subset(const Vector& w, Index budget,
                                          Rng& rng) {
  if (budget < 1) throw input_error("sample_k_subset: budget must be positive");
  require_finite(w, "sample_k_subset");
  if (w.size() > 0 && (w.minCoeff() < -1e-9 || w.maxCoeff() > 1.0 + 1e-9))
    throw input_error("sample_k_subset: weights must lie in [0, 1]");
  const Vector wc = w.cwiseMax(0.0).cwiseMin(1.0);
  if (wc.sum() > static_cast<double>(budget) + 1e-8)
    throw input_error("sample_k_subset: weights sum above the budget");

  std::vector<Index> out;
  double g = rng.uniform();
  double p = 0.0;
  for (Index i = 0; i < wc.size(); ++i) {
    const double pn = p + wc[i];
    while (g <= p) g += 1.0;
    if (g <= pn && static_cast<Index>(out.size()) < budget) {
      out.push_back(i);
      g += 1.0;
    }
    p = pn;
  }
  return out;
}

/// Result of rounding an averaged lifted iterate: the rank-<=k matrix
/// and the paired directions that compose it.
struct RoundedMsg {
  Matrix m;
  CcaSolution solution;
};

/// Rounds a fractional averaged iterate to a rank-<=k partial isometry
/// by sampling singular directions with the singular values as marginals.
/// In expectation the rounded matrix equals the input.
inline RoundedMsg round_msg(const Matrix& m_avg, int k, Rng& rng) {
  if (k < 1) throw input_error("round_msg: k must be positive");
  const ThinSvd svd = svd_thin(m_avg);
  if (svd.values.maxCoeff() > 1.0 + 1e-9)
    throw input_error(
        "round_msg: averaged iterate has a singular value above one (" +
        fmt_g(svd.values.maxCoeff()) + ")");
  const Vector w = svd.values.cwiseMax(0.0).cwiseMin(1.0);
  if (w.sum() > static_cast<double>(k) + 1e-8)
    throw input_error(
        "round_msg: averaged iterate has nuclear norm above k (" +
        fmt_g(w.sum()) + ")");
  const std::vector<Index> sel = sample_k_subset(w, k, rng);

  RoundedMsg out;
  const Index n = static_cast<Index>(sel.size());
  out.solution.u.resize(m_avg.rows(), n);
  out.solution.v.resize(m_avg.cols(), n);
  for (Index j = 0; j < n; ++j) {
    out.solution.u.col(j) = svd.left.col(sel[static_cast<std::size_t>(j)]);
    out.solution.v.col(j) = svd.right.col(sel[static_cast<std::size_t>(j)]);
  }
  out.solution.selected_count = n;
  out.m = out.solution.u * out.solution.v.transpose();
  return out;
}

/// Result of rounding an averaged density iterate: a rank-<=k projection
/// and the eigenvectors that span it.
struct RoundedMeg {
  Matrix p;
  Matrix basis;
};

/// Rounds an averaged density iterate to a rank-<=k projection by
/// sampling eigendirections with marginals k * eigenvalue (clipped to
/// [0, 1]). In expectation the projection equals k times the input.
inline RoundedMeg round_meg(const Matrix& n_avg, int k, Rng& rng) {
  if (k < 1) throw input_error("round_meg: k must be positive");
  const SymEig eig = sym_eig(n_avg);
  Vector w = static_cast<double>(k) * eig.values;
  if (w.maxCoeff() > 1.0 + 1e-6)
    throw input_error(
        "round_meg: averaged iterate has an eigenvalue above 1/k (" +
        fmt_g(w.maxCoeff() / static_cast<double>(k)) + ")");
  w = w.cwiseMax(0.0).cwiseMin(1.0);
  const std::vector<Index> sel = sample_k_subset(w, k, rng);

  RoundedMeg out;
  const Index n = static_cast<Index>(sel.size());
  out.basis.resize(n_avg.rows(), n);
  for (Index j = 0; j < n; ++j)
    out.basis.col(j) = eig.vectors.col(sel[static_cast<std::size_t>(j)]);
  out.p = out.basis * out.basis.transpose();
  return out;
}

/// Maps whitened-space directions back to input space through the final
/// whitening transforms. No re-orthonormalization is applied; the
/// columns are exactly wx * u and wy * v.
inline CcaSolution extract_factors(const CcaSolution& solution,
                                   const Matrix& wx, const Matrix& wy) {
  if (wx.cols() != solution.u.rows() || wy.cols() != solution.v.rows())
    throw input_error("extract_factors: whitener dimension mismatch");
  CcaSolution out = solution;
  out.u_tilde = wx * solution.u;
  out.v_tilde = wy * solution.v;
  return out;
}

/// Splits rounded dilation eigenvectors into per-view blocks to recover
/// paired directions. Each block is rescaled by sqrt(2) and the two
/// blocks are orthonormalized independently, so the pairing (and any
/// orthogonality across the two views) is approximate. Columns whose
/// block norm is degenerate are dropped with a warning.
inline CcaSolution meg_factor_heuristic(const Matrix& basis, Index dx,
                                        Index dy) {
  if (basis.rows() != dx + dy)
    throw input_error("meg_factor_heuristic: basis rows must equal dx + dy");
  const double sqrt2 = std::sqrt(2.0);

  std::vector<Index> keep;
  for (Index j = 0; j < basis.cols(); ++j) {
    const double nu = basis.col(j).head(dx).norm();
    const double nv = basis.col(j).tail(dy).norm();
    if (nu < 1e-8 || nv < 1e-8) {
      std::fprintf(stderr,
                   "meg_factor_heuristic: dropping degenerate direction %ld "
                   "(block norms %.3g, %.3g)\n",
                   static_cast<long>(j), nu, nv);
      continue;
    }
    keep.push_back(j);
  }

  const Index n = static_cast<Index>(keep.size());
  CcaSolution out;
  out.heuristic = true;
  out.selected_count = n;
  if (n == 0) {
    out.u.resize(dx, 0);
    out.v.resize(dy, 0);
    return out;
  }
  Matrix ub(dx, n), vb(dy, n);
  for (Index j = 0; j < n; ++j) {
    ub.col(j) = sqrt2 * basis.col(keep[static_cast<std::size_t>(j)]).head(dx);
    vb.col(j) = sqrt2 * basis.col(keep[static_cast<std::size_t>(j)]).tail(dy);
  }
  const Eigen::HouseholderQR<Matrix> qu(ub);
  const Eigen::HouseholderQR<Matrix> qv(vb);
  out.u = qu.householderQ() * Matrix::Identity(dx, n);
  out.v = qv.householderQ() * Matrix::Identity(dy, n);
  /* keep the orientation of the original blocks */
  for (Index j = 0; j < n; ++j) {
    if (out.u.col(j).dot(ub.col(j)) < 0.0) out.u.col(j) *= -1.0;
    if (out.v.col(j).dot(vb.col(j)) < 0.0) out.v.col(j) *= -1.0;
  }
  return out;
}

}  // namespace scca
