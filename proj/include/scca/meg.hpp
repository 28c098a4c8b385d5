#pragma once

#include "scca/msg.hpp"

namespace scca {

namespace detail {

/// exp(S) / Tr(exp(S)) for symmetric S. The spectrum is shifted by its
/// maximum before exponentiating; the normalization cancels the shift,
/// so the result is exact while overflow is impossible.
inline Matrix exp_to_density(const Matrix& s) {
  const SymEig eig = sym_eig(s);
  const Vector e = (eig.values.array() - eig.values[0]).exp().matrix();
  const double tr = e.sum();
  return eig.vectors * (e / tr).asDiagonal() * eig.vectors.transpose();
}

}  // namespace detail

/// Iterate state of the matrix exponentiated gradient solver, kept in
/// density scale: trace one, eigenvalues in [0, 1/k]. The running sum
/// accumulates the PRE-update iterate of every step, so the average
/// includes the initial iterate and excludes the final one.
struct MegState {
  Matrix n;
  Matrix avg_sum;
  std::int64_t iter = 0;
  int k = 0;
};

inline MegState make_meg_state(Index d, int k) {
  if (d < 1) throw input_error("make_meg_state: dimension must be positive");
  if (k < 1 || k > d)
    throw input_error("make_meg_state: k must lie in [1, d]");
  MegState s;
  s.n = Matrix::Identity(d, d) / static_cast<double>(d);
  s.avg_sum = Matrix::Zero(d, d);
  s.k = k;
  return s;
}

/// Multiplicative update: exp(log N + eta C) renormalized to unit trace.
/// Adding any multiple of the identity to the exponent leaves the result
/// unchanged, which is what makes the internal stabilization shift safe.
inline Matrix meg_update(const Matrix& n, const Matrix& c_tilde, double eta) {
  if (n.rows() != c_tilde.rows() || n.cols() != c_tilde.cols())
    throw input_error("meg_update: dimension mismatch");
  if (!(eta > 0.0)) throw input_error("meg_update: eta must be positive");
  const Matrix exponent = sym_log(n, 1e-12) + eta * c_tilde;
  return detail::exp_to_density(exponent);
}

/// Bregman projection onto {N : trace 1, 0 <= N <= (1/k) I}: caps the
/// spectrum at 1/k and rescales the rest, keeping the eigenbasis.
inline Matrix bregman_project(const Matrix& n, int k) {
  if (k < 1) throw input_error("bregman_project: k must be positive");
  const SymEig eig = sym_eig(n);
  const Vector lam = eig.values.cwiseMax(0.0);
  const Vector capped = entropy_cap(lam, 1.0 / static_cast<double>(k), 1.0);
  return eig.vectors * capped.asDiagonal() * eig.vectors.transpose();
}

/// Objective of a density-scaled iterate on the rank-k scale: k <N, C>.
inline double meg_objective_scale(const Matrix& n, const Matrix& c, int k) {
  if (n.rows() != c.rows() || n.cols() != c.cols())
    throw input_error("meg_objective_scale: dimension mismatch");
  return static_cast<double>(k) * n.cwiseProduct(c).sum();
}

/// Streaming solve in the dilated space: each gradient estimate is
/// dilated to a symmetric matrix, the density iterate takes one
/// multiplicative step plus Bregman projection, and the pre-update
/// iterate is folded into the running average. Snapshots report the
/// density-scale average; objectives are rescaled by k downstream.
inline SolveResult run_meg(SampleSource& stream, WhitenerState& wx,
                           WhitenerState& wy, const SolverOptions& opt,
                           const EvalHook& hook = {}) {
  validate(opt);
  const Index d = wx.dim() + wy.dim();
  MegState state = make_meg_state(d, opt.k);

  Matrix wxm, wym;
  for (std::int64_t t = 1; t <= opt.T; ++t) {
    const std::optional<PairedSample> sample = stream.next();
    if (!sample) {
      SolveResult out;
      out.completed = state.iter;
      out.exhausted_early = true;
      out.average = state.iter > 0
                        ? Matrix(state.avg_sum / static_cast<double>(state.iter))
                        : Matrix(state.n);
      return out;
    }
    wx.update(sample->x);
    wy.update(sample->y);
    if ((t - 1) % opt.whitener_cadence == 0) {
      wxm = wx.whitening_matrix();
      wym = wy.whitening_matrix();
    }
    const GradientEstimate grad =
        inexact_gradient(wxm, wym, sample->x, sample->y);

    state.avg_sum += state.n;
    state.iter += 1;
    state.n = bregman_project(
        meg_update(state.n, dilate(grad).dense(), opt.step.at(t)), opt.k);

    if (hook && (t % opt.eval_every == 0 || t == opt.T)) {
      StepSnapshot snap;
      snap.iter = t;
      snap.average = state.avg_sum / static_cast<double>(t);
      snap.current = state.n;
      snap.wx = wxm;
      snap.wy = wym;
      snap.grad = grad;
      snap.sample = *sample;
      hook(snap);
    }
  }
  SolveResult out;
  out.completed = opt.T;
  out.average = state.avg_sum / static_cast<double>(opt.T);
  return out;
}

}  // namespace scca
