#pragma once

#include <optional>

#include "scca/oracle.hpp"
#include "scca/stream.hpp"

namespace scca {

/// Iterate state of the projected stochastic gradient solver in the
/// lifted space. `m` is always feasible: singular values in [0, 1] with
/// nuclear norm at most k (and rank at most cap_rank when set).
struct MsgState {
  Matrix m;
  Matrix avg_sum;
  std::int64_t iter = 0;
  int k = 0;
  std::optional<Index> cap_rank;
};

inline MsgState make_msg_state(Index dx, Index dy, int k,
                               std::optional<Index> cap_rank = {}) {
  if (dx < 1 || dy < 1)
    throw input_error("make_msg_state: dimensions must be positive");
  if (k < 1 || k > std::min(dx, dy))
    throw input_error("make_msg_state: k must lie in [1, min(dx, dy)]");
  if (cap_rank && (*cap_rank < k || *cap_rank > std::min(dx, dy)))
    throw input_error(
        "make_msg_state: cap_rank must lie in [k, min(dx, dy)]");
  MsgState s;
  s.m = Matrix::Zero(dx, dy);
  s.avg_sum = Matrix::Zero(dx, dy);
  s.k = k;
  s.cap_rank = cap_rank;
  return s;
}

/// Projects onto {M : 0 <= sigma_i(M) <= 1, sum_i sigma_i(M) <= k}:
/// an SVD followed by the Euclidean spectrum projection. Signs stay with
/// the singular vector pairs.
inline Matrix project_F(const Matrix& m, double k) {
  const ThinSvd svd = svd_thin(m);
  const Vector s = project_capped_box_sum(svd.values, k);
  return svd.left * s.asDiagonal() * svd.right.transpose();
}

/// Zeroes all but the K largest singular values. K at or above the
/// number of singular values leaves the matrix untouched.
inline Matrix cap_rank_truncate(const Matrix& m, Index K) {
  if (K < 1) throw input_error("cap_rank_truncate: K must be positive");
  const ThinSvd svd = svd_thin(m);
  if (K >= svd.values.size()) return m;
  Vector s = svd.values;
  s.tail(s.size() - K).setZero();
  return svd.left * s.asDiagonal() * svd.right.transpose();
}

/// One stochastic step: ascend along the gradient estimate, project back
/// to the feasible set, apply the optional rank cap, and fold the result
/// into the running average.
inline void msg_step(MsgState& state, const GradientEstimate& grad,
                     double eta) {
  if (!(eta > 0.0)) throw input_error("msg_step: eta must be positive");
  if (grad.left.size() != state.m.rows() ||
      grad.right.size() != state.m.cols())
    throw input_error("msg_step: gradient dimension mismatch");
  Matrix m = state.m;
  m.noalias() += eta * grad.left * grad.right.transpose();
  m = project_F(m, static_cast<double>(state.k));
  if (state.cap_rank) m = cap_rank_truncate(m, *state.cap_rank);
  state.m = std::move(m);
  state.avg_sum += state.m;
  state.iter += 1;
}

/// Options shared by the streaming solvers.
struct SolverOptions {
  int k = 1;
  std::optional<Index> cap_rank;     /* also switches to capped whitening */
  std::int64_t T = 0;
  StepSchedule step = StepSchedule::constant(1.0);
  std::int64_t eval_every = 100;
  std::int64_t whitener_cadence = 1;
};

inline void validate(const SolverOptions& opt) {
  if (opt.T < 1) throw input_error("SolverOptions: T must be positive");
  if (opt.eval_every < 1)
    throw input_error("SolverOptions: eval_every must be positive");
  if (opt.whitener_cadence < 1)
    throw input_error("SolverOptions: whitener_cadence must be positive");
}

/// Immutable view of a solver's state handed to the evaluation hook.
/// Everything is deep-copied, so the hook may outlive the loop iteration.
struct StepSnapshot {
  std::int64_t iter = 0;
  Matrix average;
  Matrix current;
  Matrix wx;
  Matrix wy;
  GradientEstimate grad;
  PairedSample sample;
};

using EvalHook = std::function<void(const StepSnapshot&)>;

/// Outcome of a streaming solve. `completed` may fall short of T when
/// the stream is exhausted early; `average` is over completed steps.
struct SolveResult {
  Matrix average;
  std::int64_t completed = 0;
  bool exhausted_early = false;
};

/// Streaming solve: for each sample, update both covariance estimates,
/// refresh the whitening transforms on the configured cadence, take one
/// projected gradient step, and report snapshots every eval_every steps
/// (and at the final step). Returns the averaged iterate.
inline SolveResult run_msg(SampleSource& stream, WhitenerState& wx,
                           WhitenerState& wy, const SolverOptions& opt,
                           const EvalHook& hook = {}) {
  validate(opt);
  MsgState state = make_msg_state(wx.dim(), wy.dim(), opt.k, opt.cap_rank);

  Matrix wxm, wym;
  for (std::int64_t t = 1; t <= opt.T; ++t) {
    const std::optional<PairedSample> sample = stream.next();
    if (!sample) {
      SolveResult out;
      out.completed = state.iter;
      out.exhausted_early = true;
      out.average = state.iter > 0
                        ? Matrix(state.avg_sum / static_cast<double>(state.iter))
                        : Matrix(Matrix::Zero(wx.dim(), wy.dim()));
      return out;
    }
    wx.update(sample->x);
    wy.update(sample->y);
    if ((t - 1) % opt.whitener_cadence == 0) {
      if (opt.cap_rank) {
        wxm = capped_whitening_matrix(wx, *opt.cap_rank).dense();
        wym = capped_whitening_matrix(wy, *opt.cap_rank).dense();
      } else {
        wxm = wx.whitening_matrix();
        wym = wy.whitening_matrix();
      }
    }
    const GradientEstimate grad =
        inexact_gradient(wxm, wym, sample->x, sample->y);
    msg_step(state, grad, opt.step.at(t));

    if (hook && (t % opt.eval_every == 0 || t == opt.T)) {
      StepSnapshot snap;
      snap.iter = t;
      snap.average = state.avg_sum / static_cast<double>(t);
      snap.current = state.m;
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
