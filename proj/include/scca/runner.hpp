#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scca/data.hpp"
#include "scca/meg.hpp"
#include "scca/msg.hpp"

namespace scca {

enum class Algo { msg, capped_msg, meg, saa };

inline const char* algo_name(Algo a) {
  switch (a) {
    case Algo::msg: return "msg";
    case Algo::capped_msg: return "capped-msg";
    case Algo::meg: return "meg";
    case Algo::saa: return "saa";
  }
  return "?";
}

inline Algo parse_algo(const std::string& s) {
  if (s == "msg") return Algo::msg;
  if (s == "capped-msg") return Algo::capped_msg;
  if (s == "meg") return Algo::meg;
  if (s == "saa") return Algo::saa;
  throw input_error("unknown algorithm '" + s +
                    "' (expected msg, capped-msg, meg, or saa)");
}

enum class EtaMode { theory, sqrt_decay };

inline EtaMode parse_eta_mode(const std::string& s) {
  if (s == "theory") return EtaMode::theory;
  if (s == "sqrt") return EtaMode::sqrt_decay;
  throw input_error("unknown step mode '" + s + "' (expected theory or sqrt)");
}

/// Everything a run needs. tau defaults to the concentration-based
/// auxiliary size; B defaults to the largest squared sample norm seen in
/// the auxiliary set.
struct RunConfig {
  Algo algo = Algo::msg;
  std::string data_path;
  std::optional<std::string> truth_path;
  int k = 1;
  std::optional<Index> cap_rank;
  int64_t T = 0;
  std::optional<int64_t> tau;
  EtaMode eta_mode = EtaMode::theory;
  double eta_c = 0.1;
  double reg_lambda = 0.0;
  uint64_t seed = 0;
  int64_t eval_every = 100;
  int rounding_draws = 10;
  int64_t whitener_cadence = 1;
  std::optional<double> b_override;
  std::string out_prefix;
};

/// One evaluation snapshot. Optional fields are written as empty CSV
/// cells when the quantity has no configured reference.
struct MetricsRow {
  int64_t iter = 0;
  double wall_ms = 0.0;
  std::optional<double> pop_obj_avg;
  std::optional<double> pop_obj_rounded_mean;
  std::optional<double> emp_obj_holdout;
  std::optional<double> subopt;
  std::optional<double> orth_x;
  std::optional<double> orth_y;
  std::optional<double> grad_err;
};

inline std::string metrics_csv_header() {
  return "iter,wall_ms,pop_obj_avg,pop_obj_rounded_mean,emp_obj_holdout,"
         "subopt,orth_x,orth_y,grad_err";
}

inline std::string metrics_csv_line(const MetricsRow& r) {
  const auto cell = [](const std::optional<double>& v) {
    return v ? fmt_real17(*v) : std::string();
  };
  std::string out = std::to_string(r.iter) + "," + fmt_real17(r.wall_ms);
  for (const auto* v : {&r.pop_obj_avg, &r.pop_obj_rounded_mean,
                        &r.emp_obj_holdout, &r.subopt, &r.orth_x, &r.orth_y,
                        &r.grad_err})
    out += "," + cell(*v);
  return out;
}

struct RunResult {
  std::string metrics_path;
  std::string solution_path;
  std::string summary_path;
  std::vector<MetricsRow> rows;
  CcaSolution solution;
  std::optional<TheoryConstants> constants;
  std::optional<double> optimum;
  std::optional<double> final_pop_obj;
  std::optional<double> final_subopt;
  std::optional<double> final_orth_x;
  std::optional<double> final_orth_y;
  std::optional<double> saa_objective;
  std::optional<double> bound;
  int64_t n = 0;
  int64_t tau_used = 0;
  int64_t holdout_used = 0;
  int64_t completed = 0;
  double b_used = 0.0;
  double r_x_used = 0.0;
  double r_y_used = 0.0;
};

namespace detail {

/// Enforces a declared squared-norm bound on every ingested sample.
class BoundedSource final : public SampleSource {
 public:
  BoundedSource(SampleSource& inner, double b) : inner_(&inner), b_(b) {}
  std::optional<PairedSample> next() override {
    auto s = inner_->next();
    if (s) {
      const double m = std::max(s->x.squaredNorm(), s->y.squaredNorm());
      if (m > b_)
        throw input_error("sample squared norm " + fmt_g(m) +
                          " exceeds the declared bound B=" + fmt_g(b_));
    }
    return s;
  }

 private:
  SampleSource* inner_;
  double b_;
};

inline double smallest_eigenvalue(const Matrix& m) {
  const SymEig eig = sym_eig(m);
  return eig.values[eig.values.size() - 1];
}

inline double default_now_ms() {
  const auto t = std::chrono::steady_clock::now().time_since_epoch();
  return std::chrono::duration<double, std::milli>(t).count();
}

struct SummaryWriter {
  std::ofstream out;
  explicit SummaryWriter(const std::string& path)
      : out(path, std::ios::binary) {
    if (!out) throw input_error("cannot open file for writing: " + path);
  }
  void kv(const std::string& key, const std::string& value) {
    out << key << '=' << value << '\n';
  }
  void kv(const std::string& key, double value) { kv(key, fmt_real17(value)); }
  void kv(const std::string& key, int64_t value) {
    kv(key, std::to_string(value));
  }
};

}  // namespace detail

/// Parses a summary file back into key/value pairs.
inline std::map<std::string, std::string> read_summary(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open summary file: " + path);
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos)
      out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

/// Executes one configured run against a dataset file, writing
/// <prefix>.metrics.csv, <prefix>.solution.txt, <prefix>.summary.txt.
/// `now_ms` supplies wall-clock readings for the metrics rows; the
/// default reads a monotonic clock, and tests may inject a deterministic
/// one (timing is an external input, so a fixed clock makes seeded runs
/// byte-identical).
inline RunResult run(const RunConfig& cfg,
                     std::function<double()> now_ms = {}) {
  if (!now_ms) now_ms = detail::default_now_ms;
  const double t_start = now_ms();

  // ---- configuration validation
  if (cfg.out_prefix.empty()) throw input_error("output prefix is required");
  if (cfg.k < 1) throw input_error("k must be positive");
  if (cfg.eval_every < 1) throw input_error("eval_every must be positive");
  if (cfg.rounding_draws < 1)
    throw input_error("rounding_draws must be positive");
  if (cfg.whitener_cadence < 1)
    throw input_error("whitener_cadence must be positive");
  if (cfg.reg_lambda < 0.0) throw input_error("lambda must be >= 0");
  if (!(cfg.eta_c > 0.0)) throw input_error("eta-c must be positive");
  if (cfg.b_override && !(*cfg.b_override > 0.0))
    throw input_error("B must be positive");
  if (cfg.algo == Algo::capped_msg) {
    if (!cfg.cap_rank)
      throw input_error("capped-msg requires --cap-rank");
    if (*cfg.cap_rank < cfg.k)
      throw input_error("cap-rank must be at least k");
  } else if (cfg.cap_rank) {
    throw input_error("--cap-rank applies only to capped-msg");
  }
  if (cfg.algo != Algo::saa && cfg.T < 1)
    throw input_error("T must be positive");

  // ---- dataset header and optional ground truth
  Index dx = 0, dy = 0;
  int64_t n = 0;
  {
    DatasetReader probe(cfg.data_path);
    dx = probe.dx();
    dy = probe.dy();
    n = probe.count();
  }
  if (cfg.k > std::min(dx, dy))
    throw input_error("k exceeds min(dx, dy) of the dataset");
  if (cfg.cap_rank && *cfg.cap_rank > std::min(dx, dy))
    throw input_error("cap-rank exceeds min(dx, dy) of the dataset");

  std::optional<GroundTruth> truth;
  if (cfg.truth_path) {
    truth = read_truth(*cfg.truth_path);
    if (truth->dx() != dx || truth->dy() != dy)
      throw input_error("ground-truth dimensions do not match the dataset");
  }

  RunResult res;
  res.n = n;
  res.metrics_path = cfg.out_prefix + ".metrics.csv";
  res.solution_path = cfg.out_prefix + ".solution.txt";
  res.summary_path = cfg.out_prefix + ".summary.txt";

  std::ofstream metrics(res.metrics_path, std::ios::binary);
  if (!metrics)
    throw input_error("cannot open file for writing: " + res.metrics_path);
  metrics << metrics_csv_header() << '\n';

  // population references, shared by all modes
  Matrix t_pop, d_pop, w_pop_x, w_pop_y;
  if (truth) {
    t_pop = population_T(*truth);
    res.optimum = optimum_value(t_pop, cfg.k);
    w_pop_x = inv_sqrt_psd(truth->c_x, 0.0);
    w_pop_y = inv_sqrt_psd(truth->c_y, 0.0);
    d_pop = dilate_dense(t_pop);
  }

  const auto write_summary_common = [&](detail::SummaryWriter& s) {
    s.kv("algo", algo_name(cfg.algo));
    s.kv("dx", static_cast<int64_t>(dx));
    s.kv("dy", static_cast<int64_t>(dy));
    s.kv("n", n);
    s.kv("k", static_cast<int64_t>(cfg.k));
    s.kv("reg_lambda", cfg.reg_lambda);
    s.kv("seed", static_cast<int64_t>(cfg.seed));
    if (res.optimum) s.kv("optimum", *res.optimum);
  };

  // ---- batch mode: consume everything, no holdout, one metrics row
  if (cfg.algo == Algo::saa) {
    DatasetReader reader(cfg.data_path);
    std::optional<detail::BoundedSource> bounded;
    SampleSource* src = &reader;
    if (cfg.b_override) {
      bounded.emplace(reader, *cfg.b_override);
      src = &*bounded;
    }
    const SaaResult saa = saa_solve(*src, dx, dy, cfg.k, cfg.reg_lambda);
    res.solution = saa.solution;
    res.saa_objective = saa.objective;
    res.completed = saa.count;

    MetricsRow row;
    row.iter = saa.count;
    row.wall_ms = now_ms() - t_start;
    if (truth) {
      res.final_pop_obj = trace_objective(saa.solution.u_tilde,
                                          saa.solution.v_tilde, truth->c_xy);
      row.pop_obj_avg = res.final_pop_obj;
      res.final_subopt = *res.optimum - *res.final_pop_obj;
      row.subopt = res.final_subopt;
      res.final_orth_x = orthogonality_gap(saa.solution.u_tilde, truth->c_x);
      res.final_orth_y = orthogonality_gap(saa.solution.v_tilde, truth->c_y);
      row.orth_x = res.final_orth_x;
      row.orth_y = res.final_orth_y;
    }
    metrics << metrics_csv_line(row) << '\n';
    res.rows.push_back(row);
    if (!metrics) throw input_error("write failed: " + res.metrics_path);
    metrics.close();

    write_solution(res.solution_path, res.solution, dx, dy);
    detail::SummaryWriter summary(res.summary_path);
    write_summary_common(summary);
    summary.kv("objective", saa.objective);
    if (res.final_pop_obj) summary.kv("final_pop_obj", *res.final_pop_obj);
    if (res.final_subopt) summary.kv("final_subopt", *res.final_subopt);
    if (res.final_orth_x) summary.kv("final_orth_x", *res.final_orth_x);
    if (res.final_orth_y) summary.kv("final_orth_y", *res.final_orth_y);
    summary.kv("completed", res.completed);
    summary.kv("selected", static_cast<int64_t>(res.solution.selected_count));
    summary.kv("heuristic", static_cast<int64_t>(res.solution.heuristic));
    if (!summary.out) throw input_error("write failed: " + res.summary_path);
    return res;
  }

  // ---- streaming modes -------------------------------------------------
  const double delta =
      std::min(0.5, 1.0 / std::sqrt(static_cast<double>(cfg.T)));

  // resolve the auxiliary size
  int64_t tau = 0;
  if (cfg.tau) {
    tau = *cfg.tau;
    if (tau < 1) throw input_error("tau must be positive");
  } else {
    DatasetReader boot(cfg.data_path);
    std::optional<detail::BoundedSource> bounded;
    SampleSource* src = &boot;
    if (cfg.b_override) {
      bounded.emplace(boot, *cfg.b_override);
      src = &*bounded;
    }
    const int64_t m = std::min<int64_t>(1000, n);
    if (m < 1)
      throw input_error("dataset is empty; tau + T samples are required");
    Matrix cx = Matrix::Zero(dx, dx), cy = Matrix::Zero(dy, dy);
    double max_sq = 0.0;
    for (int64_t i = 0; i < m; ++i) {
      const auto s = src->next();
      cx.noalias() += s->x * s->x.transpose();
      cy.noalias() += s->y * s->y.transpose();
      max_sq = std::max(max_sq,
                        std::max(s->x.squaredNorm(), s->y.squaredNorm()));
    }
    const double b_boot = cfg.b_override.value_or(max_sq);
    double rbx, rby;
    if (truth) {
      rbx = detail::smallest_eigenvalue(truth->c_x);
      rby = detail::smallest_eigenvalue(truth->c_y);
    } else {
      rbx = detail::smallest_eigenvalue(cx / static_cast<double>(m)) +
            cfg.reg_lambda;
      rby = detail::smallest_eigenvalue(cy / static_cast<double>(m)) +
            cfg.reg_lambda;
    }
    if (!(rbx > 0.0) || !(rby > 0.0))
      throw numerical_error(
          "estimated covariance floor is not positive; pass --tau or a "
          "positive --lambda");
    const int64_t wanted = min_aux_size(b_boot, rbx, rby, dx, dy, delta);
    tau = std::clamp<int64_t>(wanted, 1, std::max<int64_t>(1, n - cfg.T));
  }
  res.tau_used = tau;

  if (tau + cfg.T > n)
    throw input_error(
        "dataset provides n=" + std::to_string(n) + " samples but tau + T = " +
        std::to_string(tau + cfg.T) + " are required (tau=" +
        std::to_string(tau) + ", T=" + std::to_string(cfg.T) + ")");

  // holdout tail: last max(ceil(5%), 500) samples, capped by what remains
  int64_t holdout =
      std::min(std::max<int64_t>((n + 19) / 20, 500), n - tau - cfg.T);
  if (holdout < 0) holdout = 0;
  res.holdout_used = holdout;

  Matrix cx_hold, cy_hold, t_hold, d_hold;
  if (holdout > 0) {
    DatasetReader reader(cfg.data_path);
    std::optional<detail::BoundedSource> bounded;
    SampleSource* src = &reader;
    if (cfg.b_override) {
      bounded.emplace(reader, *cfg.b_override);
      src = &*bounded;
    }
    for (int64_t i = 0; i < n - holdout; ++i) src->next();
    cx_hold = Matrix::Zero(dx, dx);
    cy_hold = Matrix::Zero(dy, dy);
    Matrix cxy_hold = Matrix::Zero(dx, dy);
    for (int64_t i = 0; i < holdout; ++i) {
      const auto s = src->next();
      cx_hold.noalias() += s->x * s->x.transpose();
      cy_hold.noalias() += s->y * s->y.transpose();
      cxy_hold.noalias() += s->x * s->y.transpose();
    }
    cx_hold /= static_cast<double>(holdout);
    cy_hold /= static_cast<double>(holdout);
    cxy_hold /= static_cast<double>(holdout);
    try {
      t_hold = inv_sqrt_psd(cx_hold, cfg.reg_lambda) * cxy_hold *
               inv_sqrt_psd(cy_hold, cfg.reg_lambda);
    } catch (const numerical_error& e) {
      throw numerical_error(std::string(e.what()) +
                            "; holdout whitening failed, use a positive "
                            "--lambda");
    }
    if (cfg.algo == Algo::meg) d_hold = dilate_dense(t_hold);
  }

  // ---- main pass: auxiliary prefix, then the training stream
  DatasetReader reader(cfg.data_path);
  std::optional<detail::BoundedSource> bounded;
  SampleSource* src = &reader;
  if (cfg.b_override) {
    bounded.emplace(reader, *cfg.b_override);
    src = &*bounded;
  }
  std::vector<Vector> aux_x, aux_y;
  aux_x.reserve(static_cast<std::size_t>(tau));
  aux_y.reserve(static_cast<std::size_t>(tau));
  double aux_max_sq = 0.0;
  for (int64_t i = 0; i < tau; ++i) {
    const auto s = src->next();
    aux_max_sq = std::max(
        aux_max_sq, std::max(s->x.squaredNorm(), s->y.squaredNorm()));
    aux_x.push_back(s->x);
    aux_y.push_back(s->y);
  }
  WhitenerState wx = init_from_aux(aux_x, cfg.reg_lambda);
  WhitenerState wy = init_from_aux(aux_y, cfg.reg_lambda);
  aux_x.clear();
  aux_y.clear();

  res.b_used = cfg.b_override.value_or(aux_max_sq);
  if (!(res.b_used > 0.0))
    throw numerical_error("auxiliary samples are all zero; B is undefined");
  if (truth) {
    res.r_x_used = detail::smallest_eigenvalue(truth->c_x);
    res.r_y_used = detail::smallest_eigenvalue(truth->c_y);
  } else {
    res.r_x_used =
        detail::smallest_eigenvalue(wx.covariance()) + cfg.reg_lambda;
    res.r_y_used =
        detail::smallest_eigenvalue(wy.covariance()) + cfg.reg_lambda;
  }
  if (!(res.r_x_used > 0.0) || !(res.r_y_used > 0.0))
    throw numerical_error(
        "covariance floor is not positive; use a positive --lambda or a "
        "larger auxiliary set (tau)");

  res.constants = compute_theory_constants(res.b_used, res.r_x_used,
                                           res.r_y_used, dx, dy, cfg.k, cfg.T,
                                           delta);
  const bool is_meg = cfg.algo == Algo::meg;
  res.bound = is_meg ? res.constants->bound_meg : res.constants->bound_msg;
  const double eta_theory =
      is_meg ? res.constants->eta_meg : res.constants->eta_msg;

  SolverOptions opt;
  opt.k = cfg.k;
  opt.cap_rank = cfg.cap_rank;
  opt.T = cfg.T;
  opt.step = cfg.eta_mode == EtaMode::theory
                 ? StepSchedule::constant(eta_theory)
                 : StepSchedule::sqrt_decay(cfg.eta_c);
  opt.eval_every = cfg.eval_every;
  opt.whitener_cadence = cfg.whitener_cadence;

  Rng round_rng(derive_seed(cfg.seed, "round"));
  const bool have_orth_ref = truth.has_value() || holdout > 0;
  const Matrix& orth_cx = truth ? truth->c_x : cx_hold;
  const Matrix& orth_cy = truth ? truth->c_y : cy_hold;

  const EvalHook hook = [&](const StepSnapshot& snap) {
    MetricsRow row;
    row.iter = snap.iter;
    row.wall_ms = now_ms() - t_start;
    if (truth) {
      row.pop_obj_avg = is_meg
                            ? meg_objective_scale(snap.average, d_pop, cfg.k)
                            : lifted_objective(snap.average, t_pop);
      row.subopt = *res.optimum - *row.pop_obj_avg;
      const GradientEstimate ref =
          reference_gradient(w_pop_x, w_pop_y, snap.sample.x, snap.sample.y);
      row.grad_err = gradient_error(snap.grad, ref);
    }
    if (holdout > 0)
      row.emp_obj_holdout =
          is_meg ? meg_objective_scale(snap.average, d_hold, cfg.k)
                 : lifted_objective(snap.average, t_hold);

    const int draws = truth ? cfg.rounding_draws : (have_orth_ref ? 1 : 0);
    double rounded_sum = 0.0;
    for (int j = 0; j < draws; ++j) {
      CcaSolution sol;
      double obj = 0.0;
      if (is_meg) {
        const RoundedMeg r = round_meg(snap.average, cfg.k, round_rng);
        if (truth) obj = (r.p.array() * d_pop.array()).sum();
        if (j == 0)
          sol = meg_factor_heuristic(r.basis, dx, dy);
      } else {
        const RoundedMsg r = round_msg(snap.average, cfg.k, round_rng);
        if (truth) obj = lifted_objective(r.m, t_pop);
        if (j == 0) sol = r.solution;
      }
      rounded_sum += obj;
      if (j == 0 && have_orth_ref) {
        sol = extract_factors(sol, snap.wx, snap.wy);
        row.orth_x = orthogonality_gap(sol.u_tilde, orth_cx);
        row.orth_y = orthogonality_gap(sol.v_tilde, orth_cy);
      }
    }
    if (truth) row.pop_obj_rounded_mean = rounded_sum / draws;

    metrics << metrics_csv_line(row) << '\n';
    res.rows.push_back(row);
  };

  const SolveResult solved = is_meg ? run_meg(*src, wx, wy, opt, hook)
                                    : run_msg(*src, wx, wy, opt, hook);
  const Matrix& average = solved.average;
  res.completed = solved.completed;
  if (!metrics) throw input_error("write failed: " + res.metrics_path);
  metrics.close();

  // final whiteners, matching what the algorithm used
  const Matrix wx_final = cfg.cap_rank
                              ? capped_whitening_matrix(wx, *cfg.cap_rank).dense()
                              : wx.whitening_matrix();
  const Matrix wy_final = cfg.cap_rank
                              ? capped_whitening_matrix(wy, *cfg.cap_rank).dense()
                              : wy.whitening_matrix();

  if (is_meg) {
    const RoundedMeg r = round_meg(average, cfg.k, round_rng);
    res.solution = extract_factors(meg_factor_heuristic(r.basis, dx, dy),
                                   wx_final, wy_final);
    if (truth) res.final_pop_obj = meg_objective_scale(average, d_pop, cfg.k);
  } else {
    const RoundedMsg r = round_msg(average, cfg.k, round_rng);
    res.solution = extract_factors(r.solution, wx_final, wy_final);
    if (truth) res.final_pop_obj = lifted_objective(average, t_pop);
  }
  if (truth) res.final_subopt = *res.optimum - *res.final_pop_obj;
  if (have_orth_ref) {
    res.final_orth_x = orthogonality_gap(res.solution.u_tilde, orth_cx);
    res.final_orth_y = orthogonality_gap(res.solution.v_tilde, orth_cy);
  }

  write_solution(res.solution_path, res.solution, dx, dy);

  detail::SummaryWriter summary(res.summary_path);
  write_summary_common(summary);
  if (cfg.cap_rank) summary.kv("cap_rank", static_cast<int64_t>(*cfg.cap_rank));
  summary.kv("T", cfg.T);
  summary.kv("tau", tau);
  summary.kv("holdout", holdout);
  summary.kv("eval_every", cfg.eval_every);
  summary.kv("rounding_draws", static_cast<int64_t>(cfg.rounding_draws));
  summary.kv("whitener_cadence", cfg.whitener_cadence);
  summary.kv("eta_mode",
             cfg.eta_mode == EtaMode::theory ? "theory" : "sqrt");
  if (cfg.eta_mode == EtaMode::theory)
    summary.kv("eta", eta_theory);
  else
    summary.kv("eta_c", cfg.eta_c);
  summary.kv("B", res.b_used);
  summary.kv("r_x", res.r_x_used);
  summary.kv("r_y", res.r_y_used);
  summary.kv("G", res.constants->G);
  summary.kv("kappa", res.constants->kappa);
  summary.kv("tau_min", res.constants->tau_min);
  summary.kv("bound", *res.bound);
  if (res.final_pop_obj) summary.kv("final_pop_obj", *res.final_pop_obj);
  if (res.final_subopt) summary.kv("final_subopt", *res.final_subopt);
  if (res.final_orth_x) summary.kv("final_orth_x", *res.final_orth_x);
  if (res.final_orth_y) summary.kv("final_orth_y", *res.final_orth_y);
  summary.kv("completed", res.completed);
  summary.kv("selected", static_cast<int64_t>(res.solution.selected_count));
  summary.kv("heuristic", static_cast<int64_t>(res.solution.heuristic));
  if (!summary.out) throw input_error("write failed: " + res.summary_path);
  return res;
}

}  // namespace scca
