// Command-line front end: `scca gen` writes a synthetic dataset with its
// ground truth; `scca run` executes one algorithm against a dataset file.
// Exit codes: 0 success, 2 input error, 3 numerical failure.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scca/runner.hpp"
#include "scca/scca.hpp"
#include "scca/synthetic.hpp"

namespace {

constexpr int kExitInputError = 2;
constexpr int kExitNumericalError = 3;

scca::Vector parse_rho_list(const std::string& csv) {
  std::vector<double> values;
  std::string token;
  std::istringstream in(csv);
  while (std::getline(in, token, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(token, &used);
      while (used < token.size() && std::isspace(token[used])) ++used;
      if (used != token.size()) throw std::invalid_argument(token);
      values.push_back(v);
    } catch (const std::exception&) {
      throw scca::input_error("cannot parse correlation '" + token +
                              "' in --rho");
    }
  }
  if (values.empty()) throw scca::input_error("--rho must list at least one value");
  scca::Vector rho(static_cast<scca::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i)
    rho[static_cast<scca::Index>(i)] = values[i];
  return rho;
}

int run_gen(const scca::GenConfig& cfg, const std::string& rho_csv,
            const std::string& out_prefix) {
  scca::GenConfig full = cfg;
  full.rho = parse_rho_list(rho_csv);
  const scca::Synthetic syn = scca::gen_synthetic(full);
  const std::string data_path = out_prefix + ".data.txt";
  const std::string truth_path = out_prefix + ".truth.txt";
  scca::write_dataset(data_path, full.dx, full.dy, syn.samples);
  scca::write_truth(truth_path, syn.truth);
  std::printf("wrote %s (%lld samples) and %s\n", data_path.c_str(),
              static_cast<long long>(full.n), truth_path.c_str());
  return 0;
}

int run_algo(scca::RunConfig cfg, const std::string& algo_name,
             const std::string& eta_name, int64_t tau_flag,
             double b_flag, int64_t cap_flag) {
  cfg.algo = scca::parse_algo(algo_name);
  cfg.eta_mode = scca::parse_eta_mode(eta_name);
  if (tau_flag >= 0) cfg.tau = tau_flag;
  if (b_flag > 0.0) cfg.b_override = b_flag;
  if (cap_flag >= 0) cfg.cap_rank = static_cast<scca::Index>(cap_flag);
  const scca::RunResult res = scca::run(cfg);
  std::printf("wrote %s, %s, %s\n", res.metrics_path.c_str(),
              res.solution_path.c_str(), res.summary_path.c_str());
  if (res.final_subopt)
    std::printf("final suboptimality: %.6g\n", *res.final_subopt);
  else if (res.saa_objective)
    std::printf("objective: %.6g\n", *res.saa_objective);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming canonical correlation analysis toolkit"};
  app.require_subcommand(1);

  // ---- gen
  scca::GenConfig gen_cfg;
  std::string rho_csv;
  std::string gen_out;
  long long gen_dx = 0, gen_dy = 0, gen_n = 0;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--dx", gen_dx, "view-1 dimension")->required();
  gen->add_option("--dy", gen_dy, "view-2 dimension")->required();
  gen->add_option("--k-true", gen_cfg.k_true, "number of correlated directions")
      ->required();
  gen->add_option("--rho", rho_csv,
                  "comma-separated canonical correlations in (0,1)")
      ->required();
  gen->add_option("--n", gen_n, "number of samples")->required();
  gen->add_option("--cond-x", gen_cfg.cond_x,
                  "condition number of the view-1 mixing (default 1)");
  gen->add_option("--cond-y", gen_cfg.cond_y,
                  "condition number of the view-2 mixing (default 1)");
  gen->add_option("--seed", gen_cfg.seed, "random seed")->required();
  gen->add_option("--out", gen_out,
                  "output prefix; writes <out>.data.txt and <out>.truth.txt")
      ->required();

  // ---- run
  scca::RunConfig run_cfg;
  std::string algo_name, eta_name;
  long long run_T = 0, tau_flag = -1, cap_flag = -1, eval_every = 100;
  double b_flag = 0.0;
  CLI::App* run = app.add_subcommand("run", "run an algorithm on a dataset");
  run->add_option("--algo", algo_name, "msg | capped-msg | meg | saa")
      ->required();
  run->add_option("--data", run_cfg.data_path, "dataset file")->required();
  std::string truth_path;
  run->add_option("--truth", truth_path,
                  "ground-truth file enabling population metrics");
  run->add_option("--k", run_cfg.k, "target rank")->required();
  run->add_option("--cap-rank", cap_flag, "iterate rank cap (capped-msg)");
  run->add_option("--T", run_T, "number of streaming iterations (ignored by saa)");
  run->add_option("--tau", tau_flag,
                  "auxiliary prefix size (default: concentration bound)");
  run->add_option("--eta", eta_name, "step schedule: theory | sqrt")
      ->required();
  run->add_option("--eta-c", run_cfg.eta_c,
                  "constant c of the c/sqrt(t) schedule (default 0.1)");
  run->add_option("--lambda", run_cfg.reg_lambda,
                  "ridge added to covariances (default 0)");
  run->add_option("--seed", run_cfg.seed, "random seed")->required();
  run->add_option("--eval-every", eval_every,
                  "iterations between metric rows (default 100)");
  run->add_option("--rounding-draws", run_cfg.rounding_draws,
                  "roundings averaged per metric row (default 10)");
  run->add_option("--B", b_flag,
                  "declared squared-norm bound (default: estimated from the "
                  "auxiliary set; over-norm samples are rejected)");
  run->add_option("--out", run_cfg.out_prefix, "output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInputError;
  }

  try {
    if (gen->parsed()) {
      gen_cfg.dx = static_cast<scca::Index>(gen_dx);
      gen_cfg.dy = static_cast<scca::Index>(gen_dy);
      gen_cfg.n = gen_n;
      return run_gen(gen_cfg, rho_csv, gen_out);
    }
    run_cfg.T = run_T;
    run_cfg.eval_every = eval_every;
    if (!truth_path.empty()) run_cfg.truth_path = truth_path;
    return run_algo(run_cfg, algo_name, eta_name, tau_flag, b_flag, cap_flag);
  } catch (const scca::input_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInputError;
  } catch (const scca::numerical_error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumericalError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumericalError;
  }
}
