#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include "scca/evaluation.hpp"

namespace scca {

/// Parameters of the synthetic paired-Gaussian generator.
struct GenConfig {
  Index dx = 0;
  Index dy = 0;
  int k_true = 1;
  Vector rho;
  int64_t n = 0;
  double cond_x = 1.0;
  double cond_y = 1.0;
  uint64_t seed = 0;
};

struct Synthetic {
  std::vector<PairedSample> samples;
  GroundTruth truth;
};

/// Orthonormal columns obtained by QR-factoring a Gaussian matrix.
inline Matrix random_orthonormal_cols(Index rows, Index cols, Rng& rng) {
  if (cols < 1 || cols > rows)
    throw input_error("random_orthonormal_cols: need 1 <= cols <= rows");
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = rng.normal();
  const Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

/// SPD mixing with eigenvalues log-spaced in [1/cond, 1] in a random
/// orthonormal basis, so the induced covariance has condition cond^2.
inline Matrix random_spd_mixing(Index d, double cond, Rng& rng) {
  if (d < 1) throw input_error("random_spd_mixing: dimension must be positive");
  if (!(cond >= 1.0)) throw input_error("random_spd_mixing: cond must be >= 1");
  Vector mu(d);
  for (Index i = 0; i < d; ++i)
    mu[i] = d == 1 ? 1.0
                   : std::pow(cond, -static_cast<double>(i) /
                                        static_cast<double>(d - 1));
  const Matrix q = random_orthonormal_cols(d, d, rng);
  return q * mu.asDiagonal() * q.transpose();
}

/// Draws paired Gaussians whose population canonical correlations are
/// exactly rho (sorted descending): latent whitened views share
/// correlation rho along random orthonormal directions, then each view
/// is passed through a fixed SPD mixing. The returned ground truth holds
/// the induced population second moments.
inline Synthetic gen_synthetic(const GenConfig& cfg) {
  if (cfg.dx < 1 || cfg.dy < 1)
    throw input_error("gen_synthetic: dimensions must be positive");
  if (cfg.k_true < 1 || cfg.k_true > std::min(cfg.dx, cfg.dy))
    throw input_error("gen_synthetic: k_true must lie in [1, min(dx, dy)]");
  if (cfg.rho.size() != cfg.k_true)
    throw input_error("gen_synthetic: rho must have k_true entries");
  if (cfg.rho.minCoeff() <= 0.0 || cfg.rho.maxCoeff() >= 1.0)
    throw input_error("gen_synthetic: correlations must lie strictly in (0, 1)");
  if (cfg.n < 1) throw input_error("gen_synthetic: n must be positive");
  if (!(cfg.cond_x >= 1.0) || !(cfg.cond_y >= 1.0))
    throw input_error("gen_synthetic: condition numbers must be >= 1");

  Vector rho = cfg.rho;
  std::sort(rho.data(), rho.data() + rho.size(), std::greater<double>());

  Rng basis_rng(derive_seed(cfg.seed, "gen/basis"));
  Rng mix_x_rng(derive_seed(cfg.seed, "gen/mix-x"));
  Rng mix_y_rng(derive_seed(cfg.seed, "gen/mix-y"));
  Rng sample_rng(derive_seed(cfg.seed, "gen/samples"));

  const Matrix phi = random_orthonormal_cols(cfg.dx, cfg.k_true, basis_rng);
  const Matrix psi = random_orthonormal_cols(cfg.dy, cfg.k_true, basis_rng);
  const Matrix lx = random_spd_mixing(cfg.dx, cfg.cond_x, mix_x_rng);
  const Matrix ly = random_spd_mixing(cfg.dy, cfg.cond_y, mix_y_rng);

  const Matrix cross = phi * rho.asDiagonal() * psi.transpose();
  const Index d = cfg.dx + cfg.dy;
  Matrix joint = Matrix::Identity(d, d);
  joint.topRightCorner(cfg.dx, cfg.dy) = cross;
  joint.bottomLeftCorner(cfg.dy, cfg.dx) = cross.transpose();

  // symmetric square root of the joint latent covariance
  const SymEig eig = sym_eig(joint);
  const Vector root = eig.values.cwiseMax(0.0).cwiseSqrt();
  const Matrix a = eig.vectors * root.asDiagonal() * eig.vectors.transpose();

  Synthetic out;
  out.samples.reserve(static_cast<std::size_t>(cfg.n));
  Vector g(d);
  for (int64_t t = 0; t < cfg.n; ++t) {
    for (Index i = 0; i < d; ++i) g[i] = sample_rng.normal();
    const Vector z = a * g;
    out.samples.push_back({lx * z.head(cfg.dx), ly * z.tail(cfg.dy)});
  }

  out.truth.c_x = lx * lx;
  out.truth.c_y = ly * ly;
  out.truth.c_xy = lx * cross * ly;
  out.truth.rho = rho;
  validate(out.truth);
  return out;
}

}  // namespace scca
