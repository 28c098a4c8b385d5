#include "scca/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace {

using scca::Index;
using scca::Matrix;
using scca::Rng;
using scca::Vector;

Vector random_vec(Rng& rng, Index d) {
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = rng.normal();
  return v;
}

double dense_spectral_norm(const Matrix& a) {
  return scca::svd_thin(a).values.maxCoeff();
}

TEST(InexactGradient, IdentityWhitenersGiveOuterProduct) {
  Rng rng(10);
  const Vector x = random_vec(rng, 4);
  const Vector y = random_vec(rng, 3);
  const scca::GradientEstimate g = scca::inexact_gradient(
      Matrix::Identity(4, 4), Matrix::Identity(3, 3), x, y);
  EXPECT_LE((g.dense() - x * y.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(InexactGradient, ScalarExample) {
  Matrix wx(1, 1), wy(1, 1);
  wx << 2.0;
  wy << 3.0;
  Vector x(1), y(1);
  x << 1.0;
  y << 1.0;
  const scca::GradientEstimate g = scca::inexact_gradient(wx, wy, x, y);
  EXPECT_DOUBLE_EQ(g.dense()(0, 0), 6.0);
  EXPECT_DOUBLE_EQ(g.frobenius_norm(), 6.0);
}

TEST(InexactGradient, FactoredNormMatchesDense) {
  Rng rng(20);
  for (int rep = 0; rep < 20; ++rep) {
    const scca::GradientEstimate g{random_vec(rng, 7), random_vec(rng, 5)};
    EXPECT_NEAR(g.frobenius_norm(), g.dense().norm(),
                1e-10 * (1.0 + g.frobenius_norm()));
  }
}

TEST(InexactGradient, DimensionMismatch) {
  Vector x(2), y(2);
  x.setOnes();
  y.setOnes();
  EXPECT_THROW(
      scca::inexact_gradient(Matrix::Identity(3, 3), Matrix::Identity(2, 2), x, y),
      scca::input_error);
}

TEST(InexactGradient, CappedOverloadMatchesDenseWhitener) {
  Rng rng(30);
  std::vector<Vector> aux;
  for (int i = 0; i < 60; ++i) aux.push_back(random_vec(rng, 5));
  const scca::WhitenerState s = scca::init_from_aux(aux, 0.05);
  const scca::CappedWhitener full = scca::capped_whitening_matrix(s, 5);
  const Vector x = random_vec(rng, 5);
  const Vector y = random_vec(rng, 5);
  const scca::GradientEstimate a =
      scca::inexact_gradient(full, full, x, y);
  const scca::GradientEstimate b = scca::inexact_gradient(
      s.whitening_matrix(), s.whitening_matrix(), x, y);
  EXPECT_LE((a.dense() - b.dense()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ReferenceGradient, SameWhitenersSameResult) {
  Rng rng(40);
  const Matrix w = Matrix::Identity(3, 3) * 1.7;
  const Vector x = random_vec(rng, 3);
  const Vector y = random_vec(rng, 3);
  const scca::GradientEstimate a = scca::reference_gradient(w, w, x, y);
  const scca::GradientEstimate b = scca::inexact_gradient(w, w, x, y);
  EXPECT_TRUE((a.left.array() == b.left.array()).all());
  EXPECT_TRUE((a.right.array() == b.right.array()).all());
}

TEST(GradientError, KnownValues) {
  Vector e1 = Vector::Zero(3);
  e1[0] = 1.0;
  const scca::GradientEstimate g{e1, e1};
  EXPECT_LE(scca::gradient_error(g, g), 1e-12);

  const scca::GradientEstimate zero{Vector::Zero(3), Vector::Zero(3)};
  EXPECT_NEAR(scca::gradient_error(g, zero), 1.0, 1e-12);
}

TEST(GradientError, MatchesDenseSvdOracle) {
  Rng rng(50);
  for (int rep = 0; rep < 30; ++rep) {
    const Index dx = 1 + static_cast<Index>(rng.uniform() * 12);
    const Index dy = 1 + static_cast<Index>(rng.uniform() * 9);
    const scca::GradientEstimate g{random_vec(rng, dx), random_vec(rng, dy)};
    const scca::GradientEstimate d{random_vec(rng, dx), random_vec(rng, dy)};
    const double got = scca::gradient_error(g, d);
    const double want = dense_spectral_norm(g.dense() - d.dense());
    EXPECT_NEAR(got, want, 1e-10 * (1.0 + want));
  }
}

TEST(GradientError, DimensionMismatch) {
  const scca::GradientEstimate g{Vector::Zero(3), Vector::Zero(2)};
  const scca::GradientEstimate d{Vector::Zero(2), Vector::Zero(2)};
  EXPECT_THROW(scca::gradient_error(g, d), scca::input_error);
}

TEST(Dilate, ScalarAndZero) {
  Vector two(1), one(1);
  two << 2.0;
  one << 1.0;
  const scca::DilatedGradient d = scca::dilate({two, one});
  const Matrix m = d.dense();
  EXPECT_DOUBLE_EQ(m(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(m(1, 1), 0.0);
  EXPECT_DOUBLE_EQ(m(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(m(1, 0), 2.0);
  const scca::SymEig eig = scca::sym_eig(m);
  EXPECT_NEAR(eig.values[0], 2.0, 1e-12);
  EXPECT_NEAR(eig.values[1], -2.0, 1e-12);

  const scca::DilatedGradient z = scca::dilate({Vector::Zero(2), Vector::Zero(3)});
  EXPECT_DOUBLE_EQ(z.dense().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dilate, SpectrumIsPlusMinusSigma) {
  Rng rng(60);
  for (int rep = 0; rep < 20; ++rep) {
    const Index dx = 2 + static_cast<Index>(rng.uniform() * 6);
    const Index dy = 2 + static_cast<Index>(rng.uniform() * 6);
    const scca::GradientEstimate g{random_vec(rng, dx), random_vec(rng, dy)};
    const double sigma = g.frobenius_norm();
    const scca::SymEig eig = scca::sym_eig(scca::dilate(g).dense());
    const Index d = dx + dy;
    EXPECT_NEAR(eig.values[0], sigma, 1e-8 * (1.0 + sigma));
    EXPECT_NEAR(eig.values[d - 1], -sigma, 1e-8 * (1.0 + sigma));
    for (Index i = 1; i + 1 < d; ++i)
      EXPECT_NEAR(eig.values[i], 0.0, 1e-8 * (1.0 + sigma));
  }
}

TEST(Dilate, HalfDifferenceIdentityAndZeroBlocks) {
  Rng rng(70);
  for (int rep = 0; rep < 10; ++rep) {
    const scca::GradientEstimate g{random_vec(rng, 5), random_vec(rng, 4)};
    const scca::DilatedGradient d = scca::dilate(g);
    const Vector p = d.stacked_sum();
    const Vector q = d.stacked_diff();
    const Matrix half =
        0.5 * (p * p.transpose() - q * q.transpose());
    EXPECT_LE((d.dense() - half).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_DOUBLE_EQ(d.dense().topLeftCorner(5, 5).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_DOUBLE_EQ(d.dense().bottomRightCorner(4, 4).cwiseAbs().maxCoeff(),
                     0.0);
  }
}

/* The estimate's Frobenius norm is controlled by the sample norms and
 * the smallest eigenvalues of the floored covariance estimates. */
TEST(InexactGradient, NormBoundFromCovarianceFloors) {
  Rng rng(80);
  std::vector<Vector> aux_x, aux_y;
  for (int i = 0; i < 40; ++i) {
    aux_x.push_back(random_vec(rng, 6));
    aux_y.push_back(random_vec(rng, 4));
  }
  const scca::WhitenerState sx = scca::init_from_aux(aux_x, 0.1);
  const scca::WhitenerState sy = scca::init_from_aux(aux_y, 0.1);
  const double rx =
      scca::sym_eig(sx.covariance()).values.minCoeff() + 0.1;
  const double ry =
      scca::sym_eig(sy.covariance()).values.minCoeff() + 0.1;
  for (int rep = 0; rep < 20; ++rep) {
    const Vector x = random_vec(rng, 6);
    const Vector y = random_vec(rng, 4);
    const scca::GradientEstimate g = scca::inexact_gradient(
        sx.whitening_matrix(), sy.whitening_matrix(), x, y);
    const double bound =
        std::sqrt(x.squaredNorm() / rx) * std::sqrt(y.squaredNorm() / ry);
    EXPECT_LE(g.frobenius_norm(), bound + 1e-12);
  }
}

/* Oracle error decays as the streaming whiteners concentrate. */
TEST(GradientErrorDecay, MeanErrorShrinksWithT) {
  const Index d = 10;
  Vector mix(d);
  for (Index i = 0; i < d; ++i)
    mix[i] = std::pow(0.5, static_cast<double>(i) / (d - 1));
  const Matrix cx = (mix.cwiseProduct(mix)).asDiagonal();
  const Matrix wx_pop = scca::inv_sqrt_psd(cx, 0.0);

  double err100 = 0.0, err400 = 0.0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng(7000 + seed);
    const auto draw = [&] { return (mix.cwiseProduct(random_vec(rng, d))).eval(); };
    std::vector<Vector> aux_x, aux_y;
    for (int i = 0; i < 20; ++i) {
      aux_x.push_back(draw());
      aux_y.push_back(draw());
    }
    scca::WhitenerState sx = scca::init_from_aux(aux_x, 0.0);
    scca::WhitenerState sy = scca::init_from_aux(aux_y, 0.0);
    for (int t = 1; t <= 400; ++t) {
      const Vector x = draw();
      const Vector y = draw();
      sx.update(x);
      sy.update(y);
      if (t == 100 || t == 400) {
        const scca::GradientEstimate inexact = scca::inexact_gradient(
            sx.whitening_matrix(), sy.whitening_matrix(), x, y);
        const scca::GradientEstimate ref =
            scca::reference_gradient(wx_pop, wx_pop, x, y);
        const double err = scca::gradient_error(ref, inexact);
        (t == 100 ? err100 : err400) += err;
      }
    }
  }
  EXPECT_LE(err400 / seeds, 0.6 * (err100 / seeds));
}

}  // namespace
