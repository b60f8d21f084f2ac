#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "pnreg/leverage.hpp"
#include "test_support.hpp"

using namespace pnreg;

namespace {

// Dense pseudoinverse reference τᵢᴮ = aᵢᵀ(BᵀB)⁺aᵢ.
Vector dense_scores(const DenseMatrix& A, const DenseMatrix& B) {
  Eigen::CompleteOrthogonalDecomposition<DenseMatrix> cod(B.transpose() * B);
  DenseMatrix P = cod.pseudoInverse();
  Vector tau(A.rows());
  for (Index i = 0; i < A.rows(); ++i) tau[i] = A.row(i) * P * A.row(i).transpose();
  return tau;
}

}  // namespace

TEST(SampleRows, KeepsEverythingWhenProbabilitiesSaturate) {
  LeverageEstimate u = make_estimate(Vector::Ones(30), true);
  SeededRng rng(1);
  RowSample s = sample_rows(u, 1.0, 30.0, 5, rng);
  ASSERT_EQ(s.size(), 30);
  for (Index k = 0; k < 30; ++k) {
    EXPECT_EQ(s.indices[k], k);
    EXPECT_EQ(s.weights[k], 1.0);
  }
}

TEST(SampleRows, ExpectedCountWithinThreeSigma) {
  const Index n = 400;
  SeededRng rng(2);
  Vector u(n);
  for (Index i = 0; i < n; ++i) u[i] = rng.uniform() * 0.02;
  LeverageEstimate est = make_estimate(u, true);
  const double alpha = 1.0, c = 1.0;
  const Index d = 8;
  double mean_p = 0.0, var = 0.0;
  for (Index i = 0; i < n; ++i) {
    double p = std::min(1.0, alpha * u[i] * c * sample_log_d(d));
    mean_p += p;
    var += p * (1.0 - p);
  }
  const int draws = 1000;
  double total = 0.0;
  for (int k = 0; k < draws; ++k) {
    RowSample s = sample_rows(est, alpha, c, d, rng);
    total += static_cast<double>(s.size());
    for (std::size_t j = 0; j < s.indices.size(); ++j) {
      ASSERT_DOUBLE_EQ(s.weights[j], 1.0 / std::sqrt(s.probabilities[j]));
      if (j) ASSERT_LT(s.indices[j - 1], s.indices[j]);
    }
  }
  double sigma = std::sqrt(var / draws);
  EXPECT_NEAR(total / draws, mean_p, 3.0 * sigma);
}

TEST(SampleRows, SizeWithinChernoffBound) {
  const Index n = 5000, d = 10;
  SeededRng rng(3);
  Vector u = Vector::Constant(n, 1e-3);
  LeverageEstimate est = make_estimate(u, true);
  const double alpha = 2.0, c = 3.0;
  double bound = 2.0 * est.sum * alpha * c * sample_log_d(d);
  int over = 0;
  for (int k = 0; k < 200; ++k)
    if (static_cast<double>(sample_rows(est, alpha, c, d, rng).size()) > bound) ++over;
  EXPECT_EQ(over, 0);
  EXPECT_THROW(sample_rows(est, 0.0, c, d, rng), ContractViolation);
}

TEST(SampleRows, InfiniteScoreAlwaysKept) {
  Vector u = Vector::Zero(10);
  u[3] = std::numeric_limits<double>::infinity();
  SeededRng rng(4);
  RowSample s = sample_rows(make_estimate(u, true), 1.0, 1.0, 2, rng);
  ASSERT_EQ(s.size(), 1);
  EXPECT_EQ(s.indices[0], 3);
  EXPECT_EQ(s.weights[0], 1.0);
}

TEST(LeverageExact, IdentityAndFoster) {
  LeverageEstimate e = leverage_scores_exact(SparseMatrix::identity(6));
  EXPECT_LE((e.values - Vector::Ones(6)).cwiseAbs().maxCoeff(), 1e-14);
  SeededRng rng(5);
  for (int k = 0; k < 10; ++k) {
    DenseMatrix D = test::random_dense(80, 7, 0.3, rng);
    LeverageEstimate t = leverage_scores_exact(SparseMatrix::from_dense(D));
    EXPECT_LE(t.sum, 7.0 + 1e-9);
    EXPECT_GE(t.values.minCoeff(), 0.0);
  }
}

TEST(LeverageExact, DuplicatedRowSplitsScore) {
  SeededRng rng(6);
  DenseMatrix base = DenseMatrix::Identity(4, 4);
  base(3, 0) = 0.5;
  const int k = 3;
  DenseMatrix D(3 + k, 4);
  D.topRows(3) = base.topRows(3);
  for (int j = 0; j < k; ++j) D.row(3 + j) = base.row(3);
  Vector orig = leverage_scores_exact(base).values;
  Vector dup = leverage_scores_exact(SparseMatrix::from_dense(D)).values;
  for (int j = 0; j < k; ++j) EXPECT_NEAR(dup[3 + j], orig[3] / k, 1e-12);
  Vector oracle = dense_scores(D, D);
  EXPECT_LE((dup - oracle).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(LeverageExact, RankDeficientUsesPseudoinverse) {
  DenseMatrix D = DenseMatrix::Zero(4, 3);
  D(0, 0) = 1.0;
  D(1, 1) = 2.0;
  D(2, 0) = 1.0;
  D(3, 1) = 1.0;
  LeverageEstimate e = leverage_scores_exact(SparseMatrix::from_dense(D));
  EXPECT_TRUE(e.used_pseudoinverse);
  EXPECT_LE((e.values - dense_scores(D, D)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(LeverageExact, EntriesOfRangeVectorsAreBounded) {
  SeededRng rng(7);
  DenseMatrix D = test::random_tall(60, 6, 0.4, rng);
  Vector tau = leverage_scores_exact(D).values;
  for (int k = 0; k < 500; ++k) {
    Vector y = D * test::random_vector(6, rng);
    double n2 = y.squaredNorm();
    for (Index i = 0; i < 60; ++i) ASSERT_LE(y[i] * y[i], tau[i] * n2 + 1e-9);
  }
}

TEST(GeneralizedLeverage, SelfAndKernelBranches) {
  SeededRng rng(8);
  DenseMatrix D = test::random_tall(40, 5, 0.5, rng);
  SparseMatrix A = SparseMatrix::from_dense(D);
  EXPECT_LE((generalized_leverage_scores(A, A).values - leverage_scores_exact(A).values)
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
  DenseMatrix B = D;
  B.col(4).setZero();
  LeverageEstimate g = generalized_leverage_scores(A, SparseMatrix::from_dense(B));
  for (Index i = 0; i < 40; ++i) {
    if (D(i, 4) != 0.0) {
      EXPECT_TRUE(std::isinf(g.values[i]));
    } else {
      EXPECT_TRUE(std::isfinite(g.values[i]));
    }
  }
}

TEST(GeneralizedLeverage, RandomAgainstDenseFormula) {
  SeededRng rng(9);
  for (int k = 0; k < 5; ++k) {
    DenseMatrix DA = test::random_dense(50, 6, 0.5, rng);
    DenseMatrix DB = test::random_tall(30, 6, 0.5, rng);
    Vector got = generalized_leverage_scores(SparseMatrix::from_dense(DA),
                                             SparseMatrix::from_dense(DB))
                     .values;
    Vector want = dense_scores(DA, DB);
    for (Index i = 0; i < 50; ++i) EXPECT_NEAR(got[i], want[i], 1e-10 * std::max(1.0, want[i]));
  }
}

TEST(JlEstimate, SketchRowsFormula) {
  double expect = (4000.0 / 9.0) * (11.0 * std::log(20.0) + std::log(500.0 / 20.0));
  EXPECT_EQ(jl_sketch_rows(500, 20), static_cast<Index>(std::ceil(expect)));
}

TEST(JlEstimate, IdentityCase) {
  SparseMatrix I = SparseMatrix::identity(8);
  InverseOperator inv = InverseOperator::build(I);
  SeededRng rng(10);
  LeverageEstimate u = estimate_leverage_jl(I, I, inv, 4000, rng, 1e9);
  EXPECT_TRUE(u.is_overestimate);
  EXPECT_GE(u.values.minCoeff(), 0.9);
  EXPECT_LE(u.values.maxCoeff(), 2.0);
}

class JlEstimateRoutes : public ::testing::TestWithParam<double> {};

TEST_P(JlEstimateRoutes, OverestimatesWithinFactorTwo) {
  SeededRng rng(11);
  DenseMatrix D = test::random_tall(500, 20, 0.2, rng);
  SparseMatrix A = SparseMatrix::from_dense(D);
  // SA = every other row, scaled: a genuine generalized score.
  std::vector<Index> idx;
  for (Index i = 0; i < 500; i += 2) idx.push_back(i);
  SparseMatrix SA = A.select_rows(idx, std::vector<double>(idx.size(), 1.3));
  InverseOperator inv = InverseOperator::build(SA);
  Vector tau = generalized_leverage_scores(A, SA).values;
  Index r = jl_sketch_rows(500, 20);
  LeverageEstimate u = estimate_leverage_jl(A, SA, inv, r, rng, GetParam());
  int good = 0;
  for (Index i = 0; i < 500; ++i)
    if (u.values[i] >= tau[i] && u.values[i] <= 2.0 * tau[i]) ++good;
  EXPECT_GE(good, 495);
}

// 1e12 forces the explicit Gaussian sketch, 0 the equivalent-law shortcut.
INSTANTIATE_TEST_SUITE_P(LiteralAndShortcut, JlEstimateRoutes, ::testing::Values(1e12, 0.0));

TEST(SpectralApproximation, SquareInvertibleKeepsAllRows) {
  SeededRng rng(12);
  DenseMatrix D = test::random_tall(10, 10, 0.5, rng);
  SpectralResult s = spectral_approximation(SparseMatrix::from_dense(D), rng);
  ASSERT_EQ(s.sample.size(), 10);
  DenseMatrix K = gram(s.approx), K0 = D.transpose() * D;
  Vector mu = generalized_eigenvalues(K, K0);
  EXPECT_NEAR(mu.minCoeff(), mu.maxCoeff(), 1e-10);
}

TEST(SpectralApproximation, CertificateAndMonotoneRefinement) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SeededRng rng(seed, 13);
    DenseMatrix D = test::random_tall(3000, 6, 0.5, rng);
    SparseMatrix A = SparseMatrix::from_dense(D);
    SpectralResult s = spectral_approximation(A, rng);
    Vector mu = generalized_eigenvalues(gram(s.approx), gram(A));
    EXPECT_GE(mu.minCoeff(), 0.25) << "seed " << seed;
    EXPECT_LE(mu.maxCoeff(), 1.0 + 1e-6) << "seed " << seed;
    for (std::size_t k = 1; k < s.u_norms.size(); ++k)
      EXPECT_LE(s.u_norms[k], s.u_norms[k - 1] * (1.0 + 1e-12));
    Vector tau = leverage_scores_exact(A).values;
    int over = 0;
    for (Index i = 0; i < A.n_rows(); ++i)
      if (s.u_final.values[i] >= tau[i]) ++over;
    EXPECT_GE(over, static_cast<int>(0.99 * static_cast<double>(A.n_rows())));
  }
}

TEST(SpectralApproximation, UndersamplingRarelyOvershoots) {
  const Index n = 20000, d = 5;
  SeededRng rng(14);
  DenseMatrix D = test::random_tall(n, d, 0.6, rng);
  SparseMatrix A = SparseMatrix::from_dense(D);
  LeverageEstimate u = leverage_scores_exact(A);
  u.is_overestimate = true;
  DenseMatrix K = gram(A);
  double alpha = std::min(1.0, 12.0 * static_cast<double>(d) / u.sum);
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    RowSample S = sample_rows(u, 9.0 * alpha, 30.0, d, rng);
    S.scale(std::sqrt(3.0 * alpha / 4.0));
    Vector mu = generalized_eigenvalues(gram(S.apply(A)), K);
    if (mu.maxCoeff() <= 1.0) ++ok;
  }
  EXPECT_GE(ok, 95);
}

TEST(LewisWeights, NearTwoMatchesLeverage) {
  SeededRng rng(15);
  DenseMatrix D = test::random_tall(100, 5, 0.4, rng);
  SparseMatrix A = SparseMatrix::from_dense(D);
  LewisResult lw = lewis_weights(A, 2.0 + 1e-9, 20);
  Vector tau = leverage_scores_exact(A).values;
  EXPECT_LE((lw.weights - tau).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(LewisWeights, FixedPointAndSum) {
  SeededRng rng(16);
  DenseMatrix D = test::random_tall(300, 10, 0.3, rng);
  for (Index i = 0; i < 300; ++i) D(i, i % 10) += 1.0;  // no zero rows
  LewisResult lw = lewis_weights(SparseMatrix::from_dense(D), 4.0, 100);
  EXPECT_EQ(lw.iterations, 100);
  EXPECT_LE(lw.residual, 1e-8);
  EXPECT_NEAR(lw.weights.sum(), 10.0, 1e-6);
  EXPECT_FALSE(lw.floored);
  EXPECT_THROW(lewis_weights(SparseMatrix::from_dense(D), 2.0, 10), ContractViolation);
}

TEST(LewisWeights, UnderflowIsFloored) {
  DenseMatrix D = DenseMatrix::Zero(5, 2);
  D(0, 0) = 1.0;
  D(1, 1) = 1.0;
  D(2, 0) = 1e-200;
  D(3, 1) = 1.0;
  D(4, 0) = 1.0;
  LewisResult lw = lewis_weights(SparseMatrix::from_dense(D), 3.0, 30, 1e-12);
  EXPECT_TRUE(lw.floored);
  EXPECT_GE(lw.weights.minCoeff(), 1e-12);
}
