#include <gtest/gtest.h>

#include <cmath>

#include "pnreg/oracle.hpp"
#include "test_support.hpp"

using namespace pnreg;
using oracle::Mat;
using oracle::Vec;

TEST(Pseudoinverse, PenroseIdentities) {
  SeededRng rng(1);
  Mat A = test::random_dense(9, 4, 0.7, rng);
  A.col(3) = A.col(0) + A.col(1);  // rank deficient
  Mat P = oracle::pseudoinverse(A);
  EXPECT_LE(test::max_abs(A * P * A - A), 1e-12);
  EXPECT_LE(test::max_abs(P * A * P - P), 1e-12);
  EXPECT_LE(test::max_abs((A * P).transpose() - A * P), 1e-12);
  EXPECT_LE(test::max_abs((P * A).transpose() - P * A), 1e-12);
}

TEST(KktSolve, ClosedFormWithoutConstraints) {
  SeededRng rng(2);
  Vec R = (test::random_vector(7, rng).array().abs() + 0.2).matrix();
  Vec g = test::random_vector(7, rng);
  oracle::KktResult k = oracle::kkt_solve(R, Mat(7, 0), g, 3.0);
  Vec W = R.cwiseInverse();
  Vec want = 3.0 * W.cwiseProduct(g) / g.dot(W.cwiseProduct(g));
  EXPECT_LE((k.delta - want).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(k.objective, 0.5 * want.dot(R.cwiseProduct(want)), 1e-12);
  EXPECT_EQ(k.tag, "ok");
}

TEST(KktSolve, DegenerateBudget) {
  SeededRng rng(3);
  Mat A = test::random_tall(8, 2, 0.8, rng);
  Vec g = A.col(0);
  oracle::KktResult k = oracle::kkt_solve(Vec::Ones(8), A, g, 1.0);
  EXPECT_EQ(k.tag, "degenerate");
}

TEST(PnormOracle, QuadraticIsLeastSquares) {
  SeededRng rng(4);
  Mat A = test::random_tall(30, 4, 0.6, rng);
  Vec b = test::random_vector(30, rng);
  oracle::OracleResult o = oracle::pnorm_oracle(A, b, Mat(), Vec(), 2.0);
  Vec ls = A.colPivHouseholderQr().solve(b);
  EXPECT_TRUE(o.converged);
  EXPECT_LE((o.x - ls).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PnormOracle, StationarityAndConstraints) {
  SeededRng rng(5);
  Mat A = test::random_tall(40, 5, 0.6, rng);
  Vec b = test::random_vector(40, rng);
  Mat C = Mat::Zero(5, 5);
  C.row(0) = test::random_vector(5, rng).transpose();
  Vec v = Vec::Zero(5);
  v[0] = 0.3;
  for (double p : {1.5, 3.0, 6.0}) {
    oracle::OracleResult o = oracle::pnorm_oracle(A, b, C, v, p);
    ASSERT_TRUE(o.converged) << p;
    EXPECT_LE((C * o.x - v).cwiseAbs().maxCoeff(), 1e-10);
    Vec r = A * o.x - b;
    Vec g(40);
    for (Index i = 0; i < 40; ++i) g[i] = p * std::pow(std::abs(r[i]), p - 1.0) * (r[i] < 0 ? -1 : 1);
    // Aᵀg must lie in span(Cᵀ).
    Vec grad = A.transpose() * g;
    Vec c = C.row(0).transpose();
    Vec proj = grad - c * (c.dot(grad) / c.squaredNorm());
    EXPECT_LE(proj.norm(), 1e-6 * std::max(1.0, grad.norm())) << p;
    EXPECT_NEAR(o.value, r.array().abs().pow(p).sum(), 1e-10 * o.value);
  }
}

TEST(MinNormOracle, QuadraticIsPseudoinverse) {
  SeededRng rng(6);
  Mat A = test::random_tall(20, 3, 0.6, rng);
  Vec b = test::random_vector(3, rng);
  oracle::OracleResult o = oracle::min_norm_oracle(A, b, 2.0);
  Vec want = oracle::pseudoinverse(A.transpose()) * b;
  EXPECT_LE((o.x - want).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MinNormOracle, FeasibleAndStationary) {
  SeededRng rng(7);
  Mat A = test::random_tall(25, 3, 0.6, rng);
  Vec b = test::random_vector(3, rng);
  for (double p : {1.5, 4.0}) {
    oracle::OracleResult o = oracle::min_norm_oracle(A, b, p);
    ASSERT_TRUE(o.converged);
    EXPECT_LE((A.transpose() * o.x - b).cwiseAbs().maxCoeff(), 1e-10);
    Vec g = o.x.array().abs().pow(p - 1.0) * o.x.array().sign();
    Vec coef = A.colPivHouseholderQr().solve(g);
    EXPECT_LE((A * coef - g).norm(), 1e-6 * g.norm()) << p;
  }
}

TEST(GammaMinOracle, QuadraticClosedForm) {
  SeededRng rng(8);
  const Index n = 12;
  Vec g = test::random_vector(n, rng);
  Vec omega = (test::random_vector(n, rng).array().abs() + 0.5).matrix();
  oracle::OracleResult o = oracle::gamma_min_oracle(Mat(n, 0), g, 2.0, Vec::Ones(n), omega, 2.0);
  double den = g.dot(omega.cwiseInverse().cwiseProduct(g));
  EXPECT_NEAR(o.value, 4.0 / den, 1e-10 * o.value);
}

TEST(FiniteDifference, PolynomialIsExact) {
  auto f = [](const Vec& x) { return x[0] * x[0] * x[0] + 2.0 * x[0] * x[1] - x[1] * x[1]; };
  Vec x(2);
  x << 0.7, -1.3;
  oracle::FdResult fd = oracle::finite_difference(f, x, 1e-2);
  EXPECT_NEAR(fd.gradient[0], 3 * 0.49 + 2 * -1.3, 1e-9);
  EXPECT_NEAR(fd.gradient[1], 2 * 0.7 + 2.6, 1e-9);
}
