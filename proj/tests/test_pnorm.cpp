#include <gtest/gtest.h>

#include <cmath>

#include "pnreg/gamma.hpp"
#include "pnreg/oracle.hpp"
#include "pnreg/pnorm.hpp"
#include "pnreg_tools/instances.hpp"
#include "test_support.hpp"

using namespace pnreg;

namespace {

RegressionProblem p1_problem(Index n, Index d, double p, std::uint64_t seed) {
  SeededRng rng(seed, 41);
  RegressionProblem prob;
  prob.form = ProblemForm::P1;
  prob.A = SparseMatrix::from_dense(test::random_tall(n, d, 0.4, rng));
  prob.b = test::random_vector(n, rng);
  prob.p = p;
  return prob;
}

RegressionProblem p2_problem(Index n, Index d, double p, std::uint64_t seed) {
  SeededRng rng(seed, 43);
  RegressionProblem prob;
  prob.form = ProblemForm::P2;
  prob.A = SparseMatrix::from_dense(test::random_tall(n, d, 0.4, rng));
  prob.b = test::random_vector(d, rng);
  prob.p = p;
  return prob;
}

}  // namespace

TEST(InitialPoint, IdentityConstraintPinsSolution) {
  RegressionProblem prob = p1_problem(30, 4, 3.0, 1);
  prob.C = DenseMatrix::Identity(4, 4);
  SeededRng rng(2);
  prob.v = test::random_vector(4, rng);
  Vector x0 = initial_point(prob);
  EXPECT_LE((x0 - prob.v).cwiseAbs().maxCoeff(), 1e-12);
  SolveReport rep = solve(prob, SolverConfig{});
  EXPECT_LE((rep.solution - prob.v).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(InitialPoint, HolderBoundForLargeP) {
  for (double p : {2.5, 3.0, 4.0}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      RegressionProblem prob = p1_problem(40, 3, p, seed);
      DenseMatrix Ad = prob.A.to_dense();
      oracle::OracleResult o = oracle::pnorm_oracle(Ad, prob.b, DenseMatrix(), Vector(), p);
      ASSERT_TRUE(o.converged);
      double ratio = objective_value(prob, initial_point(prob)) / o.value;
      EXPECT_LE(ratio, std::pow(40.0, (p - 2.0) / 2.0));
      EXPECT_GE(ratio, 1.0 - 1e-9);
    }
  }
}

TEST(InitialPoint, InfeasibleConstraintsFail) {
  RegressionProblem prob = p1_problem(20, 3, 3.0, 3);
  prob.C = DenseMatrix::Zero(3, 3);
  prob.C(0, 0) = 1.0;
  prob.v = Vector::Ones(3);
  EXPECT_THROW(initial_point(prob), Infeasible);
}

TEST(SolveP1, PTwoMatchesLeastSquares) {
  RegressionProblem prob = p1_problem(50, 5, 2.0, 4);
  SolveReport rep = solve_p1(prob, SolverConfig{});
  DenseMatrix Ad = prob.A.to_dense();
  Vector ref = oracle::pseudoinverse(Ad) * prob.b;
  EXPECT_LE((rep.solution - ref).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(rep.status, "exact");
}

TEST(SolveP1, SubQuadraticMatchesOracle) {
  RegressionProblem prob = p1_problem(256, 8, 1.5, 5);
  SolveReport rep = solve_p1(prob, SolverConfig{});
  oracle::OracleResult o =
      oracle::pnorm_oracle(prob.A.to_dense(), prob.b, DenseMatrix(), Vector(), 1.5);
  ASSERT_TRUE(o.converged);
  EXPECT_LE(rep.objective, (1.0 + 1e-6) * o.value);
  EXPECT_NEAR(rep.objective, objective_value(prob, rep.solution), 1e-12 * rep.objective);
  EXPECT_GE(rep.gap, 0.0);
}

TEST(SolveP1, ObjectiveMonotoneAndFeasible) {
  RegressionProblem prob = p1_problem(120, 6, 4.0, 6);
  SeededRng rng(7);
  prob.C = DenseMatrix::Zero(6, 6);
  prob.C.row(0) = test::random_vector(6, rng).transpose();
  prob.C.row(1) = test::random_vector(6, rng).transpose();
  prob.v = prob.C * test::random_vector(6, rng);
  int events = 0;
  SolverConfig cfg;
  cfg.method = Method::Residual;
  cfg.trace = [&](const TraceEvent&) { ++events; };
  SolveReport rep = solve_p1(prob, cfg);
  EXPECT_GT(events, 0);
  for (std::size_t k = 1; k < rep.objective_history.size(); ++k)
    EXPECT_LE(rep.objective_history[k], rep.objective_history[k - 1] * (1.0 + 1e-12));
  EXPECT_LE(constraint_violation(prob, rep.solution), 1e-8);
  oracle::OracleResult o = oracle::pnorm_oracle(prob.A.to_dense(), prob.b, prob.C, prob.v, 4.0);
  ASSERT_TRUE(o.converged);
  EXPECT_LE(rep.objective, (1.0 + 1e-6) * o.value);
  EXPECT_LE(rep.lower_bound, o.value * (1.0 + 1e-9));
}

TEST(SolveP2, IdentityIsUniquelyFeasible) {
  SeededRng rng(8);
  RegressionProblem prob;
  prob.form = ProblemForm::P2;
  prob.A = SparseMatrix::identity(6);
  prob.b = test::random_vector(6, rng);
  for (double p : {1.5, 3.0, 6.0}) {
    prob.p = p;
    SolveReport rep = solve_p2(prob, SolverConfig{});
    EXPECT_LE((rep.solution - prob.b).cwiseAbs().maxCoeff(), 1e-10) << p;
  }
}

TEST(SolveP2, ZeroRightHandSide) {
  RegressionProblem prob = p2_problem(30, 3, 3.0, 9);
  prob.b.setZero();
  SolveReport rep = solve_p2(prob, SolverConfig{});
  EXPECT_EQ(rep.solution, Vector::Zero(30));
}

TEST(SolveP2, PTwoIsMinimumNorm) {
  RegressionProblem prob = p2_problem(40, 5, 2.0, 10);
  DenseMatrix Ad = prob.A.to_dense();
  SolveReport rep = solve_p2(prob, SolverConfig{});
  Vector ref = oracle::pseudoinverse(Ad.transpose()) * prob.b;
  EXPECT_LE((rep.solution - ref).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SolveP2, QuarticMatchesOracle) {
  RegressionProblem prob = p2_problem(128, 6, 4.0, 11);
  SolveReport rep = solve_p2(prob, SolverConfig{});
  oracle::OracleResult o = oracle::min_norm_oracle(prob.A.to_dense(), prob.b, 4.0);
  ASSERT_TRUE(o.converged);
  EXPECT_LE(rep.objective, (1.0 + 1e-6) * o.value);
  EXPECT_LE(rep.constraint_residual, 1e-8);
  EXPECT_LE(rep.lower_bound, o.value * (1.0 + 1e-9));
  EXPECT_GE(rep.gap, 0.0);
}

TEST(RefinementStep, SolvesDefiningEquation) {
  for (double p : {1.2, 1.5, 2.0, 3.0, 6.0}) {
    double lam = refinement_step(p);
    EXPECT_GT(lam, 0.0);
    EXPECT_LE(lam, 1.0);
    EXPECT_NEAR(std::pow(lam, std::min(1.0, p - 1.0)), (p - 1.0) / (p * std::pow(4.0, p)),
                1e-14);
  }
}

TEST(DWeightMatrix, Examples) {
  SeededRng rng(12);
  DenseMatrix Ad = test::random_dense(15, 3, 0.6, rng);
  SparseMatrix A = SparseMatrix::from_dense(Ad);
  Vector x = test::random_vector(3, rng);
  Vector exact = Ad * x;
  double p = 3.0, t = 0.7;
  Vector D = d_weight_matrix(p, x, A, exact, t, 0.3);
  double c = (p - 1.0) / 2.0 * std::pow(t, 0.5 * p * (2.0 - 4.0 / p));
  for (Index i = 0; i < 15; ++i) EXPECT_NEAR(D[i], c, 1e-14 * c);
  Vector b = test::random_vector(15, rng);
  Vector D2 = d_weight_matrix(2.0, x, A, b, t, 0.3);
  for (Index i = 0; i < 15; ++i) EXPECT_DOUBLE_EQ(D2[i], 0.5);
  EXPECT_THROW(d_weight_matrix(p, x, A, b, 0.0, 0.3), ContractViolation);
}

TEST(DWeightMatrix, SpotValuesMatchFormula) {
  SeededRng rng(13);
  DenseMatrix Ad = test::random_dense(25, 4, 0.6, rng);
  SparseMatrix A = SparseMatrix::from_dense(Ad);
  for (double p : {1.5, 2.5, 5.0}) {
    Vector x = test::random_vector(4, rng), b = test::random_vector(25, rng);
    double t = 0.2 + rng.uniform(), gam = 0.1 * rng.uniform();
    Vector D = d_weight_matrix(p, x, A, b, t, gam);
    Vector r = Ad * x - b;
    double sgn = p > 2.0 ? 1.0 : (p < 2.0 ? -1.0 : 0.0);
    for (Index i = 0; i < 25; ++i) {
      double base = std::max(std::pow(t, p / 2.0), std::pow(std::abs(r[i]), p / 2.0) - sgn * gam);
      double want = (p - 1.0) / 2.0 * std::pow(base, 2.0 - 4.0 / p);
      EXPECT_NEAR(D[i], want, 1e-12 * want);
    }
  }
}

TEST(Homotopy, TrivialCases) {
  RegressionProblem prob = p1_problem(60, 4, 2.25, 14);
  prob.b.setZero();
  SolveReport rep = homotopy_solve(prob, SolverConfig{});
  EXPECT_EQ(rep.solution, Vector::Zero(4));

  RegressionProblem q = p1_problem(60, 4, 2.0, 15);
  rep = homotopy_solve(q, SolverConfig{});
  Vector ref = oracle::pseudoinverse(q.A.to_dense()) * q.b;
  EXPECT_LE((rep.solution - ref).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Homotopy, AdditiveGapNearTwo) {
  const double p = 2.25;
  SeededRng rng(16);
  RegressionProblem prob;
  prob.A = tools::random_sparse(512, 16, 4, rng);
  prob.b = tools::gaussian_vector(512, rng);
  prob.p = p;
  SolverConfig cfg;
  cfg.method = Method::Homotopy;
  cfg.eps = 1e-4;
  SolveReport rep = homotopy_solve(prob, cfg);
  oracle::OracleResult o =
      oracle::pnorm_oracle(prob.A.to_dense(), prob.b, DenseMatrix(), Vector(), p);
  ASSERT_TRUE(o.converged);
  double eps_abs = 1e-4 * std::pow(prob.b.norm(), p);
  EXPECT_LE(rep.objective, o.value + eps_abs);
  EXPECT_NE(rep.status, "phase-unconverged");
  // For p ≥ 2 the phase objective γ_p(t_{k+1}, r⁽ᵏ⁾) never climbs.
  ASSERT_FALSE(rep.phase_values.empty());
  for (std::size_t k = 1; k < rep.phase_values.size(); ++k)
    EXPECT_LE(rep.phase_values[k], rep.phase_values[k - 1] * (1.0 + 1e-9)) << k;
}

TEST(TallLeastSquares, MatchesNormalEquations) {
  SeededRng rng(17);
  SparseMatrix A = tools::random_sparse(2000, 10, 3, rng);
  Vector b = tools::gaussian_vector(2000, rng);
  SeededRng srng(18);
  LeastSquaresResult ls = tall_least_squares(A, b, srng);
  EXPECT_TRUE(ls.converged);
  EXPECT_LT(ls.approx_rows, 2000);
  DenseMatrix Ad = A.to_dense();
  Vector ref = (Ad.transpose() * Ad).ldlt().solve(Ad.transpose() * b);
  EXPECT_LE((ls.x - ref).norm(), 1e-9 * ref.norm());
}

TEST(SmoothedQNorm, ZeroThresholdsIsPureLewis) {
  SeededRng rng(19);
  SparseMatrix A = tools::random_sparse(800, 4, 2, rng);
  SeededRng s1(20), s2(20);
  RowSample a = sample_smoothed_qnorm(A, Vector::Zero(800), 3.0, s1);
  RowSample b = sample_smoothed_qnorm(A, Vector::Zero(800), 3.0, s2);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_GT(a.indices.size(), 0u);
  for (std::size_t k = 0; k < a.indices.size(); ++k)
    EXPECT_NEAR(a.weights[k], std::pow(a.probabilities[k], -1.0 / 3.0), 1e-12);
}

TEST(SmoothedQNorm, QuadraticPreservedAtQTwo) {
  SeededRng rng(21);
  const Index n = 3000, d = 4;
  SparseMatrix A = tools::random_sparse(n, d, 2, rng);
  DenseMatrix Ad = A.to_dense();
  Vector t = Vector::Ones(n);
  SeededRng srng(22);
  RowSample S = sample_smoothed_qnorm(A, t, 2.0, srng);
  DenseMatrix SAd = S.apply(A).to_dense();
  Vector mu = generalized_eigenvalues(SAd.transpose() * SAd, Ad.transpose() * Ad);
  EXPECT_GE(mu.minCoeff(), 0.5);
  EXPECT_LE(mu.maxCoeff(), 1.5);
}

TEST(SmoothedQNorm, CombinedObjectivePreservedAtQThree) {
  const double q = 3.0;
  const Index n = 2000, d = 4;
  int good_seeds = 0;
  const int seeds = 40;
  for (int seed = 0; seed < seeds; ++seed) {
    SeededRng rng(static_cast<std::uint64_t>(seed), 23);
    SparseMatrix A = tools::random_sparse(n, d, 2, rng);
    DenseMatrix Ad = A.to_dense();
    Vector t = tools::log_uniform_thresholds(n, 2.0, rng);
    RowSample S = sample_smoothed_qnorm(A, t, q, rng);
    bool ok = true;
    for (int k = 0; k < 500 && ok; ++k) {
      Vector y = Ad * test::random_vector(d, rng);
      double full = 0.0, est = 0.0;
      for (Index i = 0; i < n; ++i)
        full += std::pow(t[i], q - 2.0) * y[i] * y[i] + std::pow(std::abs(y[i]), q);
      for (std::size_t j = 0; j < S.indices.size(); ++j) {
        Index i = S.indices[j];
        double w = S.weights[j];
        double yt = w * y[i], tt = w * t[i];
        est += std::pow(tt, q - 2.0) * yt * yt + std::pow(std::abs(yt), q);
      }
      double ratio = est / full;
      ok = ratio >= 0.5 && ratio <= 1.5;
    }
    good_seeds += ok;
  }
  EXPECT_GE(good_seeds, seeds - 1);
}
