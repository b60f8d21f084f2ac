#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "pnreg/sparse_core.hpp"
#include "test_support.hpp"

using namespace pnreg;

TEST(CsrFromTriplets, IdentityCase) {
  SparseMatrix A = csr_from_triplets({{0, 0, 1.0}, {1, 1, 1.0}}, 2, 2);
  EXPECT_EQ(A.to_dense(), DenseMatrix::Identity(2, 2));
  EXPECT_EQ(A.nnz(), 2);
}

TEST(CsrFromTriplets, DuplicatesAreSummed) {
  SparseMatrix A = csr_from_triplets({{0, 0, 1.0}, {0, 0, 2.0}}, 1, 1);
  ASSERT_EQ(A.nnz(), 1);
  EXPECT_EQ(A.values()[0], 3.0);
}

TEST(CsrFromTriplets, CancellingDuplicatesArePruned) {
  SparseMatrix A = csr_from_triplets({{0, 1, 2.0}, {0, 1, -2.0}, {1, 0, 0.0}}, 2, 2);
  EXPECT_EQ(A.nnz(), 0);
  EXPECT_EQ(A.row_offsets(), (std::vector<Index>{0, 0, 0}));
}

TEST(CsrFromTriplets, OutOfRangeIsStructuralError) {
  EXPECT_THROW(csr_from_triplets({{2, 0, 1.0}}, 2, 2), StructuralError);
  EXPECT_THROW(csr_from_triplets({{0, -1, 1.0}}, 2, 2), StructuralError);
}

TEST(CsrFromTriplets, RandomMatchesDenseConstruction) {
  SeededRng rng(11);
  std::vector<Triplet> trips;
  DenseMatrix D = DenseMatrix::Zero(100, 10);
  for (int k = 0; k < 400; ++k) {
    Index i = static_cast<Index>(rng.uniform() * 100), j = static_cast<Index>(rng.uniform() * 10);
    double v = rng.normal();
    trips.push_back({i, j, v});
    D(i, j) += v;
  }
  SparseMatrix A = csr_from_triplets(trips, 100, 10);
  Vector x = test::random_vector(10, rng);
  EXPECT_LE((matvec(A, x) - D * x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SparseMatrix, ConstructorRejectsBadArrays) {
  EXPECT_THROW(SparseMatrix(2, 2, {0, 1}, {0}, {1.0}), StructuralError);          // offsets length
  EXPECT_THROW(SparseMatrix(1, 3, {0, 2}, {2, 1}, {1.0, 1.0}), StructuralError);  // unsorted
  EXPECT_THROW(SparseMatrix(1, 3, {0, 2}, {1, 1}, {1.0, 1.0}), StructuralError);  // repeated
  EXPECT_THROW(SparseMatrix(1, 2, {0, 1}, {0}, {0.0}), StructuralError);          // explicit zero
  EXPECT_THROW(SparseMatrix(1, 2, {0, 1}, {5}, {1.0}), StructuralError);          // column range
  EXPECT_THROW(SparseMatrix(2, 2, {0, 2, 1}, {0, 1}, {1.0, 1.0}), StructuralError);
}

TEST(SparseMatrix, InvariantsHoldAfterRandomConstruction) {
  SeededRng rng(12);
  SparseMatrix A = SparseMatrix::from_dense(test::random_dense(40, 13, 0.3, rng));
  const auto& off = A.row_offsets();
  ASSERT_EQ(static_cast<Index>(off.size()), A.n_rows() + 1);
  EXPECT_EQ(off.back(), A.nnz());
  for (Index i = 0; i < A.n_rows(); ++i) {
    EXPECT_LE(off[i], off[i + 1]);
    for (Index a = off[i]; a < off[i + 1]; ++a) {
      EXPECT_NE(A.values()[a], 0.0);
      EXPECT_GE(A.col_indices()[a], 0);
      EXPECT_LT(A.col_indices()[a], A.n_cols());
      if (a > off[i]) EXPECT_LT(A.col_indices()[a - 1], A.col_indices()[a]);
    }
  }
}

TEST(Matvec, IdentityAndZero) {
  SeededRng rng(1);
  Vector x = test::random_vector(7, rng);
  EXPECT_EQ(matvec(SparseMatrix::identity(7), x), x);
  SparseMatrix Z = csr_from_triplets({}, 5, 7);
  EXPECT_EQ(matvec(Z, x), Vector::Zero(5));
  EXPECT_EQ(matvec_t(Z, Vector::Ones(5)), Vector::Zero(7));
}

TEST(Matvec, RandomAgainstDense) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SeededRng rng(seed, 3);
    DenseMatrix D = test::random_dense(60, 17, 0.2, rng);
    SparseMatrix A = SparseMatrix::from_dense(D);
    Vector x = test::random_vector(17, rng), y = test::random_vector(60, rng);
    double sx = std::max(1.0, (D.cwiseAbs() * x.cwiseAbs()).maxCoeff());
    double sy = std::max(1.0, (D.transpose().cwiseAbs() * y.cwiseAbs()).maxCoeff());
    EXPECT_LE((matvec(A, x) - D * x).cwiseAbs().maxCoeff(), 1e-12 * sx);
    EXPECT_LE((matvec_t(A, y) - D.transpose() * y).cwiseAbs().maxCoeff(), 1e-12 * sy);
    DenseMatrix X = test::random_dense(17, 3, 1.0, rng);
    EXPECT_LE(test::max_abs(matmat(A, X) - D * X), 1e-12 * std::max(1.0, test::max_abs(D * X)));
  }
}

TEST(Matvec, DimensionMismatch) {
  SparseMatrix A = SparseMatrix::identity(3);
  EXPECT_THROW(matvec(A, Vector::Ones(4)), DimensionMismatch);
  EXPECT_THROW(matvec_t(A, Vector::Ones(2)), DimensionMismatch);
}

TEST(SparseMatrix, TransposeScaleSelect) {
  SeededRng rng(5);
  DenseMatrix D = test::random_dense(9, 4, 0.5, rng);
  SparseMatrix A = SparseMatrix::from_dense(D);
  EXPECT_EQ(A.transpose().to_dense(), D.transpose());
  Vector s = test::random_vector(9, rng);
  EXPECT_LE(test::max_abs(A.scale_rows(s).to_dense() - s.asDiagonal() * D), 1e-15);
  SparseMatrix S = A.select_rows({1, 4, 8}, {2.0, 1.0, -1.0});
  ASSERT_EQ(S.n_rows(), 3);
  EXPECT_EQ(S.row_dense(0), 2.0 * D.row(1).transpose());
  EXPECT_EQ(S.row_dense(2), -D.row(8).transpose());
}

TEST(Gram, MatchesDenseWeighted) {
  SeededRng rng(6);
  DenseMatrix D = test::random_dense(30, 6, 0.4, rng);
  SparseMatrix A = SparseMatrix::from_dense(D);
  Vector w = test::random_vector(30, rng).cwiseAbs();
  DenseMatrix K = D.transpose() * w.asDiagonal() * D;
  EXPECT_LE(test::max_abs(gram(A, w) - K), 1e-12 * test::max_abs(K));
  EXPECT_LE(test::max_abs(DenseMatrix(gram_sparse(A, w)) - K), 1e-12 * test::max_abs(K));
  EXPECT_LE(test::max_abs(gram(A) - D.transpose() * D), 1e-12 * test::max_abs(D.transpose() * D));
}

TEST(NnzD, Examples) {
  EXPECT_EQ(nnz_d(SparseMatrix::identity(5), 3), 3);
  EXPECT_EQ(nnz_d(SparseMatrix::from_dense(DenseMatrix::Ones(4, 4)), 2), 8);
  EXPECT_THROW(nnz_d(SparseMatrix::identity(5), 0), ContractViolation);
  EXPECT_THROW(nnz_d(SparseMatrix::identity(5), 6), ContractViolation);
}

TEST(NnzD, ExhaustiveTopDAndMonotone) {
  SeededRng rng(8);
  SparseMatrix A = SparseMatrix::from_dense(test::random_dense(10, 8, 0.4, rng));
  const Index n = A.n_rows();
  Index prev = 0;
  for (Index d = 1; d <= n; ++d) {
    Index best = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<Index>(__builtin_popcount(mask)) != d) continue;
      Index s = 0;
      for (Index i = 0; i < n; ++i)
        if (mask & (1u << i)) s += A.row_nnz(i);
      best = std::max(best, s);
    }
    Index got = nnz_d(A, d);
    EXPECT_EQ(got, best) << "d=" << d;
    EXPECT_GE(got, prev);
    prev = got;
  }
  EXPECT_EQ(nnz_d(A, n), A.nnz());
}

TEST(ConditionEstimate, AnalyticCases) {
  SeededRng rng(2);
  ConditionEstimate e = condition_number_estimate(SparseMatrix::identity(6), 50, rng);
  EXPECT_GE(e.kappa, 1.0);
  EXPECT_LE(e.kappa, 1.01);
  DenseMatrix D = DenseMatrix::Zero(2, 2);
  D(0, 0) = 1.0;
  D(1, 1) = 10.0;
  e = condition_number_estimate(SparseMatrix::from_dense(D), 50, rng);
  EXPECT_GE(e.kappa, 99.0);
  EXPECT_LE(e.kappa, 101.0);
}

TEST(ConditionEstimate, RandomWithinFivePercentOfSvd) {
  SeededRng rng(3);
  DenseMatrix D = test::random_tall(80, 8, 0.4, rng);
  Eigen::JacobiSVD<DenseMatrix> svd(D);
  double s_max = svd.singularValues().maxCoeff(), s_min = svd.singularValues().minCoeff();
  double kappa = (s_max * s_max) / (s_min * s_min);
  ConditionEstimate e = condition_number_estimate(SparseMatrix::from_dense(D), 300, rng);
  EXPECT_NEAR(e.kappa / kappa, 1.0, 0.05);
}

TEST(ConditionEstimate, RankDeficientSignalled) {
  DenseMatrix D = DenseMatrix::Zero(3, 2);
  D(0, 0) = 1.0;
  D(1, 0) = 2.0;
  SeededRng rng(4);
  EXPECT_THROW(condition_number_estimate(SparseMatrix::from_dense(D), 30, rng), RankDeficient);
}

TEST(SeededRng, SameSeedSameStream) {
  SeededRng a(99, 4), b(99, 4), c(99, 5);
  bool differs = false;
  for (int k = 0; k < 1000; ++k) {
    std::uint64_t x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
  SeededRng d(7), e(7);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(d.normal(), e.normal());
  EXPECT_EQ(d.uniform_at(12345), SeededRng(7).uniform_at(12345));
}

TEST(SeededRng, UniformMomentsAndRange) {
  SeededRng rng(17);
  double s = 0.0, s2 = 0.0;
  const int N = 200000;
  for (int k = 0; k < N; ++k) {
    double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / N, 0.5, 0.005);
  EXPECT_NEAR(s2 / N - (s / N) * (s / N), 1.0 / 12.0, 0.002);
}

TEST(SeededRng, NormalMoments) {
  SeededRng rng(18);
  double s = 0.0, s2 = 0.0;
  const int N = 200000;
  for (int k = 0; k < N; ++k) {
    double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / N, 0.0, 0.01);
  EXPECT_NEAR(s2 / N, 1.0, 0.02);
}

TEST(ParallelFor, CoversRangeOnce) {
  std::vector<int> hits(10007, 0);
  parallel_for(static_cast<Index>(hits.size()), [&](Index lo, Index hi) {
    for (Index i = lo; i < hi; ++i) ++hits[i];
  }, 100);
  EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}
