#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstddef>
#include <functional>
#include <vector>

#include "pnreg/errors.hpp"
#include "pnreg/rng.hpp"

namespace pnreg {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using EigenSparse = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

struct Triplet {
  Index row;
  Index col;
  double value;
};

// Compressed sparse row, immutable after construction. Column indices are
// strictly increasing within each row and explicit zeros are never stored.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  // Validates the arrays; throws StructuralError on any violation.
  SparseMatrix(Index n_rows, Index n_cols, std::vector<Index> row_offsets,
               std::vector<Index> col_indices, std::vector<double> values);

  static SparseMatrix identity(Index n);
  static SparseMatrix from_dense(const DenseMatrix& M);
  static SparseMatrix from_eigen(const EigenSparse& M);

  Index n_rows() const { return n_rows_; }
  Index n_cols() const { return n_cols_; }
  Index nnz() const { return static_cast<Index>(values_.size()); }
  Index row_nnz(Index i) const { return row_offsets_[i + 1] - row_offsets_[i]; }

  const std::vector<Index>& row_offsets() const { return row_offsets_; }
  const std::vector<Index>& col_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }

  double row_dot(Index i, const Vector& x) const;
  double row_norm2(Index i) const;  // squared 2-norm of row i
  Vector row_dense(Index i) const;

  DenseMatrix to_dense() const;
  EigenSparse to_eigen() const;
  SparseMatrix transpose() const;
  // diag(s) * A
  SparseMatrix scale_rows(const Vector& s) const;
  // Rows idx[k] scaled by scale[k] (scale may be empty for 1).
  SparseMatrix select_rows(const std::vector<Index>& idx,
                           const std::vector<double>& scale = {}) const;

 private:
  Index n_rows_ = 0;
  Index n_cols_ = 0;
  std::vector<Index> row_offsets_{0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

// Duplicates are summed, zeros pruned.
SparseMatrix csr_from_triplets(const std::vector<Triplet>& triplets, Index n_rows,
                               Index n_cols);

Vector matvec(const SparseMatrix& A, const Vector& x);
Vector matvec_t(const SparseMatrix& A, const Vector& y);
DenseMatrix matmat(const SparseMatrix& A, const DenseMatrix& X);
DenseMatrix matmat_t(const SparseMatrix& A, const DenseMatrix& Y);

// Dense Aᵀ diag(w) A. An empty w means identity weights.
DenseMatrix gram(const SparseMatrix& A, const Vector& w = Vector());
EigenSparse gram_sparse(const SparseMatrix& A, const Vector& w = Vector());

// Sum of the d largest per-row nonzero counts.
Index nnz_d(const SparseMatrix& A, Index d);

struct ConditionEstimate {
  double kappa = 0.0;           // of AᵀA
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  int iterations = 0;
};

// Power and inverse-power iteration on AᵀA.
ConditionEstimate condition_number_estimate(const SparseMatrix& A, int iters,
                                            SeededRng& rng);

// Worker count from PNORM_THREADS (default: hardware concurrency).
int thread_count();
// Splits [0, n) into contiguous chunks; falls back to serial for small n.
void parallel_for(Index n, const std::function<void(Index, Index)>& body,
                  Index grain = 4096);

}  // namespace pnreg
