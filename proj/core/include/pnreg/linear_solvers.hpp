#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "pnreg/sparse_core.hpp"

namespace pnreg {

struct BuildReport {
  bool dense = true;        // dense LLT vs sparse LDLT
  Index dim = 0;
  Index source_rows = 0;
  Index source_nnz = 0;
  mutable Index applies = 0;
};

// Applies (AᵀWA)⁻¹ through a direct factorization. The stated error bound is
// what the factorization honours at the condition numbers the solvers meet.
class InverseOperator {
 public:
  InverseOperator() = default;

  static constexpr double kDefaultTol = 1e-10;
  static constexpr Index kDenseLimit = 400;

  static InverseOperator build(const SparseMatrix& A, const Vector& W,
                               double tol = kDefaultTol);
  static InverseOperator build(const SparseMatrix& A, double tol = kDefaultTol);
  // Inverse of an explicit SPD matrix.
  static InverseOperator from_matrix(const DenseMatrix& K, double tol = kDefaultTol);

  Vector apply(const Vector& b) const;
  DenseMatrix apply(const DenseMatrix& B) const;
  DenseMatrix dense_inverse() const;

  Index dim() const { return report_.dim; }
  double error_bound() const { return tol_; }
  const BuildReport& report() const { return report_; }
  bool valid() const { return dense_ || sparse_; }

 private:
  struct SparseFactor;
  std::shared_ptr<const Eigen::LLT<DenseMatrix>> dense_;
  std::shared_ptr<const SparseFactor> sparse_;
  double tol_ = kDefaultTol;
  BuildReport report_;
};

struct UpdateRecord {
  long iteration = 0;
  Index rank = 0;
  bool rebuild = false;
};

// Y + Q ≈ (Aᵀ diag(ŵ) A)⁻¹ where Y is a factorization frozen at the last
// rebuild and Q collects Woodbury corrections for every later change of ŵ.
class MaintainedInverse {
 public:
  MaintainedInverse() = default;
  MaintainedInverse(SparseMatrix A, const Vector& weights,
                    double tol = InverseOperator::kDefaultTol);

  Vector apply(const Vector& b) const;
  DenseMatrix apply(const DenseMatrix& B) const;
  DenseMatrix dense_inverse() const;

  // Q ← Q − ZU·C·(I + UᵀZU·C)⁻¹·UᵀZ with Z = Y + Q, i.e. the Woodbury inverse
  // of (Z⁻¹ + UCUᵀ). Returns false, leaving the state untouched, when the
  // inner system is singular or its condition estimate exceeds 1e12.
  bool smw_update(const DenseMatrix& U, const DenseMatrix& C, long iteration = 0);

  // Moves ŵ_j to new_weights[k] for j = rows[k] with one rank-|rows| update.
  bool update_weights(const std::vector<Index>& rows, const std::vector<double>& new_weights,
                      long iteration = 0);

  void rebuild(const Vector& weights, long iteration = 0);
  // Rebuilds when iteration is a multiple of period (period <= 0 never).
  bool rebuild_if_due(long iteration, long period, const Vector& weights);

  const Vector& reference_weights() const { return ref_; }
  const Vector& base_weights() const { return base_; }
  const SparseMatrix& matrix() const { return A_; }
  const InverseOperator& base() const { return Y_; }
  const DenseMatrix& correction() const { return Q_; }
  const std::vector<UpdateRecord>& log() const { return log_; }
  double error_bound() const { return Y_.error_bound(); }
  Index rebuilds() const { return rebuilds_; }
  Index dim() const { return A_.n_cols(); }

 private:
  SparseMatrix A_;
  InverseOperator Y_;
  DenseMatrix Q_;
  Vector ref_;
  Vector base_;
  double tol_ = InverseOperator::kDefaultTol;
  std::vector<UpdateRecord> log_;
  Index rebuilds_ = 0;
};

using LinearMap = std::function<Vector(const Vector&)>;

struct StoppingRule {
  double rel_tol = 1e-10;  // on ‖rhs − Kx‖₂ / ‖rhs‖₂
  int max_iter = -1;       // -1: ⌈2λ·ln(1/rel_tol)⌉ + 100
};

struct RichardsonResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;  // relative residual per iterate
};

// x ← x − M⁻¹(Kx − rhs). Requires K ⪯ M ⪯ λK for the stated rate.
RichardsonResult richardson_solve(const LinearMap& K, const Vector& rhs,
                                  const LinearMap& M_inv, double lambda,
                                  const StoppingRule& rule = {}, const Vector& x0 = Vector());

// Least squares AᵀAx = Aᵀb.
RichardsonResult richardson_solve(const SparseMatrix& A, const Vector& b,
                                  const InverseOperator& precond, double lambda,
                                  const StoppingRule& rule = {});

// Solves (Aᵀ diag(w) A)x = rhs with the maintained preconditioner built for
// weights ŵ. M = (Y+Q)/b with a = min w/ŵ, b = max w/ŵ, λ = (b/a)·(1+ε)/(1−ε).
RichardsonResult richardson_weighted(const MaintainedInverse& precond, const Vector& w,
                                     const Vector& rhs, const StoppingRule& rule = {});

// Eigenvalues μ of K₁v = μK₂v (K₂ SPD), ascending.
Vector generalized_eigenvalues(const DenseMatrix& K1, const DenseMatrix& K2);

}  // namespace pnreg
