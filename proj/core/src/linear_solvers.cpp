#include "pnreg/linear_solvers.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

namespace pnreg {

struct InverseOperator::SparseFactor {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

namespace {

void check_weights(const Vector& W) {
  for (Index i = 0; i < W.size(); ++i)
    if (!(W[i] > 0.0) || !std::isfinite(W[i]))
      throw ContractViolation("inverse operator weights must be positive and finite");
}

constexpr double kPivotFloor = 1e-13;

}  // namespace

InverseOperator InverseOperator::build(const SparseMatrix& A, const Vector& W, double tol) {
  if (W.size() != A.n_rows()) throw DimensionMismatch("weights length != rows of A");
  check_weights(W);
  InverseOperator op;
  op.tol_ = tol;
  op.report_.dim = A.n_cols();
  op.report_.source_rows = A.n_rows();
  op.report_.source_nnz = A.nnz();
  if (A.n_cols() <= kDenseLimit) {
    DenseMatrix K = gram(A, W);
    auto llt = std::make_shared<Eigen::LLT<DenseMatrix>>(K);
    double kmax = K.diagonal().maxCoeff();
    if (llt->info() != Eigen::Success || !(kmax > 0.0) ||
        llt->matrixLLT().diagonal().array().square().minCoeff() <= kPivotFloor * kmax)
      throw RankDeficient("AᵀWA is singular to working precision");
    op.dense_ = std::move(llt);
    op.report_.dense = true;
  } else {
    auto f = std::make_shared<SparseFactor>();
    Eigen::SparseMatrix<double> K(gram_sparse(A, W));
    f->ldlt.compute(K);
    double kmax = 0.0;
    for (Index j = 0; j < K.outerSize(); ++j) kmax = std::max(kmax, K.coeff(j, j));
    if (f->ldlt.info() != Eigen::Success || !(kmax > 0.0) ||
        f->ldlt.vectorD().minCoeff() <= kPivotFloor * kmax)
      throw RankDeficient("AᵀWA is singular to working precision");
    op.sparse_ = std::move(f);
    op.report_.dense = false;
  }
  return op;
}

InverseOperator InverseOperator::build(const SparseMatrix& A, double tol) {
  return build(A, Vector::Ones(A.n_rows()), tol);
}

InverseOperator InverseOperator::from_matrix(const DenseMatrix& K, double tol) {
  if (K.rows() != K.cols()) throw DimensionMismatch("from_matrix: K not square");
  InverseOperator op;
  op.tol_ = tol;
  op.report_.dim = K.rows();
  auto llt = std::make_shared<Eigen::LLT<DenseMatrix>>(K);
  double kmax = K.diagonal().maxCoeff();
  if (llt->info() != Eigen::Success || !(kmax > 0.0) ||
      llt->matrixLLT().diagonal().array().square().minCoeff() <= kPivotFloor * kmax)
    throw RankDeficient("matrix is singular to working precision");
  op.dense_ = std::move(llt);
  return op;
}

Vector InverseOperator::apply(const Vector& b) const {
  if (b.size() != dim()) throw DimensionMismatch("InverseOperator::apply: length");
  ++report_.applies;
  if (dense_) return dense_->solve(b);
  return sparse_->ldlt.solve(b);
}

DenseMatrix InverseOperator::apply(const DenseMatrix& B) const {
  if (B.rows() != dim()) throw DimensionMismatch("InverseOperator::apply: rows");
  ++report_.applies;
  if (dense_) return dense_->solve(B);
  return sparse_->ldlt.solve(B);
}

DenseMatrix InverseOperator::dense_inverse() const {
  DenseMatrix Z = apply(DenseMatrix(DenseMatrix::Identity(dim(), dim())));
  return 0.5 * (Z + Z.transpose());
}

MaintainedInverse::MaintainedInverse(SparseMatrix A, const Vector& weights, double tol)
    : A_(std::move(A)), tol_(tol) {
  rebuild(weights, 0);
}

Vector MaintainedInverse::apply(const Vector& b) const { return Y_.apply(b) + Q_ * b; }

DenseMatrix MaintainedInverse::apply(const DenseMatrix& B) const {
  return Y_.apply(B) + Q_ * B;
}

DenseMatrix MaintainedInverse::dense_inverse() const { return Y_.dense_inverse() + Q_; }

bool MaintainedInverse::smw_update(const DenseMatrix& U, const DenseMatrix& C,
                                   long iteration) {
  if (U.rows() != dim() || C.rows() != U.cols() || C.cols() != U.cols())
    throw DimensionMismatch("smw_update: shapes");
  Index r = U.cols();
  if (r == 0 || U.isZero(0.0) || C.isZero(0.0)) return true;
  DenseMatrix ZU = apply(U);
  DenseMatrix inner = DenseMatrix::Identity(r, r) + U.transpose() * ZU * C;
  Eigen::JacobiSVD<DenseMatrix> svd(inner);
  const auto& s = svd.singularValues();
  if (!(s(r - 1) > 0.0) || s(0) / s(r - 1) > 1e12 || !std::isfinite(s(0))) return false;
  DenseMatrix T = C * inner.partialPivLu().solve(ZU.transpose());
  DenseMatrix dQ = ZU * T;
  Q_ -= 0.5 * (dQ + dQ.transpose());
  log_.push_back({iteration, r, false});
  return true;
}

bool MaintainedInverse::update_weights(const std::vector<Index>& rows,
                                       const std::vector<double>& new_weights,
                                       long iteration) {
  if (rows.size() != new_weights.size()) throw DimensionMismatch("update_weights: lengths");
  if (rows.empty()) return true;
  Index r = static_cast<Index>(rows.size());
  DenseMatrix U = DenseMatrix::Zero(dim(), r);
  DenseMatrix C = DenseMatrix::Zero(r, r);
  for (Index k = 0; k < r; ++k) {
    Index j = rows[k];
    if (!(new_weights[k] > 0.0)) throw ContractViolation("update_weights: weight <= 0");
    U.col(k) = A_.row_dense(j);
    C(k, k) = new_weights[k] - ref_[j];
  }
  if (!smw_update(U, C, iteration)) return false;
  for (Index k = 0; k < r; ++k) ref_[rows[k]] = new_weights[k];
  return true;
}

void MaintainedInverse::rebuild(const Vector& weights, long iteration) {
  Y_ = InverseOperator::build(A_, weights, tol_);
  Q_ = DenseMatrix::Zero(A_.n_cols(), A_.n_cols());
  ref_ = weights;
  base_ = weights;
  ++rebuilds_;
  log_.push_back({iteration, A_.n_cols(), true});
}

bool MaintainedInverse::rebuild_if_due(long iteration, long period, const Vector& weights) {
  if (period <= 0 || iteration % period != 0) return false;
  rebuild(weights, iteration);
  return true;
}

RichardsonResult richardson_solve(const LinearMap& K, const Vector& rhs,
                                  const LinearMap& M_inv, double lambda,
                                  const StoppingRule& rule, const Vector& x0) {
  if (!(lambda >= 1.0)) throw ContractViolation("richardson: lambda must be >= 1");
  RichardsonResult res;
  res.x = x0.size() ? x0 : Vector::Zero(rhs.size());
  double nb = rhs.norm();
  if (nb == 0.0) {
    res.x.setZero();
    res.converged = true;
    res.residual_history.push_back(0.0);
    return res;
  }
  int cap = rule.max_iter >= 0
                ? rule.max_iter
                : static_cast<int>(std::ceil(2.0 * lambda * std::log(1.0 / rule.rel_tol))) + 100;
  Vector resid = K(res.x) - rhs;
  double rel = resid.norm() / nb;
  res.residual_history.push_back(rel);
  while (rel > rule.rel_tol && res.iterations < cap) {
    res.x -= M_inv(resid);
    ++res.iterations;
    resid = K(res.x) - rhs;
    rel = resid.norm() / nb;
    res.residual_history.push_back(rel);
    if (!std::isfinite(rel)) break;
  }
  res.converged = rel <= rule.rel_tol;
  return res;
}

RichardsonResult richardson_solve(const SparseMatrix& A, const Vector& b,
                                  const InverseOperator& precond, double lambda,
                                  const StoppingRule& rule) {
  if (b.size() != A.n_rows()) throw DimensionMismatch("richardson: b length");
  Vector rhs = matvec_t(A, b);
  return richardson_solve([&](const Vector& x) { return matvec_t(A, matvec(A, x)); }, rhs,
                          [&](const Vector& v) { return precond.apply(v); }, lambda, rule);
}

RichardsonResult richardson_weighted(const MaintainedInverse& precond, const Vector& w,
                                     const Vector& rhs, const StoppingRule& rule) {
  const SparseMatrix& A = precond.matrix();
  if (w.size() != A.n_rows()) throw DimensionMismatch("richardson_weighted: weights");
  Vector ratio = w.cwiseQuotient(precond.reference_weights());
  double a = ratio.minCoeff(), b = ratio.maxCoeff();
  double eps = std::min(precond.error_bound(), 0.5);
  double lambda = (b / a) * (1.0 + eps) / (1.0 - eps);
  double scale = b * (1.0 + eps);
  return richardson_solve(
      [&](const Vector& x) { return matvec_t(A, w.cwiseProduct(matvec(A, x))); }, rhs,
      [&](const Vector& v) { return Vector(precond.apply(v) / scale); }, lambda, rule);
}

Vector generalized_eigenvalues(const DenseMatrix& K1, const DenseMatrix& K2) {
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> es(K1, K2, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw RankDeficient("generalized eigenproblem failed");
  return es.eigenvalues();
}

}  // namespace pnreg
