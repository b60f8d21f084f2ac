#include <Eigen/QR>
#include <cmath>

#include "pnreg/residual.hpp"

namespace pnreg {

Vector pnorm_gradient(double p, const Vector& r) {
  Vector g(r.size());
  for (Index i = 0; i < r.size(); ++i) {
    double a = std::abs(r[i]);
    if (a == 0.0) {
      g[i] = 0.0;
      continue;
    }
    if (p < 2.0) a = std::max(a, 1e-30);
    g[i] = p * std::pow(a, p - 2.0) * r[i];
  }
  return g;
}

Vector residual_gradient(double p, const Vector& x, const SparseMatrix& A, const Vector& b) {
  if (!(p > 1.0)) throw ContractViolation("residual_gradient: p must be > 1");
  return pnorm_gradient(p, matvec(A, x) - b);
}

double pnorm_pow(double p, const Vector& r) {
  double s = 0.0;
  for (Index i = 0; i < r.size(); ++i) s += std::pow(std::abs(r[i]), p);
  return s;
}

ResidualSpace ResidualSpace::null_space(SparseMatrix A, Vector g) {
  if (g.size() != A.n_rows()) throw DimensionMismatch("null_space: g length != rows");
  ResidualSpace s;
  s.form_ = Form::Null;
  s.A_ = std::move(A);
  s.g_ = std::move(g);
  s.C_ = DenseMatrix(0, s.A_.n_cols());
  return s;
}

ResidualSpace ResidualSpace::range_space(SparseMatrix A, DenseMatrix C_orth, Vector h) {
  if (h.size() != A.n_cols()) throw DimensionMismatch("range_space: h length != cols");
  if (C_orth.size() == 0) C_orth = DenseMatrix(0, A.n_cols());
  if (C_orth.cols() != A.n_cols()) throw DimensionMismatch("range_space: C columns");
  ResidualSpace s;
  s.form_ = Form::Range;
  s.A_ = std::move(A);
  s.C_ = std::move(C_orth);
  s.g_ = std::move(h);
  return s;
}

Vector ResidualSpace::gram_weights(const Vector& R) const {
  return form_ == Form::Null ? Vector(R.cwiseInverse()) : R;
}

double ResidualSpace::budget(const Vector& primal) const { return g_.dot(primal); }

Vector ResidualSpace::coords_of(const Vector& primal) const {
  return form_ == Form::Null ? primal : matvec(A_, primal);
}

ResidualSpace::Solution ResidualSpace::solve(const Vector& R, const Vector& c, double z,
                                             bool with_budget, const LinearMap& K_inv) const {
  if (R.size() != coords() || c.size() != coords())
    throw DimensionMismatch("ResidualSpace::solve: lengths");
  Vector W = gram_weights(R);
  LinearMap Kinv = K_inv;
  InverseOperator fresh;
  if (A_.n_cols() == 0) {
    Kinv = [](const Vector& v) { return v; };
  } else if (!Kinv) {
    fresh = InverseOperator::build(A_, W);
    Kinv = [&fresh](const Vector& v) { return fresh.apply(v); };
  }
  auto K = [&](const Vector& v) { return matvec_t(A_, W.cwiseProduct(matvec(A_, v))); };
  // One step of iterative refinement keeps the constraint residual at round-off.
  auto solveK = [&](const Vector& v) {
    Vector s = Kinv(v);
    s += Kinv(v - K(s));
    return s;
  };

  Solution out;
  if (form_ == Form::Null) {
    Vector Wc = W.cwiseProduct(c);
    Vector c_t = c - matvec(A_, solveK(matvec_t(A_, Wc)));
    Vector y = W.cwiseProduct(c_t);
    if (with_budget) {
      Vector Wg = W.cwiseProduct(g_);
      Vector g_t = g_ - matvec(A_, solveK(matvec_t(A_, Wg)));
      double denom = g_.dot(W.cwiseProduct(g_t));
      double full = g_.dot(Wg);
      if (!(denom > 1e-12 * full) || !(full > 0.0))
        throw Infeasible("budget vector lies in the constraint row space");
      double nu = (z - g_.dot(W.cwiseProduct(c_t))) / denom;
      y += nu * W.cwiseProduct(g_t);
    }
    out.primal = y;
    out.y = std::move(y);
    return out;
  }

  Vector a = solveK(matvec_t(A_, c));
  Index k = C_.rows() + (with_budget ? 1 : 0);
  Vector xi = a;
  if (k > 0) {
    DenseMatrix F(k, A_.n_cols());
    if (C_.rows()) F.topRows(C_.rows()) = C_;
    if (with_budget) F.row(k - 1) = g_.transpose();
    DenseMatrix B(A_.n_cols(), k);
    for (Index j = 0; j < k; ++j) B.col(j) = solveK(F.row(j).transpose());
    DenseMatrix S = F * B;
    S = 0.5 * (S + S.transpose());
    Vector rhs = -F * a;
    if (with_budget) rhs[k - 1] += z;
    // Budget and constraint rows can differ in scale by many orders.
    Vector dsc = S.diagonal().cwiseAbs().cwiseSqrt();
    for (Index j = 0; j < k; ++j) dsc[j] = dsc[j] > 0.0 ? 1.0 / dsc[j] : 1.0;
    S = dsc.asDiagonal() * S * dsc.asDiagonal();
    rhs = dsc.cwiseProduct(rhs);
    Eigen::ColPivHouseholderQR<DenseMatrix> qr(S);
    qr.setThreshold(1e-12);
    if (with_budget && qr.rank() < k) {
      // The budget is infeasible when h is (numerically) in the span of C.
      Eigen::ColPivHouseholderQR<DenseMatrix> qc(DenseMatrix(S.topLeftCorner(k - 1, k - 1)));
      qc.setThreshold(1e-12);
      if (qc.rank() == qr.rank()) throw Infeasible("budget direction lies in the row space of C");
    }
    Vector lam = dsc.cwiseProduct(Vector(qr.solve(rhs)));
    xi = a + B * lam;
  }
  out.y = matvec(A_, xi);
  out.primal = std::move(xi);
  return out;
}

Vector solve_weighted_lr(const SparseMatrix& A, const Vector& R, const Vector& g, double z,
                         const MaintainedInverse* inv) {
  if (R.size() != A.n_rows()) throw DimensionMismatch("solve_weighted_lr: R length");
  for (Index i = 0; i < R.size(); ++i)
    if (!(R[i] > 0.0)) throw ContractViolation("solve_weighted_lr: R must be positive");
  ResidualSpace space = ResidualSpace::null_space(A, g);
  if (A.n_cols() == 0) {
    Vector W = R.cwiseInverse();
    double den = g.dot(W.cwiseProduct(g));
    if (!(den > 0.0)) throw Infeasible("zero gradient");
    return z * W.cwiseProduct(g) / den;
  }
  if (!inv) return space.solve(R, Vector::Zero(R.size()), z, true).y;
  Vector W = R.cwiseInverse();
  LinearMap K_inv = [&](const Vector& v) {
    StoppingRule rule;
    rule.rel_tol = 1e-14;
    return richardson_weighted(*inv, W, v, rule).x;
  };
  return space.solve(R, Vector::Zero(R.size()), z, true, K_inv).y;
}

}  // namespace pnreg
