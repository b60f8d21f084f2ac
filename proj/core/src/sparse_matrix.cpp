#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "pnreg/sparse_core.hpp"

namespace pnreg {

SparseMatrix::SparseMatrix(Index n_rows, Index n_cols, std::vector<Index> row_offsets,
                           std::vector<Index> col_indices, std::vector<double> values)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (n_rows_ < 0 || n_cols_ < 0) throw StructuralError("negative dimension");
  if (static_cast<Index>(row_offsets_.size()) != n_rows_ + 1)
    throw StructuralError("row_offsets must have n_rows+1 entries");
  if (row_offsets_.front() != 0 ||
      row_offsets_.back() != static_cast<Index>(values_.size()) ||
      col_indices_.size() != values_.size())
    throw StructuralError("row_offsets inconsistent with stored values");
  for (Index i = 0; i < n_rows_; ++i) {
    if (row_offsets_[i + 1] < row_offsets_[i])
      throw StructuralError("row_offsets decreasing at row " + std::to_string(i));
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      Index c = col_indices_[k];
      if (c < 0 || c >= n_cols_)
        throw StructuralError("column index out of range in row " + std::to_string(i));
      if (k > row_offsets_[i] && c <= col_indices_[k - 1])
        throw StructuralError("column indices not strictly increasing in row " +
                              std::to_string(i));
      if (values_[k] == 0.0)
        throw StructuralError("explicit zero stored in row " + std::to_string(i));
    }
  }
}

SparseMatrix SparseMatrix::identity(Index n) {
  std::vector<Index> off(n + 1), col(n);
  for (Index i = 0; i <= n; ++i) off[i] = i;
  for (Index i = 0; i < n; ++i) col[i] = i;
  return SparseMatrix(n, n, std::move(off), std::move(col), std::vector<double>(n, 1.0));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& M) {
  std::vector<Index> off{0}, col;
  std::vector<double> val;
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (M(i, j) != 0.0) {
        col.push_back(j);
        val.push_back(M(i, j));
      }
    }
    off.push_back(static_cast<Index>(val.size()));
  }
  return SparseMatrix(M.rows(), M.cols(), std::move(off), std::move(col), std::move(val));
}

SparseMatrix SparseMatrix::from_eigen(const EigenSparse& M) {
  std::vector<Index> off{0}, col;
  std::vector<double> val;
  for (Index i = 0; i < M.outerSize(); ++i) {
    for (EigenSparse::InnerIterator it(M, i); it; ++it) {
      if (it.value() != 0.0) {
        col.push_back(it.col());
        val.push_back(it.value());
      }
    }
    off.push_back(static_cast<Index>(val.size()));
  }
  return SparseMatrix(M.rows(), M.cols(), std::move(off), std::move(col), std::move(val));
}

double SparseMatrix::row_dot(Index i, const Vector& x) const {
  double s = 0.0;
  for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
    s += values_[k] * x[col_indices_[k]];
  return s;
}

double SparseMatrix::row_norm2(Index i) const {
  double s = 0.0;
  for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) s += values_[k] * values_[k];
  return s;
}

Vector SparseMatrix::row_dense(Index i) const {
  Vector r = Vector::Zero(n_cols_);
  for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) r[col_indices_[k]] = values_[k];
  return r;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix M = DenseMatrix::Zero(n_rows_, n_cols_);
  for (Index i = 0; i < n_rows_; ++i)
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      M(i, col_indices_[k]) = values_[k];
  return M;
}

EigenSparse SparseMatrix::to_eigen() const {
  std::vector<Eigen::Triplet<double, Index>> t;
  t.reserve(values_.size());
  for (Index i = 0; i < n_rows_; ++i)
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      t.emplace_back(i, col_indices_[k], values_[k]);
  EigenSparse M(n_rows_, n_cols_);
  M.setFromTriplets(t.begin(), t.end());
  return M;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Index> off(n_cols_ + 1, 0);
  for (Index c : col_indices_) ++off[c + 1];
  for (Index j = 0; j < n_cols_; ++j) off[j + 1] += off[j];
  std::vector<Index> pos(off.begin(), off.end() - 1);
  std::vector<Index> col(values_.size());
  std::vector<double> val(values_.size());
  for (Index i = 0; i < n_rows_; ++i) {
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      Index dst = pos[col_indices_[k]]++;
      col[dst] = i;
      val[dst] = values_[k];
    }
  }
  return SparseMatrix(n_cols_, n_rows_, std::move(off), std::move(col), std::move(val));
}

SparseMatrix SparseMatrix::scale_rows(const Vector& s) const {
  if (s.size() != n_rows_) throw DimensionMismatch("scale_rows: length != n_rows");
  std::vector<Index> off{0}, col;
  std::vector<double> val;
  col.reserve(values_.size());
  val.reserve(values_.size());
  for (Index i = 0; i < n_rows_; ++i) {
    if (s[i] != 0.0) {
      for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
        double v = s[i] * values_[k];
        if (v == 0.0) continue;
        col.push_back(col_indices_[k]);
        val.push_back(v);
      }
    }
    off.push_back(static_cast<Index>(val.size()));
  }
  return SparseMatrix(n_rows_, n_cols_, std::move(off), std::move(col), std::move(val));
}

SparseMatrix SparseMatrix::select_rows(const std::vector<Index>& idx,
                                       const std::vector<double>& scale) const {
  if (!scale.empty() && scale.size() != idx.size())
    throw DimensionMismatch("select_rows: scale length != index count");
  std::vector<Index> off{0}, col;
  std::vector<double> val;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    Index i = idx[r];
    if (i < 0 || i >= n_rows_) throw StructuralError("select_rows: row out of range");
    double s = scale.empty() ? 1.0 : scale[r];
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      double v = s * values_[k];
      if (v == 0.0) continue;
      col.push_back(col_indices_[k]);
      val.push_back(v);
    }
    off.push_back(static_cast<Index>(val.size()));
  }
  return SparseMatrix(static_cast<Index>(idx.size()), n_cols_, std::move(off),
                      std::move(col), std::move(val));
}

SparseMatrix csr_from_triplets(const std::vector<Triplet>& triplets, Index n_rows,
                               Index n_cols) {
  if (n_rows < 0 || n_cols < 0) throw StructuralError("negative dimension");
  std::vector<Triplet> t(triplets);
  for (const auto& e : t) {
    if (e.row < 0 || e.row >= n_rows || e.col < 0 || e.col >= n_cols)
      throw StructuralError("triplet (" + std::to_string(e.row) + ", " +
                            std::to_string(e.col) + ") out of range");
  }
  std::stable_sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<Index> off(n_rows + 1, 0), col;
  std::vector<double> val;
  std::size_t k = 0;
  for (Index i = 0; i < n_rows; ++i) {
    while (k < t.size() && t[k].row == i) {
      Index c = t[k].col;
      double s = 0.0;
      while (k < t.size() && t[k].row == i && t[k].col == c) s += t[k++].value;
      if (s != 0.0) {
        col.push_back(c);
        val.push_back(s);
      }
    }
    off[i + 1] = static_cast<Index>(val.size());
  }
  return SparseMatrix(n_rows, n_cols, std::move(off), std::move(col), std::move(val));
}

int thread_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("PNORM_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) return std::min(cap, hw);
  }
  return hw;
}

void parallel_for(Index n, const std::function<void(Index, Index)>& body, Index grain) {
  int workers = thread_count();
  if (workers <= 1 || n < 2 * grain) {
    body(0, n);
    return;
  }
  Index chunks = std::min<Index>(workers, (n + grain - 1) / grain);
  std::vector<std::thread> pool;
  Index step = (n + chunks - 1) / chunks;
  for (Index c = 1; c < chunks; ++c) {
    Index lo = c * step, hi = std::min(n, lo + step);
    if (lo < hi) pool.emplace_back(body, lo, hi);
  }
  body(0, std::min(n, step));
  for (auto& th : pool) th.join();
}

Vector matvec(const SparseMatrix& A, const Vector& x) {
  if (x.size() != A.n_cols()) throw DimensionMismatch("matvec: x length != n_cols");
  Vector y(A.n_rows());
  parallel_for(A.n_rows(), [&](Index lo, Index hi) {
    for (Index i = lo; i < hi; ++i) y[i] = A.row_dot(i, x);
  });
  return y;
}

Vector matvec_t(const SparseMatrix& A, const Vector& y) {
  if (y.size() != A.n_rows()) throw DimensionMismatch("matvec_t: y length != n_rows");
  Vector x = Vector::Zero(A.n_cols());
  const auto& off = A.row_offsets();
  const auto& col = A.col_indices();
  const auto& val = A.values();
  for (Index i = 0; i < A.n_rows(); ++i) {
    double yi = y[i];
    if (yi == 0.0) continue;
    for (Index k = off[i]; k < off[i + 1]; ++k) x[col[k]] += val[k] * yi;
  }
  return x;
}

DenseMatrix matmat(const SparseMatrix& A, const DenseMatrix& X) {
  if (X.rows() != A.n_cols()) throw DimensionMismatch("matmat: inner dimension");
  DenseMatrix Y = DenseMatrix::Zero(A.n_rows(), X.cols());
  const auto& off = A.row_offsets();
  const auto& col = A.col_indices();
  const auto& val = A.values();
  parallel_for(A.n_rows(), [&](Index lo, Index hi) {
    for (Index i = lo; i < hi; ++i)
      for (Index k = off[i]; k < off[i + 1]; ++k) Y.row(i) += val[k] * X.row(col[k]);
  }, 1024);
  return Y;
}

DenseMatrix matmat_t(const SparseMatrix& A, const DenseMatrix& Y) {
  if (Y.rows() != A.n_rows()) throw DimensionMismatch("matmat_t: inner dimension");
  DenseMatrix X = DenseMatrix::Zero(A.n_cols(), Y.cols());
  const auto& off = A.row_offsets();
  const auto& col = A.col_indices();
  const auto& val = A.values();
  for (Index i = 0; i < A.n_rows(); ++i)
    for (Index k = off[i]; k < off[i + 1]; ++k) X.row(col[k]) += val[k] * Y.row(i);
  return X;
}

DenseMatrix gram(const SparseMatrix& A, const Vector& w) {
  if (w.size() != 0 && w.size() != A.n_rows()) throw DimensionMismatch("gram: weight length");
  Index d = A.n_cols();
  DenseMatrix G = DenseMatrix::Zero(d, d);
  const auto& off = A.row_offsets();
  const auto& col = A.col_indices();
  const auto& val = A.values();
  for (Index i = 0; i < A.n_rows(); ++i) {
    double wi = w.size() ? w[i] : 1.0;
    if (wi == 0.0) continue;
    for (Index a = off[i]; a < off[i + 1]; ++a) {
      double va = wi * val[a];
      for (Index b = a; b < off[i + 1]; ++b) G(col[a], col[b]) += va * val[b];
    }
  }
  G.triangularView<Eigen::StrictlyLower>() = G.transpose();
  return G;
}

EigenSparse gram_sparse(const SparseMatrix& A, const Vector& w) {
  if (w.size() != 0 && w.size() != A.n_rows()) throw DimensionMismatch("gram: weight length");
  EigenSparse E = A.to_eigen();
  if (w.size()) {
    EigenSparse WE = w.asDiagonal() * E;
    return EigenSparse(E.transpose() * WE);
  }
  return EigenSparse(E.transpose() * E);
}

Index nnz_d(const SparseMatrix& A, Index d) {
  if (d < 1 || d > A.n_rows()) throw ContractViolation("nnz_d: d out of range");
  std::vector<Index> counts(A.n_rows());
  for (Index i = 0; i < A.n_rows(); ++i) counts[i] = A.row_nnz(i);
  std::nth_element(counts.begin(), counts.begin() + (d - 1), counts.end(),
                   std::greater<Index>());
  Index s = 0;
  for (Index k = 0; k < d; ++k) s += counts[k];
  return s;
}

ConditionEstimate condition_number_estimate(const SparseMatrix& A, int iters,
                                            SeededRng& rng) {
  if (A.nnz() == 0) throw ContractViolation("condition estimate of a zero matrix");
  Index d = A.n_cols();
  auto apply_gram = [&](const Vector& v) { return matvec_t(A, matvec(A, v)); };
  Vector v(d);
  for (Index j = 0; j < d; ++j) v[j] = rng.normal();
  v.normalize();
  ConditionEstimate est;
  double lmax = 0.0;
  for (int k = 0; k < iters; ++k) {
    Vector w = apply_gram(v);
    lmax = v.dot(w);
    double nw = w.norm();
    if (nw == 0.0) break;
    v = w / nw;
  }
  est.lambda_max = lmax;

  EigenSparse K = gram_sparse(A);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.compute(Eigen::SparseMatrix<double>(K));
  bool ok = ldlt.info() == Eigen::Success &&
            ldlt.vectorD().minCoeff() > 1e-14 * std::max(lmax, 1e-300);
  if (!ok) throw RankDeficient("AᵀA is singular to working precision");
  for (Index j = 0; j < d; ++j) v[j] = rng.normal();
  v.normalize();
  double lmin_inv = 0.0;
  for (int k = 0; k < iters; ++k) {
    Vector w = ldlt.solve(v);
    lmin_inv = v.dot(w);
    double nw = w.norm();
    if (nw == 0.0) break;
    v = w / nw;
  }
  est.lambda_min = 1.0 / lmin_inv;
  if (!(est.lambda_min > 1e-14 * lmax)) throw RankDeficient("AᵀA is numerically singular");
  est.kappa = est.lambda_max / est.lambda_min;
  est.iterations = iters;
  return est;
}

}  // namespace pnreg
