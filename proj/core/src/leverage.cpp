#include "pnreg/leverage.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace pnreg {

SparseMatrix RowSample::apply(const SparseMatrix& A) const { return A.select_rows(indices, weights); }

Vector RowSample::dense_weights() const {
  Vector w = Vector::Zero(n_source);
  for (std::size_t k = 0; k < indices.size(); ++k) w[indices[k]] = weights[k];
  return w;
}

void RowSample::scale(double s) {
  for (double& w : weights) w *= s;
}

LeverageEstimate make_estimate(Vector values, bool overestimate) {
  LeverageEstimate e;
  e.sum = values.sum();
  e.values = std::move(values);
  e.is_overestimate = overestimate;
  return e;
}

double sample_log_d(Index d) { return std::max(1.0, std::log(static_cast<double>(d))); }

RowSample sample_rows(const LeverageEstimate& u, double alpha, double c, Index d,
                      SeededRng& rng) {
  if (!(alpha > 0.0) || !(c > 0.0)) throw ContractViolation("sample_rows: alpha, c must be > 0");
  SeededRng draws = rng.split();
  double scale = alpha * c * sample_log_d(d);
  RowSample s;
  s.kind = SampleKind::Spectral;
  s.n_source = u.values.size();
  for (Index i = 0; i < u.values.size(); ++i) {
    double ui = u.values[i];
    double p = std::isinf(ui) ? 1.0 : std::min(1.0, scale * ui);
    if (p <= 0.0) continue;
    if (p >= 1.0 || draws.uniform_at(static_cast<std::uint64_t>(i)) < p) {
      s.indices.push_back(i);
      s.probabilities.push_back(p);
      s.weights.push_back(1.0 / std::sqrt(p));
    }
  }
  return s;
}

namespace {

// F with FFᵀ = K⁺; returns whether the pseudoinverse branch was taken.
bool pinv_factor(const DenseMatrix& K, DenseMatrix& F) {
  Index d = K.rows();
  double kmax = d ? K.diagonal().maxCoeff() : 0.0;
  if (d == 0 || !(kmax > 0.0)) {
    F = DenseMatrix::Zero(d, 0);
    return true;
  }
  Eigen::LLT<DenseMatrix> llt(K);
  if (llt.info() == Eigen::Success &&
      llt.matrixLLT().diagonal().array().square().minCoeff() > 1e-12 * kmax) {
    F = llt.matrixU().solve(DenseMatrix(DenseMatrix::Identity(d, d)));
    return false;
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(K);
  const Vector& lam = es.eigenvalues();
  double cut = 1e-12 * std::max(lam.maxCoeff(), 0.0);
  std::vector<Index> keep;
  for (Index j = 0; j < d; ++j)
    if (lam[j] > cut) keep.push_back(j);
  F.resize(d, static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k)
    F.col(static_cast<Index>(k)) = es.eigenvectors().col(keep[k]) / std::sqrt(lam[keep[k]]);
  return true;
}

}  // namespace

LeverageEstimate leverage_scores_exact(const SparseMatrix& A) {
  DenseMatrix F;
  bool pinv = pinv_factor(gram(A), F);
  DenseMatrix AF = matmat(A, F);
  LeverageEstimate e = make_estimate(AF.rowwise().squaredNorm());
  e.used_pseudoinverse = pinv;
  return e;
}

LeverageEstimate leverage_scores_exact(const DenseMatrix& A) {
  DenseMatrix F;
  bool pinv = pinv_factor(A.transpose() * A, F);
  LeverageEstimate e = make_estimate((A * F).rowwise().squaredNorm());
  e.used_pseudoinverse = pinv;
  return e;
}

LeverageEstimate generalized_leverage_scores(const SparseMatrix& A, const SparseMatrix& B) {
  if (A.n_cols() != B.n_cols()) throw DimensionMismatch("generalized leverage: column counts");
  Index d = A.n_cols();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(gram(B));
  const Vector& lam = es.eigenvalues();
  double cut = 1e-12 * std::max(d ? lam.maxCoeff() : 0.0, 0.0);
  std::vector<Index> range, null;
  for (Index j = 0; j < d; ++j) (lam[j] > cut && lam[j] > 0.0 ? range : null).push_back(j);
  DenseMatrix F(d, static_cast<Index>(range.size())), N(d, static_cast<Index>(null.size()));
  for (std::size_t k = 0; k < range.size(); ++k)
    F.col(static_cast<Index>(k)) = es.eigenvectors().col(range[k]) / std::sqrt(lam[range[k]]);
  for (std::size_t k = 0; k < null.size(); ++k)
    N.col(static_cast<Index>(k)) = es.eigenvectors().col(null[k]);
  DenseMatrix AF = matmat(A, F);
  DenseMatrix AN = matmat(A, N);
  Vector tau(A.n_rows());
  for (Index i = 0; i < A.n_rows(); ++i) {
    double an = std::sqrt(A.row_norm2(i));
    if (N.cols() > 0 && AN.row(i).norm() > 1e-9 * an)
      tau[i] = std::numeric_limits<double>::infinity();
    else
      tau[i] = AF.row(i).squaredNorm();
  }
  LeverageEstimate e = make_estimate(tau);
  e.used_pseudoinverse = !null.empty();
  return e;
}

Index jl_sketch_rows(Index n, Index d) {
  double ld = std::log(static_cast<double>(std::max<Index>(d, 1)));
  double lnd = std::log(std::max(1.0, static_cast<double>(n) / static_cast<double>(d)));
  return std::max<Index>(1, static_cast<Index>(std::ceil((4000.0 / 9.0) * (11.0 * ld + lnd))));
}

LeverageEstimate estimate_leverage_jl(const SparseMatrix& A, const SparseMatrix& SA,
                                      const InverseOperator& inv, Index r, SeededRng& rng,
                                      double literal_budget) {
  if (r < 1) throw ContractViolation("estimate_leverage_jl: r must be >= 1");
  if (SA.n_cols() != A.n_cols() || inv.dim() != A.n_cols())
    throw DimensionMismatch("estimate_leverage_jl: column counts");
  Index d = A.n_cols(), m = SA.n_rows();
  double n = static_cast<double>(A.n_rows());
  double n9 = std::pow(n, 9.0);
  double factor = (n9 > 1.0 ? 1.0 + 1.0 / (n9 - 1.0) : 1.0) / (0.9 * static_cast<double>(r));

  DenseMatrix MtM;
  if (static_cast<double>(r) * static_cast<double>(m) <= literal_budget) {
    DenseMatrix Gt(m, r);
    for (Index j = 0; j < r; ++j)
      for (Index i = 0; i < m; ++i) Gt(i, j) = rng.normal();
    DenseMatrix SAtGt = matmat_t(SA, Gt);     // (G·SA)ᵀ, d×r
    DenseMatrix Mt = inv.apply(SAtGt);        // Mᵀ = inv·(SA)ᵀGᵀ
    MtM = Mt * Mt.transpose();
  } else {
    DenseMatrix K = gram(SA);
    Eigen::LLT<DenseMatrix> llt(K);
    if (llt.info() != Eigen::Success) throw RankDeficient("sketch Gram matrix not SPD");
    DenseMatrix H = DenseMatrix::Zero(d, d);
    Vector g(d);
    for (Index j = 0; j < r; ++j) {
      for (Index k = 0; k < d; ++k) g[k] = rng.normal();
      H.selfadjointView<Eigen::Lower>().rankUpdate(g);
    }
    H = H.selfadjointView<Eigen::Lower>();
    DenseMatrix B = inv.apply(DenseMatrix(llt.matrixL()));  // inv·L
    MtM = B * H * B.transpose();
  }
  MtM = 0.5 * (MtM + MtM.transpose());

  Vector u(A.n_rows());
  const auto& off = A.row_offsets();
  const auto& col = A.col_indices();
  const auto& val = A.values();
  for (Index i = 0; i < A.n_rows(); ++i) {
    double s = 0.0;
    for (Index a = off[i]; a < off[i + 1]; ++a) {
      double t = 0.0;
      for (Index b = off[i]; b < off[i + 1]; ++b) t += MtM(col[a], col[b]) * val[b];
      s += val[a] * t;
    }
    u[i] = factor * std::max(s, 0.0);
  }
  return make_estimate(u, true);
}

SpectralResult spectral_approximation(const SparseMatrix& A, SeededRng& rng,
                                      const SpectralConfig& config) {
  Index n = A.n_rows(), d = A.n_cols();
  if (n < d) throw ContractViolation("spectral_approximation: needs n >= d");
  SpectralResult out;
  LeverageEstimate u = make_estimate(Vector::Ones(n), true);
  out.u_norms.push_back(u.sum);
  int rounds = config.rounds >= 0
                   ? config.rounds
                   : static_cast<int>(std::max(
                         0.0, std::ceil(std::log2(static_cast<double>(n) / static_cast<double>(d)))));
  Index r = config.sketch_rows > 0 ? config.sketch_rows : jl_sketch_rows(n, d);

  for (int i = 0; i < rounds; ++i) {
    double alpha = std::min(1.0, 12.0 * static_cast<double>(d) / u.sum);
    for (int attempt = 0;; ++attempt) {
      RowSample S = sample_rows(u, 9.0 * alpha, config.c, d, rng);
      S.scale(std::sqrt(3.0 * alpha / 4.0));
      SparseMatrix SA = S.apply(A);
      try {
        InverseOperator inv = InverseOperator::build(SA);
        LeverageEstimate v = estimate_leverage_jl(A, SA, inv, r, rng, config.literal_budget);
        u = make_estimate(v.values.cwiseMin(u.values), true);
        break;
      } catch (const RankDeficient&) {
        if (attempt >= config.max_retries)
          throw RankDeficient("spectral_approximation: intermediate sample stayed rank-deficient");
        alpha *= 2.0;
        ++out.retries;
      }
    }
    out.u_norms.push_back(u.sum);
  }

  double boost = 1.0;
  for (int attempt = 0;; ++attempt) {
    RowSample S = sample_rows(u, 4.0 * boost, config.c, d, rng);
    S.scale(1.0 / std::sqrt(1.5));
    SparseMatrix SA = S.apply(A);
    bool ok = true;
    try {
      InverseOperator::build(SA);
    } catch (const RankDeficient&) {
      ok = false;
    }
    if (ok || attempt >= config.max_retries) {
      out.approx = std::move(SA);
      out.sample = std::move(S);
      break;
    }
    boost *= 2.0;
    ++out.retries;
  }
  out.u_final = std::move(u);
  return out;
}

LewisResult lewis_weights(const SparseMatrix& A, double p, int iters, double floor) {
  if (!(p > 2.0)) throw ContractViolation("lewis_weights: p must be > 2");
  Index n = A.n_rows(), d = A.n_cols();
  LewisResult res;
  Vector w = Vector::Constant(n, static_cast<double>(d) / static_cast<double>(n));
  double expo = 0.5 - 1.0 / p;
  auto step = [&](const Vector& cur) {
    Vector s = cur.array().pow(expo);
    return leverage_scores_exact(A.scale_rows(s)).values;
  };
  for (int k = 0; k < iters; ++k) {
    Vector next = step(w);
    for (Index i = 0; i < n; ++i) {
      if (next[i] < floor) {
        next[i] = floor;
        res.floored = true;
      }
    }
    w = std::move(next);
    ++res.iterations;
  }
  Vector tau = step(w);
  res.residual = ((w - tau).array().abs() / w.array()).maxCoeff();
  res.weights = std::move(w);
  return res;
}

}  // namespace pnreg
