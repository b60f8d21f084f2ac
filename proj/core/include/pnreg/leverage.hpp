#pragma once

#include <vector>

#include "pnreg/linear_solvers.hpp"
#include "pnreg/sparse_core.hpp"

namespace pnreg {

enum class SampleKind { Spectral, Gamma };

// Kept rows, strictly increasing, with their rescaling factors. Spectral
// samples carry pᵢ^{-1/2}, γ_q samples carry pᵢ^{-1/q} per round.
struct RowSample {
  std::vector<Index> indices;
  std::vector<double> weights;
  std::vector<double> probabilities;
  SampleKind kind = SampleKind::Spectral;
  double q = 2.0;
  Index n_source = 0;

  Index size() const { return static_cast<Index>(indices.size()); }
  // The selected rows of A, each multiplied by its weight.
  SparseMatrix apply(const SparseMatrix& A) const;
  // Length-n vector of weights with zeros for dropped rows.
  Vector dense_weights() const;
  void scale(double s);
};

struct LeverageEstimate {
  Vector values;
  bool is_overestimate = false;
  bool used_pseudoinverse = false;
  double sum = 0.0;
};

LeverageEstimate make_estimate(Vector values, bool overestimate = false);

// Keeps row i with pᵢ = min{1, α·uᵢ·c·log d}, weight 1/√pᵢ. Infinite uᵢ
// means pᵢ = 1. log is natural and floored at 1 so that d = 1 is usable.
RowSample sample_rows(const LeverageEstimate& u, double alpha, double c, Index d,
                      SeededRng& rng);
double sample_log_d(Index d);

// τᵢ = aᵢᵀ(AᵀA)⁺aᵢ.
LeverageEstimate leverage_scores_exact(const SparseMatrix& A);
LeverageEstimate leverage_scores_exact(const DenseMatrix& A);

// τᵢᴮ = aᵢᵀ(BᵀB)⁺aᵢ, +∞ when aᵢ has a component in ker(B).
LeverageEstimate generalized_leverage_scores(const SparseMatrix& A, const SparseMatrix& B);

// Number of Gaussian sketch rows used by the refinement rounds.
Index jl_sketch_rows(Index n, Index d);

// uᵢ = (1 + 1/(n⁹−1))·(0.9r)⁻¹·‖M aᵢ‖² with M = G(SA)·inv. When r × rows(SA)
// exceeds a memory budget, rows of M are drawn from the same law N(0, K⁻¹KK⁻¹)
// through the Cholesky factor of K = (SA)ᵀSA instead of forming G explicitly.
LeverageEstimate estimate_leverage_jl(const SparseMatrix& A, const SparseMatrix& SA,
                                      const InverseOperator& inv, Index r, SeededRng& rng,
                                      double literal_budget = 2e5);

struct SpectralConfig {
  double c = 30.0;
  int rounds = -1;          // -1: ⌈log₂(n/d)⌉
  Index sketch_rows = 0;    // 0: jl_sketch_rows(n, d)
  int max_retries = 8;
  double literal_budget = 2e5;  // max r·rows(SA) for an explicit Gaussian sketch
};

struct SpectralResult {
  SparseMatrix approx;
  RowSample sample;
  LeverageEstimate u_final;
  std::vector<double> u_norms;   // ‖u⁽ⁱ⁾‖₁ after each round, starting with n
  int retries = 0;
};

SpectralResult spectral_approximation(const SparseMatrix& A, SeededRng& rng,
                                      const SpectralConfig& config = {});

struct LewisResult {
  Vector weights;
  double residual = 0.0;  // max |wᵢ − τᵢ(W^{1/2−1/p}A)| / wᵢ
  int iterations = 0;
  bool floored = false;
};

LewisResult lewis_weights(const SparseMatrix& A, double p, int iters, double floor = 1e-300);

}  // namespace pnreg
