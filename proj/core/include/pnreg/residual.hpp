#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pnreg/gamma.hpp"
#include "pnreg/linear_solvers.hpp"

namespace pnreg {

// g = p·|r|^{p−2}⊙r; for p < 2 the power is taken at max(|rᵢ|, 1e−30).
Vector pnorm_gradient(double p, const Vector& r);
Vector residual_gradient(double p, const Vector& x, const SparseMatrix& A, const Vector& b);
double pnorm_pow(double p, const Vector& r);  // ‖r‖_p^p

// Feasible directions y ∈ ℝᵐ for a residual problem together with a budget
// functional gᵀy.
//   null form:  y ∈ ℝⁿ with Aᵀy = 0, budget gᵀy                  (P2)
//   range form: y = Aξ with Cξ = 0, budget hᵀξ (h = Aᵀg)          (P1)
class ResidualSpace {
 public:
  enum class Form { Null, Range };

  static ResidualSpace null_space(SparseMatrix A, Vector g);
  // C_orth has orthonormal rows (possibly none).
  static ResidualSpace range_space(SparseMatrix A, DenseMatrix C_orth, Vector h);

  Form form() const { return form_; }
  Index coords() const { return A_.n_rows(); }
  Index primal_dim() const { return form_ == Form::Null ? A_.n_rows() : A_.n_cols(); }
  const SparseMatrix& matrix() const { return A_; }
  // Gram weights of the d×d system solved per call: 1/R (null) or R (range).
  Vector gram_weights(const Vector& R) const;
  double budget(const Vector& primal) const;
  Vector coords_of(const Vector& primal) const;

  struct Solution {
    Vector y;       // objective coordinates
    Vector primal;  // y (null) or ξ (range)
  };

  // argmin ½yᵀRy − cᵀy over the space, with gᵀy = z when with_budget.
  // K_inv applies (Aᵀ diag(gram_weights(R)) A)⁻¹; a fresh factorization is
  // used when it is empty. Throws Infeasible when the budget cannot be met.
  Solution solve(const Vector& R, const Vector& c, double z, bool with_budget,
                 const LinearMap& K_inv = {}) const;

 private:
  Form form_ = Form::Null;
  SparseMatrix A_;
  DenseMatrix C_;
  Vector g_;  // budget vector: length n (null) or d (range)
};

// min ½ΔᵀRΔ s.t. AᵀΔ = 0, gᵀΔ = z by the Lagrangian closed form. The d×d
// solves go through Richardson preconditioned by inv when given.
Vector solve_weighted_lr(const SparseMatrix& A, const Vector& R, const Vector& g, double z,
                         const MaintainedInverse* inv = nullptr);

struct MwuConfig {
  double C = 1.0;          // shared leading constant of ρ, β, τ
  double C_alpha = 1.0;    // leading constant of the step α (T = n^{1/p}/α)
  double m_knob = 1.0;     // rebuild period ⌈(n/m)^{(p−2)/(3p−2)}⌉
  long rebuild_period = 0; // > 0 overrides the formula
  int max_iterations = 0;  // 0: 8T + 64
  int fixed_iterations = 0;  // > 0: run exactly this many, ignoring T
  double richardson_tol = 1e-13;
};

// Per-iteration view handed to observers of the multiplicative-weights loop.
struct WeightState {
  long iteration = 0;
  Vector w;
  Vector r;
  Vector r_hat;
  std::vector<std::vector<int>> counters;     // c_{j,η}
  std::vector<std::vector<double>> drift;     // Σ Δr per (j,η) since reset
  bool accepted = false;
  Index boosted = 0;
  std::vector<Index> E;
  std::vector<Index> E_by_eta;                // |E| contributions per η
  bool rebuilt = false;
  bool smw_rejected = false;
  int richardson_iterations = 0;
};

struct MwuResult {
  Vector y;
  Vector primal;
  int iterations = 0;
  int accepted = 0;
  int boosts = 0;
  int rebuilds = 0;
  int smw_updates = 0;
  long target_T = 0;
  int eta_max = 0;
  bool capped = false;    // iteration cap hit before T accepted steps
  std::vector<long> added_per_eta;  // Σᵢ k_{i,η}
};

using WeightObserver = std::function<void(const WeightState&, const MaintainedInverse&)>;

// Multiplicative-weights solver for min γ_p(t, y) over the space with
// budget z. Expects the normalized scale OPT ≤ 1, n^{−1/p} ≤ t ≤ 1.
MwuResult solve_residual(const ResidualSpace& space, const Vector& t, double p, double z,
                         const MwuConfig& config = {}, const WeightObserver& observer = {});

enum class InnerEngine { Mwu, Newton };

struct ZSearchConfig {
  InnerEngine engine = InnerEngine::Newton;
  double C_grid = 1.0;     // grid size max(3, ⌈C_grid·ln(d+1)⌉)
  int refine_steps = 24;   // golden-section steps after the grid, 0 disables
  int max_extensions = 40;
  MwuConfig mwu;
  int newton_max_iter = 60;
  double newton_tol = 1e-15;
};

struct ZSearchResult {
  Vector primal;   // Δ̄ (zero when no budget gave positive progress)
  Vector y;
  double z = 0.0;
  double value = 0.0;  // residual objective z − c_p·γ
  int grid_calls = 0;
  int refine_calls = 0;
  int inner_iterations = 0;
  std::vector<std::pair<double, double>> grid;  // (z, value)
};

double residual_coefficient(double p);  // (p−1)/(p·2^p)

// Minimizes Σ ωᵢγ_p(tᵢ, yᵢ) over the space with gᵀy = z by damped Newton.
struct GammaMinResult {
  Vector y;
  Vector primal;
  double value = 0.0;
  int iterations = 0;
};
GammaMinResult gamma_min_newton(const ResidualSpace& space, const Vector& t, const Vector& omega,
                                double p, double z, int max_iter = 60, double tol = 1e-15);

// max_z z − c_p·min{γ_p(t, y) : y feasible, gᵀy = z} over a geometric grid
// centred at the quadratic-model optimum.
ZSearchResult approx_via_z_search(const ResidualSpace& space, const Vector& t, double p,
                                  const ZSearchConfig& config = {},
                                  const Vector& omega = Vector());

}  // namespace pnreg
