#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pnreg/gamma.hpp"
#include "pnreg/leverage.hpp"
#include "pnreg/residual.hpp"

namespace pnreg {

enum class ProblemForm { P1, P2 };
enum class Method { Residual, Homotopy, DualAuto };

const char* to_string(ProblemForm f);
const char* to_string(Method m);
ProblemForm parse_form(const std::string& s);
Method parse_method(const std::string& s);

// P1: min ‖Ax − b‖_p^p, optionally s.t. Cx = v (C is d×d).
// P2: min ‖x‖_p^p s.t. Aᵀx = b (b has length d).
struct RegressionProblem {
  ProblemForm form = ProblemForm::P1;
  SparseMatrix A;
  Vector b;
  DenseMatrix C;  // empty when absent
  Vector v;
  double p = 2.0;

  void validate() const;
  bool has_constraint() const { return C.size() > 0; }
};

struct TraceEvent {
  std::string phase;       // "outer", "homotopy", "dual", "polish"
  int iteration = 0;
  double objective = 0.0;
  double lower_bound = 0.0;
  double gap = 0.0;
  double step = 0.0;
  double z = 0.0;
  int residual_calls = 0;
  int inner_iterations = 0;
  Index sample_size = 0;
};

using TraceSink = std::function<void(const TraceEvent&)>;

struct SolverConfig {
  Method method = Method::DualAuto;
  double eps = 1e-10;            // target relative gap
  std::uint64_t seed = 0;
  bool sampled = false;          // γ-sampled residual problems (P1, p ≤ 2)
  bool engine_auto = true;       // residual method: MWU for p > 2, Newton otherwise
  InnerEngine engine = InnerEngine::Newton;
  bool line_search = true;       // false: fixed step refinement_step(p)
  int max_outer = 1000;
  ZSearchConfig zsearch;
  GammaSampleConfig gamma;
  SpectralConfig spectral;
  double homotopy_phase_const = 2.0;  // phases ⌈C·ln(n p t₀^p/ε)⌉ + 1
  int homotopy_inner_max = 400;
  double homotopy_phase_tol = 1e-12;
  double least_squares_lambda = 4.0;
  TraceSink trace;
};

struct SolveReport {
  Vector solution;
  double objective = 0.0;
  double lower_bound = 0.0;
  double gap = 0.0;              // (objective − lower_bound) / lower_bound
  bool certified = false;
  std::string status;
  std::string method;
  int outer_iterations = 0;
  int residual_calls = 0;
  int inner_iterations = 0;
  double constraint_residual = 0.0;
  double seconds = 0.0;
  std::uint64_t seed = 0;
  double lambda = 0.0;           // refinement step floor
  std::vector<double> objective_history;
  std::vector<double> phase_values;  // homotopy: γ_p(t_{k+1}, r) per phase
};

// λ with λ^{min(1,p−1)} = (p−1)/(p·4^p).
double refinement_step(double p);

// C = UΣVᵀ; returns the rows V_kᵀ and rescaled right-hand side Σ⁻¹U_kᵀv.
// Throws Infeasible when v has a component outside the range of C.
void orthonormalize_constraints(const DenseMatrix& C, const Vector& v, DenseMatrix& C_orth,
                                Vector& v_orth);

Vector initial_point(const RegressionProblem& prob);

// Hölder lower bound on the optimum from the current iterate.
double dual_lower_bound(const RegressionProblem& prob, const Vector& x);
double objective_value(const RegressionProblem& prob, const Vector& x);
double constraint_violation(const RegressionProblem& prob, const Vector& x);

SolveReport solve_p1(const RegressionProblem& prob, const SolverConfig& config);
SolveReport solve_p2(const RegressionProblem& prob, const SolverConfig& config);
// Additive target config.eps·‖b‖₂^p.
SolveReport homotopy_solve(const RegressionProblem& prob, const SolverConfig& config);
// Dispatches on form and method.
SolveReport solve(const RegressionProblem& prob, const SolverConfig& config);

// Dᵢᵢ = ((p−1)/2)·max{t_k^{p/2}, |rᵢ|^{p/2} − sign(p−2)γ}^{2−4/p}, r = Ax − b.
Vector d_weight_matrix(double p, const Vector& x, const SparseMatrix& A, const Vector& b,
                       double t_k, double gamma);

struct LeastSquaresResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  Index approx_rows = 0;
};

// argmin ‖Ax − b‖₂ by Richardson preconditioned with λ·ÃᵀÃ, Ã a spectral
// approximation of A.
LeastSquaresResult tall_least_squares(const SparseMatrix& A, const Vector& b, SeededRng& rng,
                                      double lambda = 4.0, double rel_tol = 1e-12,
                                      const SpectralConfig& config = {});

struct QNormSampleConfig {
  double oversample = 8.0;  // pᵢ = min{1, k·d^{q/2−1}·ln(d+1)·max{τᵢ, wᵢ}}
  int lewis_iters = 60;
};

// Rows kept with pᵢ ∝ max{τᵢ(TA), Lewis_q(A)ᵢ}, T = diag(t^{(q−2)/2}). The
// weights are row scales pᵢ^{−1/q}; scaling tᵢ by the same factor makes
// Σ (tᵢ^{q−2}yᵢ² + |yᵢ|^q) over the scaled sample estimate the full sum.
RowSample sample_smoothed_qnorm(const SparseMatrix& A, const Vector& t, double q,
                                SeededRng& rng, const QNormSampleConfig& config = {});

}  // namespace pnreg
