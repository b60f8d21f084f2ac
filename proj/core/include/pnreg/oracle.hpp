#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace pnreg::oracle {

// Dense, slow reference solvers. Nothing here calls into the solver modules.

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct OracleResult {
  Vec x;
  double value = 0.0;
  double tolerance = 0.0;     // final stationarity measure
  std::string method;
  bool converged = false;
  bool convex_certificate = false;
  int iterations = 0;
};

Mat pseudoinverse(const Mat& A, double rcond = 1e-12);

struct KktResult {
  Vec delta;
  double objective = 0.0;          // ½ΔᵀRΔ
  double null_residual = 0.0;      // ‖AᵀΔ‖∞
  double budget_residual = 0.0;    // |gᵀΔ − z|
  std::string tag = "ok";          // "ok" or "degenerate"
};

// min ½ΔᵀRΔ s.t. AᵀΔ = 0, gᵀΔ = z through the full (n+d+1)² system.
KktResult kkt_solve(const Vec& R, const Mat& A, const Vec& g, double z);

// min ‖Ax − b‖_p^p, subject to Cx = v when C is non-empty. Damped Newton on
// Σ(rᵢ² + μ²)^{p/2} over ker C with μ driven down by decades. A non-empty
// start replaces the least-squares initial point.
OracleResult pnorm_oracle(const Mat& A, const Vec& b, const Mat& C, const Vec& v, double p,
                          double tol = 1e-12, const Vec& start = Vec());

// min ‖x‖_p^p s.t. Aᵀx = b by equality-constrained Newton; each step solves
// the d×d Schur complement AᵀH⁻¹A.
OracleResult min_norm_oracle(const Mat& A, const Vec& b, double p, double tol = 1e-12,
                             const Vec& start = Vec());

// min Σ ωᵢγ_p(tᵢ, yᵢ) s.t. Bᵀy = e with B = [A g], e = (0, z); γ evaluated
// from its defining formula.
OracleResult gamma_min_oracle(const Mat& A, const Vec& g, double z, const Vec& t,
                              const Vec& omega, double p, double tol = 1e-13);

struct FdResult {
  Vec gradient;
  Vec error;  // |extrapolated − finest central difference| per coordinate
};

// Central differences at h, h/2, h/4 combined by Richardson extrapolation.
FdResult finite_difference(const std::function<double(const Vec&)>& f, const Vec& x,
                           double h = 1e-3);

}  // namespace pnreg::oracle
