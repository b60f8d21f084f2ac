#include <chrono>
#include <cmath>
#include <limits>

#include "pnreg/errors.hpp"
#include "pnreg/pnorm.hpp"

namespace pnreg {

Vector d_weight_matrix(double p, const Vector& x, const SparseMatrix& A, const Vector& b,
                       double t_k, double gamma) {
  if (!(t_k > 0.0)) throw ContractViolation("d_weight_matrix: t_k must be > 0");
  Vector r = matvec(A, x) - b;
  double sgn = p > 2.0 ? 1.0 : (p < 2.0 ? -1.0 : 0.0);
  double floor = std::pow(t_k, 0.5 * p);
  double e = 2.0 - 4.0 / p;
  Vector D(r.size());
  for (Index i = 0; i < r.size(); ++i) {
    double base = std::max(floor, std::pow(std::abs(r[i]), 0.5 * p) - sgn * gamma);
    D[i] = 0.5 * (p - 1.0) * std::pow(base, e);
  }
  return D;
}

namespace {

// ψ(s) = sign(s)|s|^{p/2} and its inverse.
double psi(double p, double s) { return std::copysign(std::pow(std::abs(s), 0.5 * p), s); }
double psi_inv(double p, double v) { return std::copysign(std::pow(std::abs(v), 2.0 / p), v); }

struct PhaseObjective {
  const SparseMatrix& A;
  const Vector& b;
  double p;
  double t;
  Vector lo, hi;

  double eval(const Vector& x, Vector* grad) const {
    Vector r = matvec(A, x) - b;
    Vector dr(r.size());
    double f = 0.0;
    for (Index i = 0; i < r.size(); ++i) {
      ExtensionValue e = quadratic_extension(p, t, lo[i], hi[i], r[i]);
      f += e.value;
      dr[i] = e.derivative;
    }
    if (grad) *grad = matvec_t(A, dr);
    return f;
  }
};

struct PhaseOutcome {
  int iterations = 0;
  bool converged = false;
};

// Preconditioned gradient descent with Armijo backtracking.
PhaseOutcome descend(const PhaseObjective& obj, const InverseOperator& P, Vector& x, double step0,
                     int max_iter, double tol) {
  PhaseOutcome out;
  Vector grad;
  double f = obj.eval(x, &grad);
  double step = step0;
  for (int it = 0; it < max_iter; ++it) {
    Vector dir = P.apply(grad);
    double slope = grad.dot(dir);
    if (!(slope > 0.0)) {
      out.converged = true;
      return out;
    }
    double f_new = f;
    Vector x_new;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      x_new = x - step * dir;
      f_new = obj.eval(x_new, nullptr);
      if (f_new <= f - 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++out.iterations;
    if (!accepted) {
      out.converged = true;  // no representable decrease left
      return out;
    }
    double decrease = f - f_new;
    x = std::move(x_new);
    f = obj.eval(x, &grad);
    if (decrease <= tol * std::max(std::abs(f), std::numeric_limits<double>::min())) {
      out.converged = true;
      return out;
    }
    step *= 2.0;
  }
  return out;
}

}  // namespace

SolveReport homotopy_solve(const RegressionProblem& prob, const SolverConfig& config) {
  auto t0 = std::chrono::steady_clock::now();
  prob.validate();
  if (prob.form != ProblemForm::P1 || prob.has_constraint())
    throw ContractViolation("homotopy_solve needs an unconstrained P1 problem");
  const SparseMatrix& A = prob.A;
  const Vector& b = prob.b;
  const double p = prob.p;
  const Index n = A.n_rows();

  SolveReport rep;
  rep.method = to_string(Method::Homotopy);
  rep.seed = config.seed;
  auto finalize = [&](const Vector& x) {
    rep.solution = x;
    rep.objective = objective_value(prob, x);
    rep.lower_bound = dual_lower_bound(prob, x);
    rep.gap = rep.objective == 0.0 ? 0.0
              : rep.lower_bound > 0.0
                  ? std::max(0.0, (rep.objective - rep.lower_bound) / rep.lower_bound)
                  : std::numeric_limits<double>::infinity();
    rep.certified = rep.gap <= config.eps;
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  };

  double bn = b.norm();
  if (bn == 0.0) {
    rep.status = "exact";
    return finalize(Vector::Zero(A.n_cols()));
  }
  SeededRng rng(config.seed, 0x4f17);
  SeededRng ls_rng = rng.split();
  LeastSquaresResult ls =
      tall_least_squares(A, b, ls_rng, config.least_squares_lambda, 1e-13, config.spectral);
  Vector x = ls.x;
  rep.inner_iterations += ls.iterations;
  if (p == 2.0) {
    rep.status = "exact";
    return finalize(x);
  }

  double eps_abs = config.eps * std::pow(bn, p);
  double t = 2.0 * bn;
  double nn = static_cast<double>(n);
  int phases = static_cast<int>(std::ceil(
                   config.homotopy_phase_const *
                   std::log(nn * p * std::pow(t, p) / eps_abs))) + 1;
  phases = std::max(phases, 1);
  double shrink = 1.0 - 1.0 / (2.0 * p);
  double gcoef = 1.0 + p * p / (2.0 * (p - 1.0)) * std::sqrt(nn);
  rep.status = "completed";

  for (int k = 0; k < phases; ++k) {
    double t_next = shrink * t;
    double gamma = gcoef * std::pow(t, 0.5 * p);
    Vector D = d_weight_matrix(p, x, A, b, t, gamma);
    SeededRng phase_rng = rng.split();
    SpectralResult sp = spectral_approximation(A.scale_rows(D.cwiseSqrt()), phase_rng,
                                               config.spectral);
    InverseOperator P = InverseOperator::build(sp.approx);

    Vector r = matvec(A, x) - b;
    PhaseObjective obj{A, b, p, t_next, Vector(n), Vector(n)};
    for (Index i = 0; i < n; ++i) {
      double c = psi(p, r[i]);
      obj.lo[i] = psi_inv(p, c - gamma);
      obj.hi[i] = psi_inv(p, c + gamma);
    }
    Vector x_start = x;
    PhaseOutcome po = descend(obj, P, x, 1.0, config.homotopy_inner_max, config.homotopy_phase_tol);
    rep.inner_iterations += po.iterations;
    if (!po.converged) {
      x = x_start;
      po = descend(obj, P, x, 0.5, 2 * config.homotopy_inner_max, config.homotopy_phase_tol);
      rep.inner_iterations += po.iterations;
      if (!po.converged) rep.status = "phase-unconverged";
    }
    Vector r_new = matvec(A, x) - b;
    double phase_value = gamma_sum(p, Vector::Constant(n, t_next), r_new);
    rep.phase_values.push_back(phase_value);
    ++rep.outer_iterations;
    if (config.trace) {
      TraceEvent ev;
      ev.phase = "homotopy";
      ev.iteration = k + 1;
      ev.objective = pnorm_pow(p, r_new);
      ev.lower_bound = phase_value;
      ev.step = t_next;
      ev.inner_iterations = po.iterations;
      ev.sample_size = sp.approx.n_rows();
      config.trace(ev);
    }
    rep.objective_history.push_back(pnorm_pow(p, r_new));
    t = t_next;
  }
  return finalize(x);
}

}  // namespace pnreg
