#include "pnreg/pnorm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "pnreg/errors.hpp"

namespace pnreg {

const char* to_string(ProblemForm f) { return f == ProblemForm::P1 ? "p1" : "p2"; }

const char* to_string(Method m) {
  switch (m) {
    case Method::Residual:
      return "residual";
    case Method::Homotopy:
      return "homotopy";
    case Method::DualAuto:
      return "dual-auto";
  }
  return "?";
}

ProblemForm parse_form(const std::string& s) {
  if (s == "p1" || s == "P1") return ProblemForm::P1;
  if (s == "p2" || s == "P2") return ProblemForm::P2;
  throw ContractViolation("unknown form '" + s + "' (expected p1 or p2)");
}

Method parse_method(const std::string& s) {
  if (s == "residual") return Method::Residual;
  if (s == "homotopy") return Method::Homotopy;
  if (s == "dual-auto" || s == "auto") return Method::DualAuto;
  throw ContractViolation("unknown method '" + s + "' (expected residual, homotopy or dual-auto)");
}

void RegressionProblem::validate() const {
  if (!(p > 1.0) || !std::isfinite(p)) throw ContractViolation("p must lie in (1, inf)");
  Index n = A.n_rows(), d = A.n_cols();
  if (form == ProblemForm::P1) {
    if (b.size() != n) throw DimensionMismatch("P1: b must have length n");
    if (has_constraint()) {
      if (C.rows() != d || C.cols() != d) throw DimensionMismatch("P1: C must be d x d");
      if (v.size() != d) throw DimensionMismatch("P1: v must have length d");
    } else if (v.size()) {
      throw ContractViolation("P1: v given without C");
    }
  } else {
    if (b.size() != d) throw DimensionMismatch("P2: b must have length d");
    if (has_constraint() || v.size()) throw ContractViolation("P2 takes no C or v");
  }
}

double refinement_step(double p) {
  double e = std::min(1.0, p - 1.0);
  return std::pow((p - 1.0) / (p * std::pow(4.0, p)), 1.0 / e);
}

namespace {

struct ConstraintBasis {
  DenseMatrix C_orth;  // k×d, orthonormal rows
  Vector v_orth;
  DenseMatrix N;       // d×(d−k), orthonormal basis of ker C
};

ConstraintBasis constraint_basis(const DenseMatrix& C, const Vector& v) {
  Index d = C.cols();
  Eigen::JacobiSVD<DenseMatrix> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  double smax = s.size() ? s[0] : 0.0;
  Index k = 0;
  while (smax > 0.0 && k < s.size() && s[k] > 1e-12 * smax) ++k;
  const DenseMatrix& U = svd.matrixU();
  const DenseMatrix& V = svd.matrixV();
  ConstraintBasis cb;
  cb.C_orth = V.leftCols(k).transpose();
  Vector Utv = U.leftCols(k).transpose() * v;
  cb.v_orth = Utv.cwiseQuotient(s.head(k));
  Vector outside = v - U.leftCols(k) * Utv;
  if (outside.norm() > 1e-10 * (1.0 + v.norm()))
    throw Infeasible("constraint system Cx = v is inconsistent");
  cb.N = V.rightCols(d - k);
  return cb;
}

double qnorm(const Vector& u, double q) {
  double m = u.cwiseAbs().maxCoeff();
  if (!(m > 0.0)) return 0.0;
  double s = 0.0;
  for (Index i = 0; i < u.size(); ++i) s += std::pow(std::abs(u[i]) / m, q);
  return m * std::pow(s, 1.0 / q);
}

// Everything about the feasible set that the outer loop reuses.
class Geometry {
 public:
  explicit Geometry(const RegressionProblem& prob) : prob_(prob), A_(prob.A) {
    if (prob.form == ProblemForm::P1 && prob.has_constraint()) {
      constrained_ = true;
      ConstraintBasis cb = constraint_basis(prob.C, prob.v);
      C_orth_ = std::move(cb.C_orth);
      v_orth_ = std::move(cb.v_orth);
      N_ = std::move(cb.N);
      x_p_ = C_orth_.transpose() * v_orth_;
      AN_ = matmat(A_, N_);
      if (N_.cols() > 0) {
        DenseMatrix K = AN_.transpose() * AN_;
        reduced_.compute(K);
        if (reduced_.info() != Eigen::Success)
          throw RankDeficient("A restricted to ker C is rank deficient");
        Vector Ld = reduced_.matrixLLT().diagonal();
        if (Ld.minCoeff() <= 1e-7 * Ld.maxCoeff())
          throw RankDeficient("A restricted to ker C is rank deficient");
      }
    } else {
      C_orth_ = DenseMatrix::Zero(0, A_.n_cols());
      gram_ = InverseOperator::build(A_);
    }
  }

  const DenseMatrix& C_orth() const { return C_orth_; }

  Vector residual(const Vector& x) const {
    if (prob_.form == ProblemForm::P2) return x;
    return matvec(A_, x) - prob_.b;
  }

  Vector project(const Vector& x) const {
    if (prob_.form == ProblemForm::P2) {
      Vector e = matvec_t(A_, x) - prob_.b;
      return x - matvec(A_, gram_.apply(e));
    }
    if (constrained_) return x - C_orth_.transpose() * (C_orth_ * x - v_orth_);
    return x;
  }

  Vector start() const {
    if (prob_.form == ProblemForm::P2) {
      Vector x = matvec(A_, gram_.apply(prob_.b));
      x += matvec(A_, gram_.apply(Vector(prob_.b - matvec_t(A_, x))));
      return x;
    }
    if (constrained_) {
      if (N_.cols() == 0) return x_p_;
      Vector rhs = prob_.b - matvec(A_, x_p_);
      Vector xi = reduced_.solve(AN_.transpose() * rhs);
      xi += reduced_.solve(AN_.transpose() * (rhs - AN_ * xi));
      return x_p_ + N_ * xi;
    }
    Vector x = gram_.apply(matvec_t(A_, prob_.b));
    x += gram_.apply(matvec_t(A_, prob_.b - matvec(A_, x)));
    return x;
  }

  double lower_bound(const Vector& x) const {
    double p = prob_.p, q = p / (p - 1.0);
    Vector r = residual(x);
    Vector g = pnorm_gradient(p, r);
    double num = 0.0, den = 0.0;
    if (prob_.form == ProblemForm::P1) {
      Vector u;
      if (constrained_) {
        u = N_.cols() ? Vector(g - AN_ * reduced_.solve(AN_.transpose() * g)) : g;
      } else {
        u = g - matvec(A_, gram_.apply(matvec_t(A_, g)));
      }
      num = std::abs(u.dot(r));
      den = qnorm(u, q);
    } else {
      Vector y = gram_.apply(matvec_t(A_, g));
      num = std::abs(prob_.b.dot(y));
      den = qnorm(matvec(A_, y), q);
    }
    if (!(den > 0.0) || !std::isfinite(num)) return 0.0;
    double lb = std::pow(num / den, p);
    return std::isfinite(lb) ? lb : 0.0;
  }

  double violation(const Vector& x) const {
    if (prob_.form == ProblemForm::P2) return (matvec_t(A_, x) - prob_.b).cwiseAbs().maxCoeff();
    if (constrained_) return (prob_.C * x - prob_.v).cwiseAbs().maxCoeff();
    return 0.0;
  }

 private:
  const RegressionProblem& prob_;
  const SparseMatrix& A_;
  bool constrained_ = false;
  DenseMatrix C_orth_;
  Vector v_orth_;
  DenseMatrix N_;
  Vector x_p_;
  DenseMatrix AN_;
  Eigen::LLT<DenseMatrix> reduced_;
  InverseOperator gram_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void finish(const RegressionProblem& prob, const Geometry& G, const Vector& x, double best_lb,
            const SolverConfig& config, SolveReport& rep) {
  rep.solution = x;
  rep.objective = pnorm_pow(prob.p, G.residual(x));
  rep.lower_bound = std::max(best_lb, G.lower_bound(x));
  if (rep.objective == 0.0) {
    rep.gap = 0.0;
  } else if (rep.lower_bound > 0.0) {
    rep.gap = std::max(0.0, (rep.objective - rep.lower_bound) / rep.lower_bound);
  } else {
    rep.gap = std::numeric_limits<double>::infinity();
  }
  rep.certified = rep.gap <= config.eps;
  rep.constraint_residual = G.violation(x);
  rep.seed = config.seed;
}

void emit(const SolverConfig& config, const char* phase, int iteration, double f, double lb,
          double step, double z, const SolveReport& rep, Index sample_size) {
  if (!config.trace) return;
  TraceEvent ev;
  ev.phase = phase;
  ev.iteration = iteration;
  ev.objective = f;
  ev.lower_bound = lb;
  ev.gap = lb > 0.0 ? std::max(0.0, (f - lb) / lb) : std::numeric_limits<double>::infinity();
  ev.step = step;
  ev.z = z;
  ev.residual_calls = rep.residual_calls;
  ev.inner_iterations = rep.inner_iterations;
  ev.sample_size = sample_size;
  config.trace(ev);
}

// min_s ‖r − s·y‖_p^p over s ≥ λ: doubling from λ, then golden section on the
// final bracket. Falls back to halving below λ when λ itself does not descend.
double line_search(double p, const Vector& r, const Vector& y, double lambda, double f0,
                   bool search, double& f_out) {
  auto phi = [&](double s) { return pnorm_pow(p, r - s * y); };
  double best_s = lambda, best_f = phi(lambda);
  if (search) {
    double s = lambda;
    for (int k = 0; k < 400; ++k) {
      double f2 = phi(2.0 * s);
      if (!(f2 < best_f)) break;
      s *= 2.0;
      best_s = s;
      best_f = f2;
    }
    double lo = std::max(lambda, 0.5 * best_s), hi = 2.0 * best_s;
    const double phi_g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - phi_g * (hi - lo), x2 = lo + phi_g * (hi - lo);
    double f1 = phi(x1), f2 = phi(x2);
    for (int k = 0; k < 60; ++k) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi_g * (hi - lo);
        f1 = phi(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi_g * (hi - lo);
        f2 = phi(x2);
      }
    }
    if (f1 < best_f) {
      best_s = x1;
      best_f = f1;
    }
    if (f2 < best_f) {
      best_s = x2;
      best_f = f2;
    }
  }
  if (!(best_f < f0)) {
    double s = lambda;
    for (int k = 0; k < 60; ++k) {
      s *= 0.5;
      double f2 = phi(s);
      if (f2 < f0) {
        f_out = f2;
        return s;
      }
    }
    f_out = f0;
    return 0.0;
  }
  f_out = best_f;
  return best_s;
}

// Iterative refinement x ← x − sΔ̄ with Δ̄ from the residual problem at x.
void refine(const RegressionProblem& prob, const Geometry& G, Vector& x, const SolverConfig& config,
            SolveReport& rep, double& best_lb, const char* phase) {
  const double p = prob.p;
  const SparseMatrix& A = prob.A;
  const bool p1 = prob.form == ProblemForm::P1;
  const double lambda = refinement_step(p);
  rep.lambda = lambda;

  InnerEngine engine = config.engine;
  if (config.engine_auto)
    engine = (config.method == Method::Residual && p > 2.0) ? InnerEngine::Mwu : InnerEngine::Newton;
  ZSearchConfig zc = config.zsearch;
  zc.engine = engine;
  SeededRng rng(config.seed, 0x5a3e);

  Vector r = G.residual(x);
  double f = pnorm_pow(p, r);
  best_lb = std::max(best_lb, G.lower_bound(x));
  rep.objective_history.push_back(f);
  emit(config, phase, 0, f, best_lb, 0.0, 0.0, rep, 0);

  for (int it = 0;; ++it) {
    if (f == 0.0) {
      rep.status = "exact";
      return;
    }
    if (best_lb > 0.0 && (f - best_lb) / best_lb <= config.eps) {
      rep.status = "certified";
      return;
    }
    if (it >= config.max_outer) {
      rep.status = "max-iterations";
      return;
    }
    Vector g = pnorm_gradient(p, r);
    Vector t = r.cwiseAbs();
    ZSearchResult zs;
    Index sample_size = 0;
    bool solved = false;
    if (config.sampled && p1) {
      try {
        double tmax = t.maxCoeff();
        double tmin = std::max(t.minCoeff(), 1e-8 * tmax);
        Vector tn = (t / tmin).cwiseMax(1.0);
        SeededRng draw = rng.split();
        GammaSampleResult gs = gamma_sample(A, tn, p, config.gamma, draw);
        if (!gs.empty && gs.sample.size() > 0) {
          const auto& idx = gs.sample.indices;
          SparseMatrix AS = A.select_rows(idx, std::vector<double>(idx.size(), 1.0));
          Vector omega(static_cast<Index>(idx.size())), tS(static_cast<Index>(idx.size()));
          for (std::size_t k = 0; k < idx.size(); ++k) {
            omega[static_cast<Index>(k)] = gs.w[idx[k]];
            tS[static_cast<Index>(k)] = tn[idx[k]] * tmin;
          }
          ResidualSpace space = ResidualSpace::range_space(AS, G.C_orth(), matvec_t(A, g));
          ZSearchConfig zn = zc;
          zn.engine = InnerEngine::Newton;
          zs = approx_via_z_search(space, tS, p, zn, omega);
          sample_size = AS.n_rows();
          solved = zs.value > 0.0;
        }
      } catch (const Error&) {
        solved = false;
      }
    }
    if (!solved) {
      ResidualSpace space = p1 ? ResidualSpace::range_space(A, G.C_orth(), matvec_t(A, g))
                               : ResidualSpace::null_space(A, g);
      int prior = zs.inner_iterations;
      zs = approx_via_z_search(space, t, p, zc);
      zs.inner_iterations += prior;
      sample_size = 0;
    }
    ++rep.residual_calls;
    rep.inner_iterations += zs.inner_iterations;
    if (!(zs.value > 0.0)) {
      rep.status = "no-progress";
      return;
    }
    Vector y = p1 ? matvec(A, zs.primal) : zs.primal;
    double f_new = f;
    double s = line_search(p, r, y, lambda, f, config.line_search, f_new);
    if (s == 0.0) {
      rep.status = "no-progress";
      return;
    }
    x -= s * zs.primal;
    x = G.project(x);
    r = G.residual(x);
    f_new = pnorm_pow(p, r);
    double rel = (f - f_new) / std::max(f_new, std::numeric_limits<double>::min());
    f = f_new;
    ++rep.outer_iterations;
    best_lb = std::max(best_lb, G.lower_bound(x));
    rep.objective_history.push_back(f);
    emit(config, phase, rep.outer_iterations, f, best_lb, s, zs.z, rep, sample_size);
    if (best_lb > 0.0 && (f - best_lb) / best_lb <= config.eps) {
      rep.status = "certified";
      return;
    }
    if (rel >= 0.0 && rel < 0.1 * config.eps) {
      rep.status = "converged";
      return;
    }
  }
}

SolveReport solve_dual_route(const RegressionProblem& prob, const SolverConfig& config,
                             Clock::time_point t0) {
  const SparseMatrix& A = prob.A;
  const Index n = A.n_rows(), d = A.n_cols();
  const double p = prob.p, q = p / (p - 1.0);

  RegressionProblem dual;
  dual.form = ProblemForm::P1;
  dual.A = A;
  dual.b = Vector::Zero(n);
  dual.C = DenseMatrix::Zero(d, d);
  dual.C.row(0) = prob.b.transpose();
  dual.v = Vector::Zero(d);
  dual.v[0] = 1.0;
  dual.p = q;
  SolverConfig dc = config;
  dc.trace = {};
  dc.eps = 0.1 * config.eps;
  if (config.trace) {
    dc.trace = [&config](const TraceEvent& e) {
      TraceEvent ev = e;
      ev.phase = "dual";
      config.trace(ev);
    };
  }
  SolveReport dr = solve_p1(dual, dc);

  Geometry G(prob);
  Vector s = matvec(A, dr.solution);
  Vector u(n);
  for (Index i = 0; i < n; ++i)
    u[i] = s[i] == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(s[i]), q - 1.0), s[i]);
  Vector Atu = matvec_t(A, u);
  double den = Atu.squaredNorm();
  Vector x = den > 0.0 ? Vector((Atu.dot(prob.b) / den) * u) : G.start();
  x = G.project(x);

  SolveReport rep;
  rep.method = to_string(config.method);
  rep.residual_calls = dr.residual_calls;
  rep.inner_iterations = dr.inner_iterations;
  rep.outer_iterations = dr.outer_iterations;
  double best_lb = 0.0;
  refine(prob, G, x, config, rep, best_lb, "polish");
  if (rep.status == "certified" || rep.status == "exact") {
    rep.status = rep.outer_iterations == dr.outer_iterations ? "certified-dual" : rep.status;
  }
  finish(prob, G, x, best_lb, config, rep);
  rep.seconds = seconds_since(t0);
  return rep;
}

}  // namespace

void orthonormalize_constraints(const DenseMatrix& C, const Vector& v, DenseMatrix& C_orth,
                                Vector& v_orth) {
  ConstraintBasis cb = constraint_basis(C, v);
  C_orth = std::move(cb.C_orth);
  v_orth = std::move(cb.v_orth);
}

Vector initial_point(const RegressionProblem& prob) {
  prob.validate();
  return Geometry(prob).start();
}

double dual_lower_bound(const RegressionProblem& prob, const Vector& x) {
  return Geometry(prob).lower_bound(x);
}

double objective_value(const RegressionProblem& prob, const Vector& x) {
  if (prob.form == ProblemForm::P2) return pnorm_pow(prob.p, x);
  return pnorm_pow(prob.p, matvec(prob.A, x) - prob.b);
}

double constraint_violation(const RegressionProblem& prob, const Vector& x) {
  if (prob.form == ProblemForm::P2)
    return (matvec_t(prob.A, x) - prob.b).cwiseAbs().maxCoeff();
  if (prob.has_constraint()) return (prob.C * x - prob.v).cwiseAbs().maxCoeff();
  return 0.0;
}

SolveReport solve_p1(const RegressionProblem& prob, const SolverConfig& config) {
  auto t0 = Clock::now();
  prob.validate();
  if (prob.form != ProblemForm::P1) throw ContractViolation("solve_p1 needs a P1 problem");
  if (config.sampled && prob.p > 2.0)
    throw ContractViolation("the sampled route needs p <= 2");
  Geometry G(prob);
  SolveReport rep;
  rep.method = to_string(config.method);
  Vector x = G.start();
  double best_lb = 0.0;
  if (prob.p == 2.0) {
    rep.status = "exact";
    rep.lambda = refinement_step(2.0);
    rep.objective_history.push_back(pnorm_pow(2.0, G.residual(x)));
  } else {
    refine(prob, G, x, config, rep, best_lb, "outer");
  }
  finish(prob, G, x, best_lb, config, rep);
  rep.seconds = seconds_since(t0);
  return rep;
}

SolveReport solve_p2(const RegressionProblem& prob, const SolverConfig& config) {
  auto t0 = Clock::now();
  prob.validate();
  if (prob.form != ProblemForm::P2) throw ContractViolation("solve_p2 needs a P2 problem");
  if (prob.b.norm() == 0.0) {
    SolveReport rep;
    rep.method = to_string(config.method);
    rep.solution = Vector::Zero(prob.A.n_rows());
    rep.status = "exact";
    rep.certified = true;
    rep.seed = config.seed;
    rep.seconds = seconds_since(t0);
    return rep;
  }
  if (config.method == Method::DualAuto && prob.p != 2.0) return solve_dual_route(prob, config, t0);
  Geometry G(prob);
  SolveReport rep;
  rep.method = to_string(config.method);
  Vector x = G.start();
  double best_lb = 0.0;
  if (prob.p == 2.0) {
    rep.status = "exact";
    rep.lambda = refinement_step(2.0);
    rep.objective_history.push_back(pnorm_pow(2.0, x));
  } else {
    refine(prob, G, x, config, rep, best_lb, "outer");
  }
  finish(prob, G, x, best_lb, config, rep);
  rep.seconds = seconds_since(t0);
  return rep;
}

SolveReport solve(const RegressionProblem& prob, const SolverConfig& config) {
  prob.validate();
  if (config.method == Method::Homotopy) return homotopy_solve(prob, config);
  return prob.form == ProblemForm::P1 ? solve_p1(prob, config) : solve_p2(prob, config);
}

LeastSquaresResult tall_least_squares(const SparseMatrix& A, const Vector& b, SeededRng& rng,
                                      double lambda, double rel_tol,
                                      const SpectralConfig& config) {
  if (b.size() != A.n_rows()) throw DimensionMismatch("tall_least_squares: b length");
  SpectralResult sp = spectral_approximation(A, rng, config);
  InverseOperator inv = InverseOperator::build(sp.approx);
  StoppingRule rule;
  rule.rel_tol = rel_tol;
  Vector rhs = matvec_t(A, b);
  RichardsonResult rr = richardson_solve(
      [&](const Vector& x) { return matvec_t(A, matvec(A, x)); }, rhs,
      [&](const Vector& v) { return Vector(inv.apply(v) / lambda); }, lambda * (1.0 + 1e-6),
      rule);
  LeastSquaresResult out;
  out.x = std::move(rr.x);
  out.iterations = rr.iterations;
  out.converged = rr.converged;
  out.approx_rows = sp.approx.n_rows();
  return out;
}

RowSample sample_smoothed_qnorm(const SparseMatrix& A, const Vector& t, double q, SeededRng& rng,
                                const QNormSampleConfig& config) {
  if (!(q >= 2.0)) throw ContractViolation("sample_smoothed_qnorm: q must be >= 2");
  const Index n = A.n_rows(), d = A.n_cols();
  if (t.size() != n) throw DimensionMismatch("sample_smoothed_qnorm: t length");
  Vector T(n);
  for (Index i = 0; i < n; ++i) T[i] = q == 2.0 ? 1.0 : std::pow(t[i], 0.5 * (q - 2.0));
  Vector tau = leverage_scores_exact(A.scale_rows(T)).values;
  Vector lw = q > 2.0 ? lewis_weights(A, q, config.lewis_iters).weights
                      : leverage_scores_exact(A).values;
  double k = config.oversample * std::pow(static_cast<double>(d), 0.5 * q - 1.0) *
             std::log(static_cast<double>(d) + 1.0);
  SeededRng draws = rng.split();
  RowSample s;
  s.kind = SampleKind::Gamma;
  s.q = q;
  s.n_source = n;
  for (Index i = 0; i < n; ++i) {
    double pi = std::min(1.0, k * std::max(tau[i], lw[i]));
    if (!(pi > 0.0)) continue;
    if (pi >= 1.0 || draws.uniform_at(static_cast<std::uint64_t>(i)) < pi) {
      s.indices.push_back(i);
      s.probabilities.push_back(pi);
      s.weights.push_back(std::pow(pi, -1.0 / q));
    }
  }
  return s;
}

}  // namespace pnreg
