#include <algorithm>
#include <cmath>
#include <limits>

#include "pnreg/residual.hpp"

namespace pnreg {

double residual_coefficient(double p) { return (p - 1.0) / (p * std::pow(2.0, p)); }

namespace {

int least_eta(double ratio, int eta_max) {
  if (!(ratio > 0.0)) return -1;
  if (ratio >= 1.0) return 0;
  int eta = static_cast<int>(std::ceil(-std::log2(ratio)));
  while (eta > 0 && std::ldexp(1.0, -(eta - 1)) <= ratio) --eta;
  while (std::ldexp(1.0, -eta) > ratio) ++eta;
  return std::min(eta, eta_max);
}

// space.solve with the curvature floored at rel·max; the floor is raised
// while the weighted Gram matrix stays numerically singular.
ResidualSpace::Solution solve_floored(const ResidualSpace& space, Vector H, const Vector& c,
                                      double z, bool with_budget, double& rel) {
  double hmax = H.size() ? H.maxCoeff() : 0.0;
  for (;;) {
    double fl = hmax > 0.0 ? rel * hmax : 1.0;
    Vector Hf = H.cwiseMax(fl);
    try {
      return space.solve(Hf, c, z, with_budget);
    } catch (const RankDeficient&) {
      if (rel >= 1e-2) throw;
      rel *= 1e3;
    }
  }
}

}  // namespace

MwuResult solve_residual(const ResidualSpace& space, const Vector& t, double p, double z,
                         const MwuConfig& config, const WeightObserver& observer) {
  Index n = space.coords();
  if (t.size() != n) throw DimensionMismatch("solve_residual: t length");
  if (p < 2.0) throw ContractViolation("solve_residual: p < 2 must go through the dual");
  MwuResult res;
  double nd = static_cast<double>(n);
  double n1p = std::pow(nd, 1.0 / p);

  if (p == 2.0) {
    auto sol = space.solve(Vector::Ones(n), Vector::Zero(n), z, true);
    res.y = std::move(sol.y);
    res.primal = std::move(sol.primal);
    res.iterations = res.accepted = 1;
    res.target_T = 1;
    return res;
  }

  double den = 3.0 * p - 2.0;
  double rho = config.C * std::pow(nd, (p * p - 4.0 * p + 2.0) / (p * den));
  double beta = config.C * std::pow(nd, (p - 2.0) / den);
  double alpha = config.C_alpha * std::pow(nd, -(p * p - 5.0 * p + 2.0) / (p * den));
  double tau = config.C * std::pow(nd, (p - 1.0) * (p - 2.0) / den);
  double T = n1p / alpha;
  res.target_T = std::max<long>(1, static_cast<long>(std::ceil(T)));
  int max_iter = config.fixed_iterations > 0
                     ? config.fixed_iterations
                     : (config.max_iterations > 0 ? config.max_iterations
                                                  : static_cast<int>(8 * res.target_T + 64));
  long period = config.rebuild_period > 0
                    ? config.rebuild_period
                    : std::max<long>(1, static_cast<long>(std::ceil(
                                            std::pow(nd / config.m_knob, (p - 2.0) / den))));
  int eta_max = std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(max_iter)))));
  res.eta_max = eta_max;
  res.added_per_eta.assign(eta_max + 1, 0);
  double boost = std::pow(4.0, 1.0 / (p - 2.0));

  Vector r0(n);
  for (Index j = 0; j < n; ++j) r0[j] = std::pow(n1p * t[j], p - 2.0);
  Vector w = Vector::Zero(n);
  Vector r = r0;
  Vector r_hat = r;
  WeightState st;
  st.counters.assign(n, std::vector<int>(eta_max + 1, 0));
  st.drift.assign(n, std::vector<double>(eta_max + 1, 0.0));
  MaintainedInverse precond(space.matrix(), space.gram_weights(r));
  Vector sum_primal = Vector::Zero(space.primal_dim());
  Vector sum_y = Vector::Zero(n);

  for (int i = 0; i < max_iter; ++i) {
    st.iteration = i;
    st.accepted = st.rebuilt = st.smw_rejected = false;
    st.boosted = 0;
    st.E.clear();
    if (i > 0 && i % period == 0) {
      r_hat = r;
      for (auto& row : st.counters) std::fill(row.begin(), row.end(), 0);
      for (auto& row : st.drift) std::fill(row.begin(), row.end(), 0.0);
      precond.rebuild(space.gram_weights(r), i);
      st.rebuilt = true;
      ++res.rebuilds;
    }

    Vector W = space.gram_weights(r);
    int rich_its = 0;
    LinearMap K_inv = [&](const Vector& v) {
      StoppingRule rule;
      rule.rel_tol = config.richardson_tol;
      RichardsonResult rr = richardson_weighted(precond, W, v, rule);
      rich_its += rr.iterations;
      return rr.x;
    };
    auto sol = space.solve(r, Vector::Zero(n), z, true, K_inv);
    st.richardson_iterations = rich_its;
    const Vector& D = sol.y;

    if (pnorm_pow(p, D) <= tau) {
      w += alpha * D.cwiseAbs();
      sum_primal += alpha * sol.primal;
      sum_y += alpha * D;
      ++res.accepted;
      st.accepted = true;
    } else {
      for (Index j = 0; j < n; ++j) {
        if (std::abs(D[j]) >= rho && r[j] <= beta) {
          w[j] = boost * std::max(n1p, w[j]);
          ++st.boosted;
        }
      }
      ++res.boosts;
    }
    Vector r_new(n);
    for (Index j = 0; j < n; ++j) r_new[j] = r0[j] + std::pow(w[j], p - 2.0);

    st.E_by_eta.assign(eta_max + 1, 0);
    std::vector<char> inE(n, 0);
    for (Index j = 0; j < n; ++j) {
      double dr = r_new[j] - r[j];
      int eta = least_eta(dr / r_hat[j], eta_max);
      if (eta < 0) continue;
      st.counters[j][eta] += 1;
      st.drift[j][eta] += dr;
    }
    for (int eta = 0; eta <= eta_max; ++eta) {
      long span = 1L << eta;
      if ((i + 1) % span != 0) continue;
      for (Index j = 0; j < n; ++j) {
        if (st.counters[j][eta] >= span && !inE[j]) {
          inE[j] = 1;
          st.E.push_back(j);
          ++st.E_by_eta[eta];
          ++res.added_per_eta[eta];
        }
      }
    }
    if (!st.E.empty()) {
      std::vector<double> nw;
      Vector Wn = space.gram_weights(r_new);
      for (Index j : st.E) nw.push_back(Wn[j]);
      if (precond.update_weights(st.E, nw, i)) {
        ++res.smw_updates;
      } else {
        st.smw_rejected = true;
        precond.rebuild(Wn, i);
        ++res.rebuilds;
        r_hat = r_new;
        for (auto& row : st.counters) std::fill(row.begin(), row.end(), 0);
        for (auto& row : st.drift) std::fill(row.begin(), row.end(), 0.0);
      }
      for (Index j : st.E) {
        r_hat[j] = r_new[j];
        std::fill(st.counters[j].begin(), st.counters[j].end(), 0);
        std::fill(st.drift[j].begin(), st.drift[j].end(), 0.0);
      }
    }
    r = std::move(r_new);
    res.iterations = i + 1;

    if (observer) {
      st.w = w;
      st.r = r;
      st.r_hat = r_hat;
      observer(st, precond);
    }
    if (config.fixed_iterations <= 0 && res.accepted >= res.target_T) break;
  }
  res.capped = config.fixed_iterations <= 0 && res.accepted < res.target_T;
  if (res.accepted > 0) {
    double k = alpha * static_cast<double>(res.accepted);
    res.primal = sum_primal / k;
    res.y = sum_y / k;
  } else {
    // No width-bounded step was found; fall back to the last-resort energy
    // minimizer at the final resistances so the constraints still hold.
    auto sol = space.solve(r, Vector::Zero(n), z, true);
    res.primal = std::move(sol.primal);
    res.y = std::move(sol.y);
  }
  return res;
}

GammaMinResult gamma_min_newton(const ResidualSpace& space, const Vector& t_in,
                                const Vector& omega_in, double p, double z, int max_iter,
                                double tol) {
  Index n = space.coords();
  Vector omega = omega_in.size() ? omega_in : Vector::Ones(n);
  Vector t = t_in;
  double tmax = t.size() ? t.maxCoeff() : 0.0;
  double tfloor = tmax > 0.0 ? 1e-12 * tmax : 1e-300;
  if (p < 2.0)
    for (Index j = 0; j < n; ++j) t[j] = std::max(t[j], tfloor);
  auto value = [&](const Vector& y) { return gamma_sum(p, t, y, omega); };
  auto curvature = [&](const Vector& y) {
    Vector H(n);
    for (Index j = 0; j < n; ++j) H[j] = omega[j] * gamma_second(p, t[j], y[j]);
    return H;
  };

  GammaMinResult out;
  double rel = 1e-14;
  auto sol = solve_floored(space, curvature(Vector::Zero(n)), Vector::Zero(n), z, true, rel);
  Vector y = std::move(sol.y);
  Vector primal = std::move(sol.primal);
  double f = value(y);
  for (int it = 0; it < max_iter; ++it) {
    Vector grad(n);
    for (Index j = 0; j < n; ++j) grad[j] = omega[j] * gamma_derivative(p, t[j], y[j]);
    Vector H = curvature(y);
    ResidualSpace::Solution h;
    try {
      h = solve_floored(space, H, -grad, 0.0, true, rel);
    } catch (const Infeasible&) {
      break;
    }
    double slope = grad.dot(h.y);
    if (!(slope < 0.0) || -slope <= tol * std::max(f, 1e-300)) break;
    double s = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, s *= 0.5) {
      Vector yn = y + s * h.y;
      double fn = value(yn);
      if (fn <= f + 1e-4 * s * slope) {
        y = std::move(yn);
        primal += s * h.primal;
        f = fn;
        moved = true;
        break;
      }
    }
    ++out.iterations;
    if (!moved) break;
  }
  out.y = std::move(y);
  out.primal = std::move(primal);
  out.value = f;
  return out;
}

namespace {

struct Eval {
  double z = 0.0;
  double value = -std::numeric_limits<double>::infinity();
  Vector primal;
  Vector y;
  bool ok = false;
};

}  // namespace

ZSearchResult approx_via_z_search(const ResidualSpace& space, const Vector& t, double p,
                                  const ZSearchConfig& config, const Vector& omega_in) {
  Index n = space.coords();
  Vector omega = omega_in.size() ? omega_in : Vector::Ones(n);
  double cp = residual_coefficient(p);
  ZSearchResult out;
  out.primal = Vector::Zero(space.primal_dim());
  out.y = Vector::Zero(n);
  if (config.engine == InnerEngine::Mwu && (p < 2.0 || omega_in.size()))
    throw ContractViolation("multiplicative-weights engine needs p >= 2 and unit weights");

  double tmax = t.size() ? t.maxCoeff() : 0.0;
  if (!(tmax > 0.0)) return out;
  Vector tq = t.cwiseMax(1e-12 * tmax);
  Vector Rq(n);
  for (Index j = 0; j < n; ++j) Rq[j] = omega[j] * p * std::pow(tq[j], p - 2.0);
  ResidualSpace::Solution unit;
  try {
    double rel = 1e-14;
    unit = solve_floored(space, Rq, Vector::Zero(n), 1.0, true, rel);
  } catch (const Infeasible&) {
    return out;
  }
  double q1 = 0.5 * unit.y.dot(Rq.cwiseProduct(unit.y));
  if (!(q1 > 0.0) || !std::isfinite(q1)) return out;
  double zc = 1.0 / (2.0 * cp * q1);

  Eval last;
  auto evaluate = [&](double z) {
    Eval e;
    e.z = z;
    try {
      if (config.engine == InnerEngine::Newton) {
        GammaMinResult g = gamma_min_newton(space, t, omega, p, z, config.newton_max_iter,
                                            config.newton_tol);
        out.inner_iterations += g.iterations;
        e.value = z - cp * g.value;
        e.primal = std::move(g.primal);
        e.y = std::move(g.y);
      } else {
        // Rescale so that the optimum is at most 1 and thresholds lie in
        // [n^{-1/p}, 1]; γ_p(st, sy) = s^p γ_p(t, y).
        double ub = gamma_sum(p, t, z * unit.y);
        double s = std::min(1.0 / tmax, std::pow(ub, -1.0 / p));
        double tfl = std::pow(static_cast<double>(n), -1.0 / p);
        Vector ts = (s * t).cwiseMax(tfl);
        MwuResult m = solve_residual(space, ts, p, s * z, config.mwu);
        out.inner_iterations += m.iterations;
        e.primal = m.primal / s;
        e.y = m.y / s;
        e.value = z - cp * gamma_sum(p, t, e.y);
      }
      e.ok = std::isfinite(e.value);
    } catch (const Infeasible&) {
      e.ok = false;
    }
    return e;
  };

  int K = std::max(3, static_cast<int>(std::ceil(config.C_grid * std::log(static_cast<double>(
                                                                     space.primal_dim() + 1)))));
  std::vector<Eval> grid;
  for (int k = 0; k < K; ++k) {
    double z = zc * std::ldexp(1.0, k - K / 2);
    grid.push_back(evaluate(z));
    ++out.grid_calls;
  }
  auto best_index = [&]() {
    std::size_t b = 0;
    for (std::size_t k = 1; k < grid.size(); ++k)
      if (grid[k].value > grid[b].value) b = k;
    return b;
  };
  for (int ext = 0; ext < config.max_extensions; ++ext) {
    std::size_t b = best_index();
    if (b == 0) {
      grid.insert(grid.begin(), evaluate(grid.front().z * 0.5));
    } else if (b + 1 == grid.size()) {
      grid.push_back(evaluate(grid.back().z * 2.0));
    } else {
      break;
    }
    ++out.grid_calls;
  }
  std::size_t b = best_index();
  Eval best = grid[b];
  for (const auto& e : grid) out.grid.emplace_back(e.z, e.value);

  if (config.refine_steps > 0 && b > 0 && b + 1 < grid.size()) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = std::log(grid[b - 1].z), hi = std::log(grid[b + 1].z);
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    Eval e1 = evaluate(std::exp(x1)), e2 = evaluate(std::exp(x2));
    out.refine_calls += 2;
    for (int k = 2; k < config.refine_steps; ++k) {
      if (e1.value >= e2.value) {
        hi = x2;
        x2 = x1;
        e2 = std::move(e1);
        x1 = hi - phi * (hi - lo);
        e1 = evaluate(std::exp(x1));
      } else {
        lo = x1;
        x1 = x2;
        e1 = std::move(e2);
        x2 = lo + phi * (hi - lo);
        e2 = evaluate(std::exp(x2));
      }
      ++out.refine_calls;
    }
    if (e1.value > best.value) best = e1;
    if (e2.value > best.value) best = e2;
  }
  if (!best.ok || !(best.value > 0.0)) return out;
  out.primal = std::move(best.primal);
  out.y = std::move(best.y);
  out.z = best.z;
  out.value = best.value;
  return out;
}

}  // namespace pnreg
