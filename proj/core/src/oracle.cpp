#include "pnreg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pnreg::oracle {

namespace {

void guard(Eigen::Index n, Eigen::Index d, const char* who) {
  if (n > 4096 || d > 512) throw std::invalid_argument(std::string(who) + ": instance too large");
}

// φ_μ(r) = (r² + μ²)^{p/2}
double phi(double p, double mu, double r) { return std::pow(r * r + mu * mu, 0.5 * p); }
double dphi(double p, double mu, double r) {
  return p * r * std::pow(r * r + mu * mu, 0.5 * p - 1.0);
}
double ddphi(double p, double mu, double r) {
  double s = r * r + mu * mu;
  return p * std::pow(s, 0.5 * p - 2.0) * ((p - 1.0) * r * r + mu * mu);
}

double smoothed(double p, double mu, const Vec& r) {
  double f = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) f += phi(p, mu, r[i]);
  return f;
}

double abs_pow_sum(double p, const Vec& r) {
  double f = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) f += std::pow(std::abs(r[i]), p);
  return f;
}

double gam(double p, double t, double x) {
  double a = std::abs(x);
  if (a <= t) return 0.5 * p * std::pow(t, p - 2.0) * x * x;
  return std::pow(a, p) + (0.5 * p - 1.0) * std::pow(t, p);
}
double dgam(double p, double t, double x) {
  double a = std::abs(x);
  if (a <= t) return p * std::pow(t, p - 2.0) * x;
  return p * std::copysign(std::pow(a, p - 1.0), x);
}
double ddgam(double p, double t, double x) {
  double a = std::abs(x);
  if (a <= t) return p * std::pow(t, p - 2.0);
  return p * (p - 1.0) * std::pow(a, p - 2.0);
}

}  // namespace

Mat pseudoinverse(const Mat& A, double rcond) {
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vec s = svd.singularValues();
  double cut = s.size() ? rcond * s[0] : 0.0;
  Vec sinv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) sinv[i] = s[i] > cut ? 1.0 / s[i] : 0.0;
  return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
}

KktResult kkt_solve(const Vec& R, const Mat& A, const Vec& g, double z) {
  const Eigen::Index n = A.rows(), d = A.cols();
  if (n > 500) throw std::invalid_argument("kkt_solve: n must be <= 500");
  const Eigen::Index m = n + d + 1;
  Mat K = Mat::Zero(m, m);
  K.topLeftCorner(n, n) = R.asDiagonal();
  K.block(0, n, n, d) = A;
  K.block(n, 0, d, n) = A.transpose();
  K.block(0, n + d, n, 1) = g;
  K.block(n + d, 0, 1, n) = g.transpose();
  Vec rhs = Vec::Zero(m);
  rhs[n + d] = z;
  Eigen::FullPivLU<Mat> lu(K);
  lu.setThreshold(1e-13);
  KktResult out;
  if (lu.rank() < m) out.tag = "degenerate";
  Vec sol = lu.solve(rhs);
  // one step of iterative refinement
  sol += lu.solve(rhs - K * sol);
  out.delta = sol.head(n);
  out.objective = 0.5 * out.delta.dot(R.cwiseProduct(out.delta));
  out.null_residual = d ? (A.transpose() * out.delta).cwiseAbs().maxCoeff() : 0.0;
  out.budget_residual = std::abs(g.dot(out.delta) - z);
  return out;
}

OracleResult pnorm_oracle(const Mat& A, const Vec& b, const Mat& C, const Vec& v, double p,
                          double tol, const Vec& start) {
  const Eigen::Index n = A.rows(), d = A.cols();
  guard(n, d, "pnorm_oracle");
  if (!(p > 1.0)) throw std::invalid_argument("pnorm_oracle: p must be > 1");
  Mat N;
  Vec xp = Vec::Zero(d);
  if (C.size()) {
    Eigen::JacobiSVD<Mat> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec s = svd.singularValues();
    Eigen::Index k = 0;
    while (s.size() && k < s.size() && s[k] > 1e-12 * s[0]) ++k;
    xp = svd.matrixV().leftCols(k) *
         (svd.matrixU().leftCols(k).transpose() * v).cwiseQuotient(s.head(k));
    N = svd.matrixV().rightCols(d - k);
  } else {
    N = Mat::Identity(d, d);
  }
  Mat AN = A * N;
  Vec c = b - A * xp;
  Vec xi;
  if (start.size()) {
    xi = N.transpose() * (start - xp);
  } else {
    xi = N.cols() ? Vec(AN.colPivHouseholderQr().solve(c)) : Vec();
  }

  OracleResult out;
  out.method = p == 2.0 ? "normal-equations" : "smoothed-newton";
  Mat H;
  double last_dec = 0.0;
  if (p != 2.0 && N.cols() > 0) {
    Vec r = AN * xi - c;
    double scale = std::max(r.cwiseAbs().maxCoeff(), 1e-300);
    double mu = scale, mu_end = 1e-14 * scale;
    while (true) {
      for (int it = 0; it < 200; ++it) {
        r = AN * xi - c;
        Vec d1(n), d2(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          d1[i] = dphi(p, mu, r[i]);
          d2[i] = ddphi(p, mu, r[i]);
        }
        Vec G = AN.transpose() * d1;
        H = AN.transpose() * d2.asDiagonal() * AN;
        Vec step = H.ldlt().solve(G);
        double dec = G.dot(step);
        double F = smoothed(p, mu, r);
        last_dec = dec / std::max(F, std::numeric_limits<double>::min());
        ++out.iterations;
        if (!(dec > 1e-28 * F)) break;
        double s = 1.0;
        Vec y = AN * step;
        bool moved = false;
        for (int k = 0; k < 80; ++k) {
          if (smoothed(p, mu, r - s * y) <= F - 1e-4 * s * dec) {
            moved = true;
            break;
          }
          s *= 0.5;
        }
        if (!moved) break;
        xi -= s * step;
        if (s == 1.0 && dec < 1e-22 * F) break;
      }
      if (mu <= mu_end) break;
      mu = std::max(0.1 * mu, mu_end);
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
    out.convex_certificate = es.eigenvalues()[0] >= -1e-12 * std::abs(es.eigenvalues().maxCoeff());
  } else {
    out.convex_certificate = true;
  }
  out.x = N.cols() ? Vec(xp + N * xi) : xp;
  Vec r = A * out.x - b;
  out.value = abs_pow_sum(p, r);
  out.tolerance = 0.5 * last_dec;
  out.converged = out.tolerance <= std::max(tol, 1e-20) && std::isfinite(out.value);
  return out;
}

OracleResult min_norm_oracle(const Mat& A, const Vec& b, double p, double tol, const Vec& start) {
  const Eigen::Index n = A.rows(), d = A.cols();
  guard(n, d, "min_norm_oracle");
  if (!(p > 1.0)) throw std::invalid_argument("min_norm_oracle: p must be > 1");
  Eigen::LDLT<Mat> AtA(A.transpose() * A);
  auto project = [&](const Vec& x) { return Vec(x - A * AtA.solve(A.transpose() * x - b)); };
  Vec x = start.size() ? project(start) : Vec(A * AtA.solve(b));
  x = project(x);

  OracleResult out;
  out.method = p == 2.0 ? "pseudoinverse" : "schur-newton";
  out.convex_certificate = true;
  double last_dec = 0.0;
  if (p != 2.0 && b.norm() > 0.0) {
    double scale = std::max(x.cwiseAbs().maxCoeff(), 1e-300);
    double mu = scale, mu_end = 1e-14 * scale;
    while (true) {
      for (int it = 0; it < 200; ++it) {
        Vec g(n), h(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          g[i] = dphi(p, mu, x[i]);
          h[i] = ddphi(p, mu, x[i]);
        }
        Vec hinv = h.cwiseInverse();
        Mat S = A.transpose() * hinv.asDiagonal() * A;
        Vec nu = -S.ldlt().solve(A.transpose() * hinv.cwiseProduct(g));
        Vec step = -hinv.cwiseProduct(g + A * nu);
        double dec = -g.dot(step);
        double F = smoothed(p, mu, x);
        last_dec = dec / std::max(F, std::numeric_limits<double>::min());
        ++out.iterations;
        if (!(dec > 1e-28 * F)) break;
        double s = 1.0;
        bool moved = false;
        for (int k = 0; k < 80; ++k) {
          if (smoothed(p, mu, x + s * step) <= F - 1e-4 * s * dec) {
            moved = true;
            break;
          }
          s *= 0.5;
        }
        if (!moved) break;
        x += s * step;
        if (s == 1.0 && dec < 1e-22 * F) break;
      }
      x = project(x);
      if (mu <= mu_end) break;
      mu = std::max(0.1 * mu, mu_end);
    }
  }
  out.x = x;
  out.value = abs_pow_sum(p, x);
  out.tolerance = 0.5 * last_dec;
  out.converged = out.tolerance <= std::max(tol, 1e-20) && std::isfinite(out.value);
  return out;
}

OracleResult gamma_min_oracle(const Mat& A, const Vec& g, double z, const Vec& t,
                              const Vec& omega, double p, double tol) {
  const Eigen::Index n = A.rows(), d = A.cols();
  guard(n, d, "gamma_min_oracle");
  Mat B(n, d + 1);
  B << A, g;
  Vec e = Vec::Zero(d + 1);
  e[d] = z;
  Eigen::LDLT<Mat> BtB(B.transpose() * B);
  Vec y = B * BtB.solve(e);
  y -= B * BtB.solve(B.transpose() * y - e);
  auto value = [&](const Vec& yy) {
    double f = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) f += omega[i] * gam(p, t[i], yy[i]);
    return f;
  };
  OracleResult out;
  out.method = "kkt-newton";
  out.convex_certificate = true;
  double last_dec = 0.0;
  for (int it = 0; it < 400; ++it) {
    Vec gr(n), h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      gr[i] = omega[i] * dgam(p, t[i], y[i]);
      h[i] = omega[i] * ddgam(p, t[i], y[i]);
    }
    double hmax = h.maxCoeff();
    h = h.cwiseMax(1e-14 * hmax);
    Vec hinv = h.cwiseInverse();
    Mat S = B.transpose() * hinv.asDiagonal() * B;
    Vec nu = -S.ldlt().solve(B.transpose() * hinv.cwiseProduct(gr));
    Vec step = -hinv.cwiseProduct(gr + B * nu);
    double dec = -gr.dot(step);
    double F = value(y);
    last_dec = dec / std::max(F, std::numeric_limits<double>::min());
    ++out.iterations;
    if (!(dec > 1e-30 * F)) break;
    double s = 1.0;
    bool moved = false;
    for (int k = 0; k < 80; ++k) {
      if (value(y + s * step) <= F - 1e-4 * s * dec) {
        moved = true;
        break;
      }
      s *= 0.5;
    }
    if (!moved) break;
    y += s * step;
  }
  out.x = y;
  out.value = value(y);
  out.tolerance = 0.5 * last_dec;
  out.converged = out.tolerance <= std::max(tol, 1e-20);
  return out;
}

FdResult finite_difference(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  const Eigen::Index n = x.size();
  FdResult out;
  out.gradient.resize(n);
  out.error.resize(n);
  auto central = [&](Eigen::Index i, double hh) {
    Vec xp = x, xm = x;
    xp[i] += hh;
    xm[i] -= hh;
    return (f(xp) - f(xm)) / (2.0 * hh);
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    double hi = h * std::max(1.0, std::abs(x[i]));
    double D1 = central(i, hi), D2 = central(i, 0.5 * hi), D3 = central(i, 0.25 * hi);
    double R1 = (4.0 * D2 - D1) / 3.0, R2 = (4.0 * D3 - D2) / 3.0;
    double R = (16.0 * R2 - R1) / 15.0;
    out.gradient[i] = R;
    out.error[i] = std::abs(R - D3);
  }
  return out;
}

}  // namespace pnreg::oracle
