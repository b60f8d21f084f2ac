#include <algorithm>
#include <cmath>

#include "pnreg/gamma.hpp"

namespace pnreg {

double gamma_value(double p, double t, double x) {
  double ax = std::abs(x);
  if (ax == 0.0) return 0.0;
  if (ax <= t) return 0.5 * p * std::pow(t, p - 2.0) * x * x;
  return std::pow(ax, p) + (0.5 * p - 1.0) * std::pow(t, p);
}

double gamma_derivative(double p, double t, double x) {
  double ax = std::abs(x);
  if (ax == 0.0) return 0.0;
  if (ax <= t) return p * std::pow(t, p - 2.0) * x;
  return p * std::copysign(std::pow(ax, p - 1.0), x);
}

double gamma_second(double p, double t, double x) {
  double ax = std::abs(x);
  if (ax <= t && t > 0.0) return p * std::pow(t, p - 2.0);
  return p * (p - 1.0) * std::pow(ax, p - 2.0);
}

namespace {

// Curvature at x seen from the side dir (−1 left, +1 right).
double second_from(double p, double t, double x, int dir) {
  double ax = std::abs(x);
  if (ax != t || t == 0.0) return gamma_second(p, t, x);
  bool inward = (x > 0.0) == (dir < 0);
  return inward ? p * std::pow(t, p - 2.0) : p * (p - 1.0) * std::pow(ax, p - 2.0);
}

}  // namespace

double gamma_sum(double p, const Vector& t, const Vector& x) {
  if (t.size() != x.size()) throw DimensionMismatch("gamma_sum: lengths");
  double s = 0.0;
  for (Index i = 0; i < x.size(); ++i) s += gamma_value(p, t[i], x[i]);
  return s;
}

double gamma_sum(double p, const Vector& t, const Vector& x, const Vector& weights) {
  if (t.size() != x.size() || weights.size() != x.size())
    throw DimensionMismatch("gamma_sum: lengths");
  double s = 0.0;
  for (Index i = 0; i < x.size(); ++i)
    if (weights[i] != 0.0) s += weights[i] * gamma_value(p, t[i], x[i]);
  return s;
}

Vector gamma_gradient(double p, const Vector& t, const Vector& x) {
  if (t.size() != x.size()) throw DimensionMismatch("gamma_gradient: lengths");
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) g[i] = gamma_derivative(p, t[i], x[i]);
  return g;
}

ExtensionValue quadratic_extension(double p, double t, double lo, double hi, double s) {
  if (lo > hi) throw ContractViolation("quadratic_extension: lower bound exceeds upper");
  ExtensionValue v;
  if (s >= lo && s <= hi) {
    v.value = gamma_value(p, t, s);
    v.derivative = gamma_derivative(p, t, s);
    v.second = gamma_second(p, t, s);
    return v;
  }
  double c = s > hi ? hi : lo;
  int dir = s > hi ? -1 : 1;
  double f0 = gamma_value(p, t, c), f1 = gamma_derivative(p, t, c);
  double f2 = second_from(p, t, c, dir);
  double h = s - c;
  v.value = f0 + f1 * h + 0.5 * f2 * h * h;
  v.derivative = f1 + f2 * h;
  v.second = f2;
  return v;
}

namespace gamma_bounds {

namespace {

bool le(double a, double b, double slack) {
  return a <= b + slack * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

bool expansion_sandwich(double p, double t, double y, double slack) {
  double at = std::abs(t);
  double base = std::pow(at, p);
  double l = p * std::pow(at, p - 2.0) * t;
  if (t == 0.0) l = 0.0;
  double g = gamma_value(p, at, y);
  double mid = std::pow(std::abs(t + y), p);
  double lower = base + l * y + (p - 1.0) / (p * std::pow(2.0, p)) * g;
  double upper = base + l * y + std::pow(2.0, p) * g;
  // Cancellation in base + l·y is at the scale of the largest summand.
  double scale = std::max({base, std::abs(l * y), mid, g, 1e-300});
  return lower <= mid + slack * scale && mid <= upper + slack * scale;
}

bool scaling_sandwich(double p, double t, double y, double lambda, double slack) {
  double g = gamma_value(p, std::abs(t), y);
  double gl = gamma_value(p, std::abs(t), lambda * y);
  double a = lambda * lambda, b = std::pow(lambda, p);
  return le(std::min(a, b) * g, gl, slack) && le(gl, std::max(a, b) * g, slack);
}

bool homogeneity(double q, double t, double y, double r, double slack) {
  double s = std::pow(r, 1.0 / q);
  double lhs = r * gamma_value(q, t, y);
  double rhs = gamma_value(q, s * t, s * y);
  return std::abs(lhs - rhs) <= slack * std::max({std::abs(lhs), std::abs(rhs), 1e-300});
}

bool two_sided(double q, double t, double y, double slack) {
  double m = std::pow(t, q - 2.0) * y * y + std::pow(std::abs(y), q);
  double g2 = 2.0 * gamma_value(q, t, y);
  return le(m, g2, slack) && le(g2, q * m, slack);
}

bool perturbation(double q, const Vector& t, const Vector& y, const Vector& y_tilde,
                  double slack) {
  double alpha = (y - y_tilde).lpNorm<1>();
  double theta = y.lpNorm<1>();
  double lhs = 0.0;
  for (Index i = 0; i < y.size(); ++i)
    lhs += std::abs(gamma_value(q, t[i], y_tilde[i]) - gamma_value(q, t[i], y[i]));
  double rhs = 4.0 * static_cast<double>(y.size()) * alpha * (alpha + theta);
  return le(lhs, rhs, slack);
}

bool lower_bound(double q, const Vector& t, const Vector& y, double slack) {
  double beta = t.maxCoeff();
  double n = static_cast<double>(y.size());
  double lhs = gamma_sum(q, t, y);
  double yq = 0.0;
  for (Index i = 0; i < y.size(); ++i) yq += std::pow(std::abs(y[i]), q);
  double rhs = std::min(y.squaredNorm() / (8.0 * beta), yq / (8.0 * n));
  return le(rhs, lhs, slack);
}

bool c1_at_threshold(double p, double t, double tol) {
  double in_v = 0.5 * p * std::pow(t, p - 2.0) * t * t;
  double out_v = std::pow(t, p) + (0.5 * p - 1.0) * std::pow(t, p);
  double in_d = p * std::pow(t, p - 2.0) * t;
  double out_d = p * std::pow(t, p - 1.0);
  double sv = std::max(std::abs(in_v), 1e-300), sd = std::max(std::abs(in_d), 1e-300);
  return std::abs(in_v - out_v) <= tol * sv && std::abs(in_d - out_d) <= tol * sd;
}

}  // namespace gamma_bounds

}  // namespace pnreg
