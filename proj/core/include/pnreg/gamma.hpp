#pragma once

#include <vector>

#include "pnreg/leverage.hpp"
#include "pnreg/sparse_core.hpp"

namespace pnreg {

// (p/2)t^{p-2}x² for |x| ≤ t, |x|^p + (p/2 − 1)t^p otherwise.
double gamma_value(double p, double t, double x);
double gamma_derivative(double p, double t, double x);
// Second derivative away from |x| = t (the right limit is used at the kink).
double gamma_second(double p, double t, double x);

double gamma_sum(double p, const Vector& t, const Vector& x);
double gamma_sum(double p, const Vector& t, const Vector& x, const Vector& weights);
Vector gamma_gradient(double p, const Vector& t, const Vector& x);

struct ExtensionValue {
  double value = 0.0;
  double derivative = 0.0;
  double second = 0.0;
};

// γ_p(t, ·) on [ℓ, u], continued outside by its second-order Taylor
// expansion at the nearer endpoint.
ExtensionValue quadratic_extension(double p, double t, double lo, double hi, double s);

// Inequalities satisfied by γ_p, each evaluated with a relative slack.
namespace gamma_bounds {

// |t|^p + ly + ((p−1)/(p2^p))γ_p(|t|,y) ≤ |t+y|^p ≤ |t|^p + ly + 2^pγ_p(|t|,y)
bool expansion_sandwich(double p, double t, double y, double slack);
// min{λ²,λ^p}γ_p(t,y) ≤ γ_p(t,λy) ≤ max{λ²,λ^p}γ_p(t,y)
bool scaling_sandwich(double p, double t, double y, double lambda, double slack);
// r·γ_q(t,y) = γ_q(r^{1/q}t, r^{1/q}y)
bool homogeneity(double q, double t, double y, double r, double slack);
// q ≥ 2: t^{q−2}y² + |y|^q ≤ 2γ_q(t,y) ≤ q(t^{q−2}y² + |y|^q)
bool two_sided(double q, double t, double y, double slack);
// t ≥ 1, ‖y−ỹ‖₁ ≤ α, ‖y‖₁ ≤ θ: Σ|γ_q(tᵢ,ỹᵢ) − γ_q(tᵢ,yᵢ)| ≤ 4nα(α+θ)
bool perturbation(double q, const Vector& t, const Vector& y, const Vector& y_tilde,
                  double slack);
// 1 ≤ t ≤ β: Σγ_q(tᵢ,yᵢ) ≥ min{‖y‖₂²/(8β), ‖y‖_q^q/(8n)}
bool lower_bound(double q, const Vector& t, const Vector& y, double slack);
// Value and slope agree from both sides at |x| = t.
bool c1_at_threshold(double p, double t, double tol);

}  // namespace gamma_bounds

// T_j = {i : 2^{j−1}β ≤ tᵢ < 2^jβ}, β = min tᵢ over the active set.
struct BucketedRows {
  double beta = 0.0;
  int eta = 0;
  std::vector<std::vector<Index>> buckets;  // buckets[j-1] = T_j
};

BucketedRows bucket_rows(const Vector& t, const std::vector<Index>& active);

struct GammaSampleConfig {
  double C_h = 0.03;   // h = C_h·d·ln n when h <= 0
  double h = 0.0;
  int rounds = -1;     // -1: ⌈log₂log₂ n⌉
};

struct GammaSampleResult {
  RowSample sample;       // weights are the row scales w^{1/q}
  Vector w;               // Π 1/pᵢ for survivors, 0 otherwise
  Vector t_scaled;        // w^{1/q}·t on the support, 0 elsewhere
  std::vector<Index> support_sizes;  // |T⁽ᵏ⁾| for k = 1..z+1
  std::vector<int> bucket_counts;
  double h = 0.0;
  int rounds = 0;
  bool empty = false;
};

double default_oversampling(const GammaSampleConfig& config, Index n, Index d);

GammaSampleResult gamma_sample(const SparseMatrix& A, const Vector& t, double q,
                               const GammaSampleConfig& config, SeededRng& rng);

struct PreservationConfig {
  int trials = 500;
  double norm_lo = 0.0;   // 0: 1e-3·min t / max‖aᵢ‖
  double norm_hi = 0.0;   // 0: 1e3·max t / min nonzero ‖aᵢ‖
  double threshold = 0.75;
};

struct PreservationStats {
  int trials = 0;
  double max_deviation = 0.0;
  double mean_deviation = 0.0;
  double p99_deviation = 0.0;
  int failures = 0;  // deviation > threshold
  std::vector<double> deviations;
};

PreservationStats gamma_preservation_report(const SparseMatrix& A, const Vector& t, double q,
                                            const Vector& w, SeededRng& rng,
                                            const PreservationConfig& config = {});

}  // namespace pnreg
