#include <algorithm>
#include <cmath>

#include "pnreg/gamma.hpp"

namespace pnreg {

BucketedRows bucket_rows(const Vector& t, const std::vector<Index>& active) {
  BucketedRows b;
  if (active.empty()) return b;
  double lo = t[active.front()], hi = lo;
  for (Index i : active) {
    lo = std::min(lo, t[i]);
    hi = std::max(hi, t[i]);
  }
  if (!(lo > 0.0)) throw ContractViolation("bucket_rows: thresholds must be positive");
  b.beta = lo;
  b.eta = static_cast<int>(std::ceil(std::log2(hi / lo))) + 1;
  b.buckets.assign(b.eta, {});
  for (Index i : active) {
    // j with 2^{j-1}β ≤ tᵢ < 2^jβ
    int j = static_cast<int>(std::floor(std::log2(t[i] / lo))) + 1;
    while (j > 1 && t[i] < std::ldexp(lo, j - 1)) --j;
    while (j < b.eta && t[i] >= std::ldexp(lo, j)) ++j;
    j = std::clamp(j, 1, b.eta);
    b.buckets[j - 1].push_back(i);
  }
  return b;
}

double default_oversampling(const GammaSampleConfig& config, Index n, Index d) {
  if (config.h > 0.0) return config.h;
  return config.C_h * static_cast<double>(d) * std::log(static_cast<double>(std::max<Index>(n, 2)));
}

GammaSampleResult gamma_sample(const SparseMatrix& A, const Vector& t, double q,
                               const GammaSampleConfig& config, SeededRng& rng) {
  Index n = A.n_rows(), d = A.n_cols();
  if (t.size() != n) throw DimensionMismatch("gamma_sample: t length != rows");
  if (!(q > 1.0 && q <= 2.0)) throw ContractViolation("gamma_sample: q must lie in (1, 2]");
  for (Index i = 0; i < n; ++i)
    if (!(t[i] >= 1.0)) throw ContractViolation("gamma_sample: thresholds must be >= 1");

  GammaSampleResult res;
  res.h = default_oversampling(config, n, d);
  double ln = std::log2(std::max(2.0, static_cast<double>(n)));
  res.rounds = config.rounds >= 0
                   ? config.rounds
                   : static_cast<int>(std::ceil(std::log2(std::max(ln, 1.0))));
  double floor_p = 1.0 / static_cast<double>(std::max<Index>(n, 1));

  Vector w = Vector::Ones(n);
  Vector scale = Vector::Ones(n);  // (Π 1/p)^{1/q}
  Vector tk = t;
  std::vector<Index> active(n);
  for (Index i = 0; i < n; ++i) active[i] = i;
  res.support_sizes.push_back(n);

  for (int k = 0; k < res.rounds && !active.empty(); ++k) {
    BucketedRows b = bucket_rows(tk, active);
    res.bucket_counts.push_back(b.eta);
    SeededRng draws = rng.split();
    std::vector<Index> next;
    for (const auto& bucket : b.buckets) {
      if (bucket.empty()) continue;
      Vector tau;
      if (bucket.size() == 1) {
        tau = Vector::Ones(1);
      } else {
        std::vector<double> sc(bucket.size());
        for (std::size_t r = 0; r < bucket.size(); ++r) sc[r] = scale[bucket[r]];
        tau = leverage_scores_exact(A.select_rows(bucket, sc)).values;
      }
      for (std::size_t r = 0; r < bucket.size(); ++r) {
        Index i = bucket[r];
        double p = std::min(1.0, std::max(floor_p, res.h * std::sqrt(std::max(tau[r], 0.0))));
        if (p >= 1.0 || draws.uniform_at(static_cast<std::uint64_t>(i)) < p) {
          double f = std::pow(1.0 / p, 1.0 / q);
          w[i] /= p;
          scale[i] *= f;
          tk[i] *= f;
          next.push_back(i);
        }
      }
    }
    std::sort(next.begin(), next.end());
    active = std::move(next);
    res.support_sizes.push_back(static_cast<Index>(active.size()));
  }

  res.w = Vector::Zero(n);
  res.t_scaled = Vector::Zero(n);
  res.sample.kind = SampleKind::Gamma;
  res.sample.q = q;
  res.sample.n_source = n;
  for (Index i : active) {
    res.w[i] = w[i];
    res.t_scaled[i] = tk[i];
    res.sample.indices.push_back(i);
    res.sample.weights.push_back(scale[i]);
    res.sample.probabilities.push_back(1.0 / w[i]);
  }
  res.empty = active.empty();
  return res;
}

PreservationStats gamma_preservation_report(const SparseMatrix& A, const Vector& t, double q,
                                            const Vector& w, SeededRng& rng,
                                            const PreservationConfig& config) {
  Index n = A.n_rows(), d = A.n_cols();
  if (w.size() != n || t.size() != n) throw DimensionMismatch("preservation: lengths");
  double rmax = 0.0, rmin = INFINITY;
  for (Index i = 0; i < n; ++i) {
    double r = std::sqrt(A.row_norm2(i));
    rmax = std::max(rmax, r);
    if (r > 0.0) rmin = std::min(rmin, r);
  }
  if (!(rmax > 0.0)) rmin = rmax = 1.0;
  double lo = config.norm_lo > 0.0 ? config.norm_lo : 1e-3 * t.minCoeff() / rmax;
  double hi = config.norm_hi > 0.0 ? config.norm_hi : 1e3 * t.maxCoeff() / rmin;
  PreservationStats st;
  st.trials = config.trials;
  Vector x(d);
  for (int k = 0; k < config.trials; ++k) {
    for (Index j = 0; j < d; ++j) x[j] = rng.normal();
    double target = std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
    x *= target / x.norm();
    Vector y = matvec(A, x);
    double full = gamma_sum(q, t, y);
    double sampled = gamma_sum(q, t, y, w);
    double dev = full > 0.0 ? std::abs(sampled - full) / full : (sampled == 0.0 ? 0.0 : INFINITY);
    st.deviations.push_back(dev);
    st.max_deviation = std::max(st.max_deviation, dev);
    st.mean_deviation += dev;
    if (dev > config.threshold) ++st.failures;
  }
  if (st.trials > 0) {
    st.mean_deviation /= st.trials;
    std::vector<double> s = st.deviations;
    std::sort(s.begin(), s.end());
    std::size_t k = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(s.size()))) - 1;
    st.p99_deviation = s[std::min(k, s.size() - 1)];
  }
  return st;
}

}  // namespace pnreg
