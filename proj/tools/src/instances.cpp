#include "pnreg_tools/instances.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace pnreg::tools {

SparseMatrix random_sparse(Index n, Index d, Index nnz_per_row, SeededRng& rng, RowLaw law) {
  Index k = std::clamp<Index>(nnz_per_row, 1, d);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(n * k));
  std::vector<Index> cols;
  for (Index i = 0; i < n; ++i) {
    cols.assign(1, i % d);
    while (static_cast<Index>(cols.size()) < k) {
      Index c = static_cast<Index>(rng.uniform() * static_cast<double>(d));
      c = std::min(c, d - 1);
      if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
    }
    double scale = 1.0;
    if (law == RowLaw::HeavyTailed) scale = std::pow(1.0 - rng.uniform(), -1.0 / 1.5);
    for (Index c : cols) {
      double v = rng.normal() * scale;
      if (v == 0.0) v = scale;
      trips.push_back({i, c, v});
    }
  }
  return csr_from_triplets(trips, n, d);
}

Vector log_uniform_thresholds(Index n, double decades, SeededRng& rng) {
  Vector t(n);
  for (Index i = 0; i < n; ++i) t[i] = std::pow(10.0, decades * rng.uniform());
  return t;
}

Vector gaussian_vector(Index n, SeededRng& rng) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

RegressionProblem make_p1(Index n, Index d, Index nnz_per_row, double p, SeededRng& rng,
                          Index constraint_rank) {
  RegressionProblem prob;
  prob.form = ProblemForm::P1;
  prob.p = p;
  prob.A = random_sparse(n, d, nnz_per_row, rng);
  Vector x0 = gaussian_vector(d, rng);
  prob.b = matvec(prob.A, x0) + gaussian_vector(n, rng);
  if (constraint_rank > 0) {
    DenseMatrix L(d, constraint_rank), R(constraint_rank, d);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < constraint_rank; ++j) L(i, j) = rng.normal();
    for (Index i = 0; i < constraint_rank; ++i)
      for (Index j = 0; j < d; ++j) R(i, j) = rng.normal();
    prob.C = L * R;
    prob.v = prob.C * gaussian_vector(d, rng);
  }
  return prob;
}

RegressionProblem make_p2(Index n, Index d, Index nnz_per_row, double p, SeededRng& rng) {
  RegressionProblem prob;
  prob.form = ProblemForm::P2;
  prob.p = p;
  prob.A = random_sparse(n, d, nnz_per_row, rng);
  prob.b = matvec_t(prob.A, gaussian_vector(n, rng));
  return prob;
}

}  // namespace pnreg::tools
