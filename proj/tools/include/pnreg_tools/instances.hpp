#pragma once

#include "pnreg/pnorm.hpp"
#include "pnreg/rng.hpp"
#include "pnreg/sparse_core.hpp"

namespace pnreg::tools {

enum class RowLaw { Gaussian, HeavyTailed };

// Row i touches column i mod d plus nnz_per_row − 1 further distinct columns.
// Heavy-tailed rows are rescaled by a Pareto(1.5) factor.
SparseMatrix random_sparse(Index n, Index d, Index nnz_per_row, SeededRng& rng,
                           RowLaw law = RowLaw::Gaussian);

// tᵢ = 10^{U(0, decades)}
Vector log_uniform_thresholds(Index n, double decades, SeededRng& rng);

Vector gaussian_vector(Index n, SeededRng& rng);

// b = A·x₀ + noise. With constraint_rank > 0 a random rank-deficient C
// and a consistent v = C·x₁ are attached.
RegressionProblem make_p1(Index n, Index d, Index nnz_per_row, double p, SeededRng& rng,
                          Index constraint_rank = 0);
// b = Aᵀx₀.
RegressionProblem make_p2(Index n, Index d, Index nnz_per_row, double p, SeededRng& rng);

}  // namespace pnreg::tools
