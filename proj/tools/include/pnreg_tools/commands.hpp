#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "pnreg/sparse_core.hpp"

namespace pnreg::tools {

using Args = std::vector<std::string>;

// Each command returns 0 on success, 1 on solve/verification failure and 2
// on usage errors.
int cmd_solve(const Args& args, std::ostream& out, std::ostream& err);
int cmd_sparsify(const Args& args, std::ostream& out, std::ostream& err);
int cmd_leverage(const Args& args, std::ostream& out, std::ostream& err);
int cmd_gamma_sample(const Args& args, std::ostream& out, std::ostream& err);
int cmd_bench(const Args& args, std::ostream& out, std::ostream& err);

// Parses --key value flags restricted to keys (plus --config and --help).
// Returns -1 to continue, otherwise the exit code to return.
int parse_flags(const std::string& command, const std::string& description,
                const std::vector<std::string>& keys, const Args& args,
                std::map<std::string, std::string>& flags, std::ostream& out, std::ostream& err);

inline constexpr const char* kBenchHeader =
    "instance,method,nnz,n,d,p,iterations,seconds,seconds_per_iteration,objective_gap,status";

struct ScalingPoint {
  Index nnz = 0;
  int iterations = 0;
  double seconds = 0.0;
  double per_iteration = 0.0;
};

// Times preconditioned Richardson least-squares iterations on a random
// n×d matrix with nnz_per_row entries per row; best of `repeats`.
ScalingPoint measure_richardson_scaling(Index n, Index d, Index nnz_per_row, std::uint64_t seed,
                                        int iterations, int repeats);

}  // namespace pnreg::tools
