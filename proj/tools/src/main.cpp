#include <iostream>
#include <string>
#include <vector>

#include "pnreg_tools/acceptance.hpp"
#include "pnreg_tools/commands.hpp"

namespace {

void usage(std::ostream& os) {
  os << "usage: pnreg <command> [flags]\n\n"
        "commands:\n"
        "  solve         solve a p-norm regression problem (JSON report)\n"
        "  sparsify      spectral approximation by row sampling (JSON)\n"
        "  leverage      leverage scores or Lewis weights (JSON)\n"
        "  gamma-sample  row sample preserving smoothed q-norms (JSON)\n"
        "  bench         benchmark sweep (CSV)\n"
        "  verify        acceptance suite (pass/fail table)\n\n"
        "run 'pnreg <command> --help' for flags\n";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace pnreg::tools;
  if (argc < 2) {
    usage(std::cerr);
    return 2;
  }
  std::string cmd = argv[1];
  Args args(argv + 2, argv + argc);
  if (cmd == "-h" || cmd == "--help" || cmd == "help") {
    usage(std::cout);
    return 0;
  }
  if (cmd == "solve") return cmd_solve(args, std::cout, std::cerr);
  if (cmd == "sparsify") return cmd_sparsify(args, std::cout, std::cerr);
  if (cmd == "leverage") return cmd_leverage(args, std::cout, std::cerr);
  if (cmd == "gamma-sample") return cmd_gamma_sample(args, std::cout, std::cerr);
  if (cmd == "bench") return cmd_bench(args, std::cout, std::cerr);
  if (cmd == "verify") return cmd_verify(args, std::cout, std::cerr);
  std::cerr << "unknown command '" << cmd << "'\n";
  usage(std::cerr);
  return 2;
}
