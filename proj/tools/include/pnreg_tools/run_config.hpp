#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pnreg/pnorm.hpp"

namespace pnreg::tools {

// Bad flags, bad knob values, unreadable config files: exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::uint64_t seed = 0;
  double p = 2.0;
  double eps = 1e-10;
  Method method = Method::DualAuto;
  ProblemForm form = ProblemForm::P1;
  bool sampled = false;
  bool line_search = true;
  int max_outer = 1000;
  double C_h = 0.03;
  double mwu_C = 1.0;
  double mwu_C_alpha = 1.0;
  double spectral_c = 30.0;
  double m_knob = 1.0;
  long rebuild_period = 0;

  std::string A_path, b_path, C_path, v_path, t_path;
  std::string out_path, trace_path;
  std::vector<std::string> only;

  // Keys are the long flag names without dashes, with '-' and '_' equivalent.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  SolverConfig solver_config() const;
};

std::vector<std::string> config_keys();

// Flat key=value lines; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const std::string& path);

// Applies the file named by flags["config"] (if any) and then every flag,
// so flags win over the file.
RunConfig resolve_config(const std::map<std::string, std::string>& flags);

}  // namespace pnreg::tools
