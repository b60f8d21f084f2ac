#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pnreg_tools/commands.hpp"
#include "pnreg_tools/run_config.hpp"

namespace pnreg::tools {

struct CriterionResult {
  int id = 0;
  std::string key;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double budget = 0.0;  // wall-clock limit in seconds, part of the pass condition
};

struct Criterion {
  int id;
  std::string key;
  double budget;
  std::function<CriterionResult(const RunConfig&)> run;
};

const std::vector<Criterion>& acceptance_criteria();

// Accepts criterion keys ("gamma"), ids ("3") or "AC3". Throws UsageError.
std::vector<int> select_criteria(const std::vector<std::string>& only);

// Runs the selected criteria, printing one line per criterion as it finishes.
std::vector<CriterionResult> run_acceptance(const RunConfig& knobs, const std::vector<int>& ids,
                                            std::ostream& out);

std::string format_result(const CriterionResult& r);

int cmd_verify(const Args& args, std::ostream& out, std::ostream& err);

}  // namespace pnreg::tools
