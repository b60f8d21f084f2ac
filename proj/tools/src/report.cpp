#include "pnreg_tools/report.hpp"

#include <cmath>

namespace pnreg::tools {

namespace {

// JSON has no infinity; unbounded gaps are written as null.
nlohmann::json number(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

}  // namespace

nlohmann::json vector_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

nlohmann::json report_json(const SolveReport& rep, const RegressionProblem& prob, double eps) {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["form"] = to_string(prob.form);
  j["method"] = rep.method;
  j["status"] = rep.status;
  j["p"] = prob.p;
  j["eps"] = eps;
  j["seed"] = rep.seed;
  j["n"] = prob.A.n_rows();
  j["d"] = prob.A.n_cols();
  j["nnz"] = prob.A.nnz();
  j["objective"] = number(rep.objective);
  j["lower_bound"] = number(rep.lower_bound);
  j["gap"] = number(rep.gap);
  j["certified"] = rep.certified;
  j["outer_iterations"] = rep.outer_iterations;
  j["residual_calls"] = rep.residual_calls;
  j["inner_iterations"] = rep.inner_iterations;
  j["constraint_residual"] = number(rep.constraint_residual);
  j["step_floor"] = rep.lambda;
  j["objective_history"] = nlohmann::json::array();
  for (double f : rep.objective_history) j["objective_history"].push_back(number(f));
  if (!rep.phase_values.empty()) {
    j["phase_values"] = nlohmann::json::array();
    for (double f : rep.phase_values) j["phase_values"].push_back(number(f));
  }
  j["solution"] = vector_json(rep.solution);
  j["timing"] = {{"seconds", rep.seconds}};
  return j;
}

nlohmann::json trace_json(const TraceEvent& ev) {
  return {{"phase", ev.phase},
          {"iteration", ev.iteration},
          {"objective", number(ev.objective)},
          {"lower_bound", number(ev.lower_bound)},
          {"gap", number(ev.gap)},
          {"step", number(ev.step)},
          {"z", number(ev.z)},
          {"residual_calls", ev.residual_calls},
          {"inner_iterations", ev.inner_iterations},
          {"sample_size", ev.sample_size}};
}

nlohmann::json strip_timing(nlohmann::json report) {
  report.erase("timing");
  return report;
}

}  // namespace pnreg::tools
