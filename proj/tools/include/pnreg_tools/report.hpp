#pragma once

#include <json.hpp>

#include "pnreg/pnorm.hpp"

namespace pnreg::tools {

inline constexpr const char* kReportSchema = "pnreg.solve-report/1";

// Wall-clock data lives under "timing" so reports can be compared without it.
nlohmann::json report_json(const SolveReport& rep, const RegressionProblem& prob, double eps);
nlohmann::json trace_json(const TraceEvent& ev);
nlohmann::json strip_timing(nlohmann::json report);

nlohmann::json vector_json(const Vector& v);

}  // namespace pnreg::tools
