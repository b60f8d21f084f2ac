#pragma once

#include <stdexcept>
#include <string>

namespace pnreg {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

// Out-of-range index or malformed CSR arrays.
struct StructuralError : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string& msg, long line)
      : Error("line " + std::to_string(line) + ": " + msg), line(line) {}
  long line;
};

struct RankDeficient : Error {
  using Error::Error;
};

struct Infeasible : Error {
  using Error::Error;
};

struct ContractViolation : Error {
  using Error::Error;
};

}  // namespace pnreg
