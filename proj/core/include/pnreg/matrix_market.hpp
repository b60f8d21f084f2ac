#pragma once

#include <iosfwd>
#include <string>

#include "pnreg/sparse_core.hpp"

namespace pnreg {

// Coordinate format, real or integer field, general or symmetric.
SparseMatrix read_matrix_market(std::istream& in);
SparseMatrix read_matrix_market(const std::string& path);
void write_matrix_market(const SparseMatrix& A, std::ostream& out);
void write_matrix_market(const SparseMatrix& A, const std::string& path);

// One value per line; blank lines and lines starting with '%' or '#' skipped.
Vector read_vector(std::istream& in);
Vector read_vector(const std::string& path);
void write_vector(const Vector& v, std::ostream& out);
void write_vector(const Vector& v, const std::string& path);

// 17 significant digits, round-trips every double.
std::string format_double(double x);

}  // namespace pnreg
