#include "pnreg/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pnreg {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

SparseMatrix read_matrix_market(std::istream& in) {
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty input", 1);
  ++lineno;
  std::istringstream hs(line);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") throw ParseError("missing %%MatrixMarket banner", lineno);
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (object != "matrix") throw ParseError("object must be 'matrix'", lineno);
  if (format != "coordinate") throw ParseError("only coordinate format is supported", lineno);
  if (field != "real" && field != "integer" && field != "double")
    throw ParseError("unsupported field '" + field + "'", lineno);
  if (symmetry != "general" && symmetry != "symmetric")
    throw ParseError("unsupported symmetry '" + symmetry + "'", lineno);
  bool sym = symmetry == "symmetric";

  long long rows = -1, cols = -1, entries = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%' || blank(line)) continue;
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> entries) || rows < 0 || cols < 0 || entries < 0)
      throw ParseError("malformed size line", lineno);
    std::string extra;
    if (ss >> extra) throw ParseError("trailing tokens on size line", lineno);
    break;
  }
  if (rows < 0) throw ParseError("missing size line", lineno);

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(sym ? 2 * entries : entries));
  long long seen = 0;
  while (seen < entries && std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%' || blank(line)) continue;
    std::istringstream ss(line);
    long long i, j;
    double v;
    if (!(ss >> i >> j >> v)) throw ParseError("malformed entry", lineno);
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw ParseError("entry index out of declared range", lineno);
    t.push_back({static_cast<Index>(i - 1), static_cast<Index>(j - 1), v});
    if (sym && i != j) t.push_back({static_cast<Index>(j - 1), static_cast<Index>(i - 1), v});
    ++seen;
  }
  if (seen < entries)
    throw ParseError("expected " + std::to_string(entries) + " entries, found " +
                         std::to_string(seen),
                     lineno);
  return csr_from_triplets(t, static_cast<Index>(rows), static_cast<Index>(cols));
}

SparseMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_matrix_market(in);
}

void write_matrix_market(const SparseMatrix& A, std::ostream& out) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.n_rows() << ' ' << A.n_cols() << ' ' << A.nnz() << '\n';
  const auto& off = A.row_offsets();
  for (Index i = 0; i < A.n_rows(); ++i)
    for (Index k = off[i]; k < off[i + 1]; ++k)
      out << i + 1 << ' ' << A.col_indices()[k] + 1 << ' ' << format_double(A.values()[k])
          << '\n';
}

void write_matrix_market(const SparseMatrix& A, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_matrix_market(A, out);
}

Vector read_vector(std::istream& in) {
  std::vector<double> v;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%' || line[0] == '#' || blank(line)) continue;
    std::istringstream ss(line);
    double x;
    std::string extra;
    if (!(ss >> x) || (ss >> extra)) throw ParseError("expected one number per line", lineno);
    v.push_back(x);
  }
  return Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size()));
}

Vector read_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_vector(in);
}

void write_vector(const Vector& v, std::ostream& out) {
  for (Index i = 0; i < v.size(); ++i) out << format_double(v[i]) << '\n';
}

void write_vector(const Vector& v, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_vector(v, out);
}

}  // namespace pnreg
