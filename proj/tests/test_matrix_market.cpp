#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "pnreg/matrix_market.hpp"
#include "test_support.hpp"

using namespace pnreg;

namespace {

SparseMatrix parse(const std::string& text) {
  std::istringstream in(text);
  return read_matrix_market(in);
}

long parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line;
  }
  return -1;
}

}  // namespace

TEST(MatrixMarket, IdentityFile) {
  SparseMatrix A = parse(
      "%%MatrixMarket matrix coordinate real general\n"
      "% a comment\n"
      "2 2 2\n"
      "1 1 1.0\n"
      "2 2 1.0\n");
  EXPECT_EQ(A.to_dense(), DenseMatrix::Identity(2, 2));
}

TEST(MatrixMarket, EmptyCoordinateSection) {
  SparseMatrix A = parse("%%MatrixMarket matrix coordinate real general\n3 4 0\n");
  EXPECT_EQ(A.n_rows(), 3);
  EXPECT_EQ(A.n_cols(), 4);
  EXPECT_EQ(A.nnz(), 0);
}

TEST(MatrixMarket, SymmetricIsExpanded) {
  SparseMatrix A = parse(
      "%%MatrixMarket matrix coordinate real symmetric\n"
      "2 2 2\n"
      "1 1 4\n"
      "2 1 -1\n");
  DenseMatrix D(2, 2);
  D << 4, -1, -1, 0;
  EXPECT_EQ(A.to_dense(), D);
}

TEST(MatrixMarket, IntegerField) {
  SparseMatrix A = parse("%%MatrixMarket matrix coordinate integer general\n1 2 1\n1 2 7\n");
  EXPECT_EQ(A.to_dense()(0, 1), 7.0);
}

TEST(MatrixMarket, MalformedInputReportsLine) {
  EXPECT_EQ(parse_error_line(""), 1);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix array real general\n2 2\n"), 1);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate complex general\n"), 1);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate real general\n% c\n2 x 1\n"), 3);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n"),
            3);
  EXPECT_EQ(parse_error_line("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n1 2\n"),
            4);
  EXPECT_EQ(parse_error_line("NotMatrixMarket\n"), 1);
}

TEST(MatrixMarket, RoundTripIsExact) {
  SeededRng rng(21);
  DenseMatrix D = test::random_dense(50, 12, 0.2, rng);
  D(3, 4) = 1e-300;
  D(7, 2) = -3.141592653589793e200;
  SparseMatrix A = SparseMatrix::from_dense(D);
  std::stringstream ss;
  write_matrix_market(A, ss);
  SparseMatrix B = read_matrix_market(ss);
  EXPECT_EQ(B.row_offsets(), A.row_offsets());
  EXPECT_EQ(B.col_indices(), A.col_indices());
  EXPECT_EQ(B.values(), A.values());
}

TEST(MatrixMarket, FileRoundTrip) {
  auto path = std::filesystem::temp_directory_path() / "pnreg_mm_roundtrip.mtx";
  SeededRng rng(22);
  SparseMatrix A = SparseMatrix::from_dense(test::random_dense(20, 5, 0.5, rng));
  write_matrix_market(A, path.string());
  SparseMatrix B = read_matrix_market(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(B.to_dense(), A.to_dense());
  EXPECT_THROW(read_matrix_market((path.string() + ".missing")), Error);
}

TEST(VectorIo, RoundTripAndComments) {
  SeededRng rng(23);
  Vector v = test::random_vector(30, rng);
  std::stringstream ss;
  write_vector(v, ss);
  EXPECT_EQ(read_vector(ss), v);
  std::istringstream in("# header\n1.5\n\n% note\n-2\n");
  Vector w = read_vector(in);
  ASSERT_EQ(w.size(), 2);
  EXPECT_EQ(w[0], 1.5);
  EXPECT_EQ(w[1], -2.0);
}

TEST(VectorIo, BadTokenIsParseError) {
  std::istringstream in("1.0\nabc\n");
  try {
    read_vector(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line, 2);
  }
}

TEST(FormatDouble, SeventeenDigitsRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -5e-324, 2.0}) {
    EXPECT_EQ(std::strtod(format_double(x).c_str(), nullptr), x);
  }
}
