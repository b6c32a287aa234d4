#pragma once

// Exact integer/rational arithmetic on small dense matrices.

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace physarum::exact {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Row-major dense matrix of exact integers.
struct IntMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Integer> data;

  IntMatrix() = default;
  IntMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

  Integer& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const Integer& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Rank by fraction-free (Bareiss) elimination.
std::size_t rank(IntMatrix m);

/// Determinant of a square matrix by Bareiss elimination.
Integer determinant(IntMatrix m);

/// Solves the square system M y = rhs exactly. Returns false when M is singular.
bool solve(const IntMatrix& m, const std::vector<Integer>& rhs, std::vector<Rational>& out);

/// "p/q" in lowest terms, or "p" when the denominator is one.
std::string to_string(const Rational& r);

/// Parses "p/q" or "p".
Rational parse_rational(const std::string& s);

double to_double(const Rational& r);

}  // namespace physarum::exact
