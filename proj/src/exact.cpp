#include "physarum/exact.hpp"

#include <utility>

#include "physarum/error.hpp"

namespace physarum::exact {

namespace {

// In-place Bareiss elimination with row pivoting. Returns the rank and the
// sign of the row permutation; the last nonzero pivot is the determinant of
// the leading rank x rank minor (up to sign) for square full-rank input.
std::size_t bareiss(IntMatrix& m, int& sign) {
  sign = 1;
  Integer prev = 1;
  std::size_t r = 0;
  for (std::size_t col = 0; col < m.cols && r < m.rows; ++col) {
    std::size_t piv = r;
    while (piv < m.rows && m(piv, col) == 0) ++piv;
    if (piv == m.rows) continue;
    if (piv != r) {
      for (std::size_t j = 0; j < m.cols; ++j) std::swap(m(piv, j), m(r, j));
      sign = -sign;
    }
    for (std::size_t i = r + 1; i < m.rows; ++i) {
      for (std::size_t j = col + 1; j < m.cols; ++j) {
        m(i, j) = (m(r, col) * m(i, j) - m(i, col) * m(r, j)) / prev;
      }
      m(i, col) = 0;
    }
    prev = m(r, col);
    ++r;
  }
  return r;
}

}  // namespace

std::size_t rank(IntMatrix m) {
  int sign = 1;
  return bareiss(m, sign);
}

Integer determinant(IntMatrix m) {
  if (m.rows != m.cols) throw Error(ErrorCode::DimensionMismatch, "determinant of non-square matrix");
  if (m.rows == 0) return 1;
  int sign = 1;
  // Bareiss skips zero columns when searching pivots; for a square matrix that
  // only happens when it is singular, in which case rank < rows.
  const std::size_t r = bareiss(m, sign);
  if (r < m.rows) return 0;
  return sign * m(m.rows - 1, m.cols - 1);
}

bool solve(const IntMatrix& m, const std::vector<Integer>& rhs, std::vector<Rational>& out) {
  const std::size_t n = m.rows;
  if (m.cols != n || rhs.size() != n) throw Error(ErrorCode::DimensionMismatch, "exact solve");
  std::vector<std::vector<Rational>> aug(n, std::vector<Rational>(n + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) aug[i][j] = Rational(m(i, j));
    aug[i][n] = Rational(rhs[i]);
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && aug[piv][col] == 0) ++piv;
    if (piv == n) return false;
    std::swap(aug[piv], aug[col]);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == col || aug[i][col] == 0) continue;
      const Rational factor = aug[i][col] / aug[col][col];
      for (std::size_t j = col; j <= n; ++j) aug[i][j] -= factor * aug[col][j];
    }
  }
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = aug[i][n] / aug[i][i];
  return true;
}

std::string to_string(const Rational& r) {
  const Integer num = boost::multiprecision::numerator(r);
  const Integer den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

Rational parse_rational(const std::string& s) {
  try {
    const auto slash = s.find('/');
    if (slash == std::string::npos) return Rational(Integer(s));
    const Integer num(s.substr(0, slash));
    const Integer den(s.substr(slash + 1));
    if (den == 0) throw Error(ErrorCode::InvalidArgument, "zero denominator in '" + s + "'");
    return Rational(num, den);
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const Error*>(&e)) throw;
    throw Error(ErrorCode::InvalidArgument, "bad rational '" + s + "'");
  }
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace physarum::exact
