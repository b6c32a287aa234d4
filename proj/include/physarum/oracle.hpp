#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "physarum/exact.hpp"
#include "physarum/instance.hpp"

namespace physarum {

/// f with f_B = A_B^{-1} b and zeros elsewhere, in exact arithmetic.
struct BasicSolution {
  std::vector<std::size_t> basis;  // sorted column indices (0-based)
  std::vector<exact::Rational> f;
  exact::Rational cost;

  Eigen::VectorXd flow() const;
  Eigen::VectorXd capacity() const;  // |f|
};

struct OracleReport {
  /// Sorted by (cost, basis) ascending.
  std::vector<BasicSolution> bases;
  std::size_t optimal = 0;
  /// No two distinct vectors f share a cost. Degenerate bases that produce
  /// the same f are one solution, not a tie.
  bool distinct_costs = false;
  std::size_t distinct_solutions = 0;
  /// Largest |det| over square submatrices; empty when the size guard trips.
  std::optional<exact::Integer> D;

  const BasicSolution& best() const { return bases.at(optimal); }
  Eigen::VectorXd x_star() const { return best().capacity(); }
  std::optional<double> D_double() const;
};

struct OracleLimits {
  std::size_t max_m = 24;
  std::size_t max_bases = 2'000'000;
  std::size_t max_n_for_D = 5;
};

/// Enumerates every invertible column basis. Throws TooLarge when m or the
/// number of candidate bases exceeds the limits, Infeasible when no basis is
/// invertible.
OracleReport enumerate_bfs(const ProblemInstance& inst, const OracleLimits& limits = {});

/// Maximum absolute determinant over all square submatrices up to n x n;
/// nullopt beyond the D guard (n > max_n_for_D or m > max_m).
std::optional<exact::Integer> max_subdeterminant(const ProblemInstance& inst, const OracleLimits& limits = {});

/// Copy of inst with meta.distinct_bfs_costs taken from the report.
ProblemInstance certify(const ProblemInstance& inst, const OracleReport& report);

struct FixedPointVerdict {
  bool is_fixed_point = false;
  std::size_t nearest = 0;  // index into report.bases
  double distance = 0;      // || x - |f_nearest| ||_inf
  /// || |q| - x ||_inf with q solved on the edges where x_e > tol.
  double equilibrium_residual = 0;
};

FixedPointVerdict verify_fixed_point(const ProblemInstance& inst, const OracleReport& report,
                                     const Eigen::VectorXd& x, double tol);

/// c^T x - c^T x*. Throws NotCertified unless costs are distinct.
double optimality_gap(const ProblemInstance& inst, const Eigen::VectorXd& x, const OracleReport& report);

nlohmann::json to_json(const OracleReport& report);

}  // namespace physarum
