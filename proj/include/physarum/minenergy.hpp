#pragma once

#include <Eigen/Dense>

#include "physarum/instance.hpp"

namespace physarum {

/// Capacities x at time t.
struct State {
  Eigen::VectorXd x;
  double t = 0.0;
};

/// Minimum-energy feasible solution for resistances c_e / x_e.
struct MinEnergySolution {
  Eigen::VectorXd q;  // currents, A q = b
  Eigen::VectorXd p;  // node potentials, A R^{-1} A^T p = b
  double energy = 0;  // b^T p
  double residual = 0;  // ||A q - b||_inf
};

/// Relative feasibility tolerance applied to every solve.
inline constexpr double kFeasibilityTol = 1e-9;

/// Solves A diag(x/c) A^T p = b by Cholesky and sets q_e = (x_e/c_e) A_e^T p.
/// Requires x > 0. Throws SingularSystem when the normal matrix is not
/// numerically positive definite or the residual check fails, NonFiniteInput
/// on NaN/inf capacities.
MinEnergySolution solve_potentials(const ProblemInstance& inst, const Eigen::VectorXd& x);

/// Minimum-energy solution restricted to the edges with x_e > support_tol.
/// Edges outside the support carry zero current. Handles a rank-deficient
/// restricted normal matrix (degenerate supports) through a complete
/// orthogonal decomposition; p is then the minimum-norm potential.
MinEnergySolution solve_potentials_restricted(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                              double support_tol);

/// E_x(f) = sum c_e f_e^2 / x_e; +infinity when f_e != 0 on an edge with x_e = 0.
double energy(const ProblemInstance& inst, const Eigen::VectorXd& x, const Eigen::VectorXd& f);

/// c^T |f|.
double cost(const ProblemInstance& inst, const Eigen::VectorXd& f);

}  // namespace physarum
