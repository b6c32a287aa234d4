#include "physarum/minenergy.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace physarum {

namespace {

void check_capacities(const ProblemInstance& inst, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != inst.m())
    throw Error(ErrorCode::DimensionMismatch, "capacity vector has wrong length");
  if (!x.allFinite()) throw Error(ErrorCode::NonFiniteInput, "capacities contain NaN or infinity");
}

void check_residual(const ProblemInstance& inst, MinEnergySolution& sol) {
  sol.residual = (inst.A() * sol.q - inst.b()).lpNorm<Eigen::Infinity>();
  const double limit = kFeasibilityTol * (1.0 + inst.b().lpNorm<Eigen::Infinity>());
  if (!(sol.residual <= limit)) {
    std::ostringstream msg;
    msg << "residual " << sol.residual << " exceeds " << limit;
    throw Error(ErrorCode::SingularSystem, msg.str());
  }
}

constexpr int kRefinementSteps = 3;

// Iterative refinement on the feasibility residual b - Aq. When capacities
// span many decades p is large and the small drops A_e^T p on high-conductance
// edges lose digits; correcting q by the small update G A^T dp recovers them.
template <class Solver>
void refine(const ProblemInstance& inst, const Solver& solver, const Eigen::VectorXd& conductance,
            MinEnergySolution& sol) {
  sol.p = solver.solve(inst.b());
  sol.q = conductance.cwiseProduct(inst.A().transpose() * sol.p);
  const double target = 0.01 * kFeasibilityTol * (1.0 + inst.b().lpNorm<Eigen::Infinity>());
  for (int k = 0; k < kRefinementSteps; ++k) {
    const Eigen::VectorXd r = inst.b() - inst.A() * sol.q;
    if (r.lpNorm<Eigen::Infinity>() <= target) break;
    const Eigen::VectorXd dp = solver.solve(r);
    sol.p += dp;
    sol.q += conductance.cwiseProduct(inst.A().transpose() * dp);
  }
  if (!sol.p.allFinite() || !sol.q.allFinite()) throw Error(ErrorCode::SingularSystem, "non-finite potentials");
  sol.energy = inst.b().dot(sol.p);
}

}  // namespace

MinEnergySolution solve_potentials(const ProblemInstance& inst, const Eigen::VectorXd& x) {
  check_capacities(inst, x);
  if (x.minCoeff() <= 0.0) throw Error(ErrorCode::SingularSystem, "capacity at or below zero");

  const Eigen::VectorXd conductance = x.cwiseQuotient(inst.c());
  const Eigen::MatrixXd M = inst.A() * conductance.asDiagonal() * inst.A().transpose();

  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "normal matrix not positive definite");

  MinEnergySolution sol;
  refine(inst, llt, conductance, sol);
  check_residual(inst, sol);
  return sol;
}

MinEnergySolution solve_potentials_restricted(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                              double support_tol) {
  check_capacities(inst, x);
  const Eigen::Index m = x.size();
  Eigen::VectorXd conductance = Eigen::VectorXd::Zero(m);
  for (Eigen::Index e = 0; e < m; ++e) {
    if (x(e) > support_tol) conductance(e) = x(e) / inst.c()(e);
  }
  const Eigen::MatrixXd M = inst.A() * conductance.asDiagonal() * inst.A().transpose();

  MinEnergySolution sol;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() == Eigen::Success) {
    refine(inst, llt, conductance, sol);
  } else {
    refine(inst, Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(M), conductance, sol);
  }
  check_residual(inst, sol);
  return sol;
}

double energy(const ProblemInstance& inst, const Eigen::VectorXd& x, const Eigen::VectorXd& f) {
  double total = 0.0;
  for (Eigen::Index e = 0; e < f.size(); ++e) {
    if (f(e) == 0.0) continue;
    if (x(e) == 0.0) return std::numeric_limits<double>::infinity();
    total += inst.c()(e) * f(e) * f(e) / x(e);
  }
  return total;
}

double cost(const ProblemInstance& inst, const Eigen::VectorXd& f) { return inst.c().dot(f.cwiseAbs()); }

}  // namespace physarum
