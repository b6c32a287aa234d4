#pragma once

#include <optional>
#include <span>

#include <Eigen/Dense>

#include "physarum/dynamics.hpp"
#include "physarum/minenergy.hpp"

namespace physarum {

struct LyapunovSample {
  double L = 0;
  double dLdt_analytic = 0;
  Eigen::VectorXd lambda;
  /// c^T x - c^T x*, when x* is known.
  std::optional<double> gap;
};

/// L(x) = b^T p + c^T x, i.e. energy of q plus cost of x.
double lyapunov_value(const ProblemInstance& inst, const Eigen::VectorXd& x, const MinEnergySolution& sol);

/// -sum_e a_e c_e x_e (lambda_e + 1)(lambda_e - 1)^2 for given reactivities a.
double dLdt_nonuniform(const ProblemInstance& inst, const Eigen::VectorXd& a, const Eigen::VectorXd& x,
                       const MinEnergySolution& sol);

/// As above with a = spec.reactivities(x, t); Uniform uses a = 1.
double dLdt_nonuniform(const ProblemInstance& inst, const DynamicsSpec& spec, const Eigen::VectorXd& x, double t,
                       const MinEnergySolution& sol);

/// -sum_e c_e x_e (lambda_e^2 - 1)(g_e(lambda_e) - 1).
double dLdt_refined(const ProblemInstance& inst, const DynamicsSpec& spec, const Eigen::VectorXd& x,
                    const MinEnergySolution& sol);

/// Dispatches on spec.variant.
double dLdt(const ProblemInstance& inst, const DynamicsSpec& spec, const Eigen::VectorXd& x, double t,
            const MinEnergySolution& sol);

LyapunovSample lyapunov_sample(const ProblemInstance& inst, const DynamicsSpec& spec, const Eigen::VectorXd& x,
                               double t, const MinEnergySolution& sol,
                               const std::optional<Eigen::VectorXd>& x_star = std::nullopt);

/// W(x) = sum_e (x*_e c_e / a_e) ln(x_e / B). Grows without bound along a
/// trajectory that lingers near a non-optimal fixed point. Throws
/// NonPositiveBound for B <= 0.
double proof_potential(const ProblemInstance& inst, const Eigen::VectorXd& x, const Eigen::VectorXd& x_star,
                       const Eigen::VectorXd& a, double B);

struct MonotonicityReport {
  std::size_t samples = 0;
  /// Pairs with L[k+1] > L[k] + rel_slack (1 + |L[k]|).
  std::size_t violations = 0;
  double worst_excess = 0;
  std::size_t first_violation = 0;
  /// Longest run of consecutive increases above round-off (1e-12 relative).
  std::size_t longest_increase_run = 0;
  bool sustained_increase = false;

  bool ok() const { return violations == 0 && !sustained_increase; }
};

/// Checks that a sampled L series is nonincreasing up to per-step slack.
/// An increase sustained over sustained_run consecutive samples is flagged
/// even when each step is within slack.
MonotonicityReport check_monotone(std::span<const double> L, double rel_slack = 1e-9, std::size_t sustained_run = 10);

}  // namespace physarum
