#include "physarum/lyapunov.hpp"

#include <cmath>

namespace physarum {

namespace {
constexpr double kRoundoffFloor = 1e-12;
}

double lyapunov_value(const ProblemInstance& inst, const Eigen::VectorXd& x, const MinEnergySolution& sol) {
  return inst.b().dot(sol.p) + inst.c().dot(x);
}

double dLdt_nonuniform(const ProblemInstance& inst, const Eigen::VectorXd& a, const Eigen::VectorXd& x,
                       const MinEnergySolution& sol) {
  const Eigen::VectorXd lambda = normalized_drops(inst, sol);
  double total = 0;
  for (Eigen::Index e = 0; e < x.size(); ++e) {
    const double l = lambda(e);
    total += a(e) * inst.c()(e) * x(e) * (l + 1.0) * (l - 1.0) * (l - 1.0);
  }
  return -total;
}

double dLdt_nonuniform(const ProblemInstance& inst, const DynamicsSpec& spec, const Eigen::VectorXd& x, double t,
                       const MinEnergySolution& sol) {
  return dLdt_nonuniform(inst, spec.reactivities(x, t), x, sol);
}

double dLdt_refined(const ProblemInstance& inst, const DynamicsSpec& spec, const Eigen::VectorXd& x,
                    const MinEnergySolution& sol) {
  const Eigen::VectorXd lambda = normalized_drops(inst, sol);
  double total = 0;
  for (Eigen::Index e = 0; e < x.size(); ++e) {
    const double l = lambda(e);
    const double g = spec.response(static_cast<std::size_t>(e))(l);
    total += inst.c()(e) * x(e) * (l * l - 1.0) * (g - 1.0);
  }
  return -total;
}

double dLdt(const ProblemInstance& inst, const DynamicsSpec& spec, const Eigen::VectorXd& x, double t,
            const MinEnergySolution& sol) {
  if (spec.variant == Variant::Refined) return dLdt_refined(inst, spec, x, sol);
  return dLdt_nonuniform(inst, spec, x, t, sol);
}

LyapunovSample lyapunov_sample(const ProblemInstance& inst, const DynamicsSpec& spec, const Eigen::VectorXd& x,
                               double t, const MinEnergySolution& sol, const std::optional<Eigen::VectorXd>& x_star) {
  LyapunovSample s;
  s.L = lyapunov_value(inst, x, sol);
  s.dLdt_analytic = dLdt(inst, spec, x, t, sol);
  s.lambda = normalized_drops(inst, sol);
  if (x_star) s.gap = inst.c().dot(x) - inst.c().dot(*x_star);
  return s;
}

double proof_potential(const ProblemInstance& inst, const Eigen::VectorXd& x, const Eigen::VectorXd& x_star,
                       const Eigen::VectorXd& a, double B) {
  if (!(B > 0)) throw Error(ErrorCode::NonPositiveBound, "B must be positive");
  double w = 0;
  for (Eigen::Index e = 0; e < x.size(); ++e) {
    if (x_star(e) == 0.0) continue;
    if (!(a(e) > 0)) throw Error(ErrorCode::NonPositiveReactivity, "proof potential needs a_e > 0");
    w += x_star(e) * inst.c()(e) / a(e) * std::log(x(e) / B);
  }
  return w;
}

MonotonicityReport check_monotone(std::span<const double> L, double rel_slack, std::size_t sustained_run) {
  MonotonicityReport rep;
  rep.samples = L.size();
  std::size_t run = 0;
  for (std::size_t k = 0; k + 1 < L.size(); ++k) {
    const double excess = L[k + 1] - L[k];
    if (excess > rel_slack * (1.0 + std::abs(L[k]))) {
      if (rep.violations == 0) rep.first_violation = k;
      ++rep.violations;
    }
    rep.worst_excess = std::max(rep.worst_excess, excess);
    // Round-off in b^T p + c^T x flickers at the 1e-16 level near a fixed
    // point; only increments above that floor extend a run.
    run = excess > kRoundoffFloor * (1.0 + std::abs(L[k])) ? run + 1 : 0;
    rep.longest_increase_run = std::max(rep.longest_increase_run, run);
  }
  rep.sustained_increase = rep.longest_increase_run >= sustained_run;
  return rep;
}

}  // namespace physarum
