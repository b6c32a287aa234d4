#include <gtest/gtest.h>

#include <cmath>

#include "physarum/experiments.hpp"
#include "physarum/integrate.hpp"
#include "physarum/lyapunov.hpp"
#include "support/generators.hpp"

using namespace physarum;
using proptest::vec;

namespace {

const ProblemInstance& single_edge() {
  static const ProblemInstance inst(InstanceData{{{1}}, {1}, {1}});
  return inst;
}

double L_at(const ProblemInstance& inst, const Eigen::VectorXd& x) {
  return lyapunov_value(inst, x, solve_potentials(inst, x));
}

}  // namespace

TEST(LyapunovValue, SingleEdge) {
  for (double x : {0.25, 0.5, 1.0, 3.0}) EXPECT_NEAR(L_at(single_edge(), vec({x})), 1.0 / x + x, 1e-12);
  // Minimum of 1/x + x on a fine scan sits at x = 1 with value 2.
  double best_x = 0, best = INFINITY;
  for (double x = 0.5; x <= 2.0; x += 1e-4) {
    const double v = L_at(single_edge(), vec({x}));
    if (v < best) best = v, best_x = x;
  }
  EXPECT_NEAR(best_x, 1.0, 1e-4);
  EXPECT_NEAR(best, 2.0, 1e-8);
}

TEST(LyapunovValue, ParallelLinks) {
  EXPECT_NEAR(L_at(gen_parallel_links({1, 2}), vec({1, 1})), 11.0 / 3.0, 1e-14);
}

TEST(LyapunovValue, TwiceCostAtBasicSolutions) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const CertifiedInstance ci = draw_certified_instance(seed);
    for (const auto& b : ci.report.bases) {
      const Eigen::VectorXd x = b.capacity();
      const MinEnergySolution sol = solve_potentials_restricted(ci.instance, x, 1e-12);
      const double cost_x = ci.instance.c().dot(x);
      EXPECT_NEAR(lyapunov_value(ci.instance, x, sol), 2 * cost_x, 1e-9 * (1 + cost_x)) << "seed " << seed;
    }
  }
}

TEST(DLdtNonUniform, Examples) {
  const ProblemInstance& inst = single_edge();
  const Eigen::VectorXd x = vec({2});
  const MinEnergySolution sol = solve_potentials(inst, x);
  EXPECT_NEAR(dLdt_nonuniform(inst, vec({1}), x, sol), -0.75, 1e-14);
  EXPECT_EQ(dLdt_nonuniform(inst, vec({0}), x, sol), 0.0);
  const Eigen::VectorXd one = vec({1});
  EXPECT_EQ(dLdt_nonuniform(inst, vec({1}), one, solve_potentials(inst, one)), 0.0);
}

TEST(DLdtRefined, Examples) {
  const ProblemInstance& inst = single_edge();
  const Eigen::VectorXd x = vec({2});
  const MinEnergySolution sol = solve_potentials(inst, x);
  EXPECT_NEAR(dLdt_refined(inst, DynamicsSpec::refined(ResponseFn::power(2)), x, sol), -9.0 / 8.0, 1e-14);
  const Eigen::VectorXd one = vec({1});
  EXPECT_EQ(dLdt_refined(inst, DynamicsSpec::refined(ResponseFn::power(2)), one, solve_potentials(inst, one)), 0.0);
}

TEST(DLdtProperty, IdentityResponseMatchesUnitReactivity) {
  proptest::Gen gen(51);
  const DynamicsSpec id = DynamicsSpec::refined(ResponseFn::identity());
  for (int k = 0; k < 200; ++k) {
    const ProblemInstance inst = gen.instance();
    const Eigen::VectorXd x = gen.positive(inst.m());
    const MinEnergySolution sol = solve_potentials(inst, x);
    const double a = dLdt_refined(inst, id, x, sol);
    const double b = dLdt_nonuniform(inst, Eigen::VectorXd::Ones(x.size()), x, sol);
    EXPECT_NEAR(a, b, 1e-12 * (1 + std::abs(b)));
  }
}

TEST(DLdtProperty, MatchesDirectionalDerivativeOfL) {
  // d/dt L(x + s xdot) at s = 0 by central differences.
  proptest::Gen gen(52);
  for (int k = 0; k < 90; ++k) {
    const ProblemInstance inst = gen.instance();
    const DynamicsSpec spec = gen.spec(inst.m(), k);
    const Eigen::VectorXd x = gen.positive(inst.m(), 0.2, 5);
    const MinEnergySolution sol = solve_potentials(inst, x);
    const Eigen::VectorXd xdot = rhs_from_solution(inst, spec, x, 0, sol);
    const double s = 1e-6;
    const double fd = (L_at(inst, x + s * xdot) - L_at(inst, x - s * xdot)) / (2 * s);
    const double an = dLdt(inst, spec, x, 0, sol);
    EXPECT_NEAR(fd, an, 1e-6 * (1 + std::abs(an))) << "draw " << k;
  }
}

TEST(DLdtProperty, StrictlyNegativeAwayFromFixedPoints) {
  proptest::Gen gen(53);
  for (int k = 0; k < 200; ++k) {
    const ProblemInstance inst = gen.instance();
    const DynamicsSpec spec = gen.spec(inst.m(), k);
    const Eigen::VectorXd x = gen.positive(inst.m());
    const MinEnergySolution sol = solve_potentials(inst, x);
    const Eigen::VectorXd lambda = normalized_drops(inst, sol);
    if ((lambda.array() - 1).abs().maxCoeff() < 1e-6) continue;
    EXPECT_LT(dLdt(inst, spec, x, 0, sol), 0.0) << "draw " << k;
  }
}

TEST(DLdtProperty, ZeroAtBasicSolutions) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const CertifiedInstance ci = draw_certified_instance(seed);
    const Eigen::VectorXd a = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(ci.instance.m()), 1.3);
    for (const auto& b : ci.report.bases) {
      const Eigen::VectorXd x = b.capacity();
      const MinEnergySolution sol = solve_potentials_restricted(ci.instance, x, 1e-12);
      EXPECT_NEAR(dLdt_nonuniform(ci.instance, a, x, sol), 0.0, 1e-10) << "seed " << seed;
    }
  }
}

TEST(ProofPotential, Examples) {
  const ProblemInstance inst = gen_parallel_links({1, 2});
  EXPECT_NEAR(proof_potential(inst, vec({1, 1}), vec({1, 0}), vec({1, 1}), 2.0), -std::log(2.0), 1e-15);
  EXPECT_EQ(proof_potential(inst, vec({3, 3}), vec({1, 4}), vec({1, 1}), 3.0), 0.0);
  // Unused edges carry no weight whatever their capacity.
  EXPECT_EQ(proof_potential(inst, vec({2, 1e-9}), vec({1, 0}), vec({1, 1}), 2.0), 0.0);
  try {
    proof_potential(inst, vec({1, 1}), vec({1, 0}), vec({1, 1}), 0.0);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveBound);
  }
}

TEST(ProofPotential, GrowsNearNonOptimalFixedPointAndStaysBoundedOtherwise) {
  // Links with costs 1, 2; z = (0, 1) is a non-optimal fixed point, x* = (1, 0).
  const ProblemInstance inst = gen_parallel_links({1, 2});
  const Eigen::VectorXd x_star = vec({1, 0}), a = vec({1, 1});
  const double delta = (2.0 - 1.0) / 2.0;
  IntegratorConfig cfg;
  cfg.h = 1e-3;
  cfg.t_end = 150;
  cfg.record_every = 10;
  const TrajectoryRecord rec = simulate(inst, DynamicsSpec::uniform(), vec({1e-6, 1}), cfg);
  double B = 0;
  for (const auto& row : rec.rows) B = std::max(B, row.x.maxCoeff());
  int near_z = 0;
  for (std::size_t i = 1; i < rec.rows.size(); ++i) {
    const auto& r0 = rec.rows[i - 1];
    const auto& r1 = rec.rows[i];
    if ((r0.x - vec({0, 1})).lpNorm<Eigen::Infinity>() > 0.05) continue;
    ++near_z;
    const double wdot =
        (proof_potential(inst, r1.x, x_star, a, B) - proof_potential(inst, r0.x, x_star, a, B)) / (r1.t - r0.t);
    EXPECT_GE(wdot, delta);
  }
  EXPECT_GT(near_z, 100);
  // The run converges, so W ends near zero and never exceeds it.
  EXPECT_EQ(rec.status, Status::ConvergedToFixedPoint);
  for (const auto& row : rec.rows) EXPECT_LE(proof_potential(inst, row.x, x_star, a, B), 1e-12);
  EXPECT_NEAR(proof_potential(inst, rec.terminal.x, x_star, a, B), 0.0, 1e-6);
}

TEST(CheckMonotone, Series) {
  const std::vector<double> down{5, 4, 4, 3, 2.5};
  EXPECT_TRUE(check_monotone(down).ok());

  const std::vector<double> bump{5, 4, 4.5, 3};
  const MonotonicityReport r = check_monotone(bump);
  EXPECT_EQ(r.violations, 1u);
  EXPECT_EQ(r.first_violation, 1u);
  EXPECT_DOUBLE_EQ(r.worst_excess, 0.5);
  EXPECT_FALSE(r.ok());

  // Each step is within slack, but the climb is sustained.
  std::vector<double> creep{1.0};
  for (int i = 0; i < 12; ++i) creep.push_back(creep.back() + 1e-10);
  const MonotonicityReport c = check_monotone(creep);
  EXPECT_EQ(c.violations, 0u);
  EXPECT_TRUE(c.sustained_increase);
  EXPECT_FALSE(c.ok());

  // Round-off flicker does not count.
  std::vector<double> flicker;
  for (int i = 0; i < 40; ++i) flicker.push_back(2.0 + (i % 2) * 1e-15 + i * 1e-17);
  EXPECT_TRUE(check_monotone(flicker).ok());
  EXPECT_TRUE(check_monotone(std::vector<double>{}).ok());
}

TEST(CheckMonotoneProperty, SimulatedTrajectoriesNeverClimb) {
  proptest::Gen gen(54);
  for (int k = 0; k < 30; ++k) {
    const ProblemInstance inst = gen.instance();
    const DynamicsSpec spec = gen.spec(inst.m(), k);
    IntegratorConfig cfg;
    cfg.h = 1e-2;
    cfg.t_end = 30;
    cfg.record_every = 1;
    const TrajectoryRecord rec = simulate(inst, spec, gen.positive(inst.m(), 0.1, 10), cfg);
    const MonotonicityReport r = check_monotone(rec.L_series());
    EXPECT_TRUE(r.ok()) << "draw " << k << " violations " << r.violations;
    for (const auto& row : rec.rows) EXPECT_LE(row.dLdt, 1e-9);
  }
}
