#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "physarum/minenergy.hpp"
#include "physarum/oracle.hpp"
#include "support/generators.hpp"

using namespace physarum;
using proptest::vec;

namespace {

ErrorCode error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(SolvePotentials, ParallelLinksCurrentDivider) {
  const ProblemInstance inst = gen_parallel_links({1, 2});
  const Eigen::VectorXd x = vec({1, 1});
  const MinEnergySolution sol = solve_potentials(inst, x);

  // Conductances x/c split the unit current proportionally.
  const Eigen::VectorXd g = x.cwiseQuotient(inst.c());
  const double total = g.sum();
  EXPECT_NEAR(sol.p(0), 1.0 / total, 1e-14);
  EXPECT_NEAR(sol.q(0), g(0) / total, 1e-14);
  EXPECT_NEAR(sol.q(1), g(1) / total, 1e-14);
  EXPECT_NEAR(sol.p(0), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(sol.q(0), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(sol.q(1), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(sol.energy, 2.0 / 3.0, 1e-14);
}

TEST(SolvePotentials, ParallelLinksMatchesScanOfTheLine) {
  // Minimise q1^2 + 2 q2^2 over q1 + q2 = 1 by bisection on the derivative
  // (comparing f values directly only resolves the argmin to sqrt(eps)).
  auto f = [](double q1) { return q1 * q1 + 2 * (1 - q1) * (1 - q1); };
  auto df = [](double q1) { return 2 * q1 - 4 * (1 - q1); };
  double lo = -2, hi = 3;
  for (int i = 0; i < 200; ++i) (df(0.5 * (lo + hi)) > 0 ? hi : lo) = 0.5 * (lo + hi);
  const MinEnergySolution sol = solve_potentials(gen_parallel_links({1, 2}), vec({1, 1}));
  EXPECT_NEAR(sol.q(0), 0.5 * (lo + hi), 1e-12);
  EXPECT_NEAR(sol.energy, f(0.5 * (lo + hi)), 1e-12);
}

TEST(SolvePotentials, SingleEdgeForcesUnitCurrent) {
  const ProblemInstance inst(InstanceData{{{1}}, {1}, {1}});
  for (double x : {1e-6, 0.3, 1.0, 2.0, 1e6}) {
    const MinEnergySolution sol = solve_potentials(inst, vec({x}));
    EXPECT_NEAR(sol.q(0), 1.0, 1e-12);
    EXPECT_NEAR(sol.p(0), 1.0 / x, 1e-12 / x);
  }
}

TEST(SolvePotentials, UniformScalingKeepsCurrents) {
  proptest::Gen gen(21);
  for (int k = 0; k < 100; ++k) {
    const ProblemInstance inst = gen.instance();
    const Eigen::VectorXd x = gen.positive(inst.m());
    const double s = gen.real(0.01, 100.0);
    const MinEnergySolution a = solve_potentials(inst, x);
    const MinEnergySolution b = solve_potentials(inst, s * x);
    EXPECT_LE((a.q - b.q).lpNorm<Eigen::Infinity>(), 1e-9 * (1 + a.q.lpNorm<Eigen::Infinity>()));
    EXPECT_NEAR(b.energy, a.energy / s, 1e-9 * (1 + a.energy / s));
  }
}

TEST(SolvePotentials, Errors) {
  const ProblemInstance inst = gen_parallel_links({1, 2});
  EXPECT_EQ(error_of([&] { solve_potentials(inst, vec({1, std::nan("")})); }), ErrorCode::NonFiniteInput);
  EXPECT_EQ(error_of([&] { solve_potentials(inst, vec({1, INFINITY})); }), ErrorCode::NonFiniteInput);
  EXPECT_EQ(error_of([&] { solve_potentials(inst, vec({0, 0})); }), ErrorCode::SingularSystem);
  EXPECT_EQ(error_of([&] { solve_potentials(inst, vec({1, -1})); }), ErrorCode::SingularSystem);
  EXPECT_EQ(error_of([&] { solve_potentials(inst, vec({1})); }), ErrorCode::DimensionMismatch);
}

TEST(SolvePotentialsProperty, FeasibilityAndEnergyIdentity) {
  proptest::Gen gen(22);
  for (int k = 0; k < 300; ++k) {
    const ProblemInstance inst = gen.instance(4, 8);
    const Eigen::VectorXd x = gen.positive(inst.m(), 1e-3, 1e3);
    const MinEnergySolution sol = solve_potentials(inst, x);
    const double bnorm = inst.b().lpNorm<Eigen::Infinity>();
    EXPECT_LE((inst.A() * sol.q - inst.b()).lpNorm<Eigen::Infinity>(), 1e-9 * (1 + bnorm));
    const double direct = (inst.c().cwiseQuotient(x).array() * sol.q.array().square()).sum();
    EXPECT_LE(std::abs(sol.energy - direct), 1e-9 * (1 + std::abs(sol.energy))) << "draw " << k;
    EXPECT_NEAR(energy(inst, x, sol.q), direct, 1e-12 * (1 + direct));
    // q_e = (x_e / c_e) A_e^T p
    const Eigen::VectorXd induced = x.cwiseQuotient(inst.c()).cwiseProduct(inst.A().transpose() * sol.p);
    EXPECT_LE((induced - sol.q).lpNorm<Eigen::Infinity>(), 1e-12 * (1 + sol.q.lpNorm<Eigen::Infinity>()));
  }
}

TEST(SolvePotentialsProperty, NoKernelPerturbationHasLowerEnergy) {
  proptest::Gen gen(23);
  for (int k = 0; k < 40; ++k) {
    const ProblemInstance inst = gen.instance(3, 6);
    const Eigen::VectorXd x = gen.positive(inst.m());
    const MinEnergySolution sol = solve_potentials(inst, x);
    const Eigen::MatrixXd K = Eigen::FullPivLU<Eigen::MatrixXd>(inst.A()).kernel();
    ASSERT_EQ(K.cols(), static_cast<Eigen::Index>(inst.m() - inst.n()));
    const double e0 = energy(inst, x, sol.q);
    for (int j = 0; j < 1000; ++j) {
      Eigen::VectorXd z(K.cols());
      for (auto& v : z) v = gen.real(-1, 1) * std::pow(10.0, gen.real(-4, 0));
      const Eigen::VectorXd f = sol.q + K * z;
      EXPECT_GE(energy(inst, x, f), e0 - 1e-12 * (1 + e0));
    }
  }
}

TEST(SolvePotentialsProperty, CurrentBoundedByDTimesBNorm) {
  proptest::Gen gen(24);
  for (int k = 0; k < 60; ++k) {
    const ProblemInstance inst = gen.instance(4, 6);
    const auto D = max_subdeterminant(inst);
    ASSERT_TRUE(D.has_value());
    const double bound = exact::to_double(exact::Rational(*D)) * inst.b().lpNorm<1>();
    for (int j = 0; j < 20; ++j) {
      const MinEnergySolution sol = solve_potentials(inst, gen.positive(inst.m(), 1e-4, 1e4));
      EXPECT_LE(sol.q.cwiseAbs().maxCoeff(), bound + 1e-9);
    }
  }
}

TEST(SolvePotentialsRestricted, ZeroOffSupport) {
  const ProblemInstance inst = gen_parallel_links({1, 2, 3});
  const MinEnergySolution sol = solve_potentials_restricted(inst, vec({1, 1, 0}), 1e-9);
  EXPECT_NEAR(sol.q(0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(sol.q(1), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(sol.q(2), 0.0);
}

TEST(SolvePotentialsRestricted, AgreesWithFullSolveOnFullSupport) {
  proptest::Gen gen(25);
  for (int k = 0; k < 50; ++k) {
    const ProblemInstance inst = gen.instance();
    const Eigen::VectorXd x = gen.positive(inst.m());
    const MinEnergySolution a = solve_potentials(inst, x);
    const MinEnergySolution b = solve_potentials_restricted(inst, x, 1e-12);
    EXPECT_LE((a.q - b.q).lpNorm<Eigen::Infinity>(), 1e-9);
  }
}

TEST(Energy, CapacityEnergyEqualsCost) {
  proptest::Gen gen(26);
  for (int k = 0; k < 50; ++k) {
    const ProblemInstance inst = gen.instance();
    const Eigen::VectorXd x = gen.positive(inst.m());
    EXPECT_NEAR(energy(inst, x, x), inst.c().dot(x), 1e-12 * inst.c().dot(x));
    EXPECT_NEAR(energy(inst, x, x), cost(inst, x), 1e-12 * inst.c().dot(x));
  }
}

TEST(Energy, ZeroFlowAndSupportViolation) {
  const ProblemInstance inst = gen_parallel_links({1, 2});
  EXPECT_EQ(energy(inst, vec({1, 1}), vec({0, 0})), 0.0);
  EXPECT_EQ(energy(inst, vec({1, 0}), vec({0, 1})), std::numeric_limits<double>::infinity());
  EXPECT_EQ(energy(inst, vec({1, 0}), vec({1, 0})), 1.0);
}

TEST(Cost, Examples) {
  EXPECT_EQ(cost(gen_parallel_links({1, 2}), vec({1, -1})), 3.0);
  EXPECT_EQ(cost(gen_parallel_links({1, 2}), vec({0, 0})), 0.0);
  EXPECT_EQ(cost(gen_parallel_links({3, 1, 2}), vec({0, 1, 0})), 1.0);
}
