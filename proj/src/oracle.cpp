#include "physarum/oracle.hpp"

#include <algorithm>
#include <map>
#include <thread>

#include "physarum/minenergy.hpp"

namespace physarum {

using exact::Integer;
using exact::Rational;
using nlohmann::json;

Eigen::VectorXd BasicSolution::flow() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(f.size()));
  for (std::size_t e = 0; e < f.size(); ++e) v(static_cast<Eigen::Index>(e)) = exact::to_double(f[e]);
  return v;
}

Eigen::VectorXd BasicSolution::capacity() const { return flow().cwiseAbs(); }

std::optional<double> OracleReport::D_double() const {
  if (!D) return std::nullopt;
  return D->convert_to<double>();
}

namespace {

double binomial(std::size_t m, std::size_t k) {
  double r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(m - k + i) / static_cast<double>(i);
  return r;
}

// Calls fn for every k-subset of [0, m) in lexicographic order.
template <typename Fn>
void for_each_subset(std::size_t m, std::size_t k, Fn&& fn) {
  if (k > m) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    fn(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == m - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

std::optional<BasicSolution> solve_basis(const ProblemInstance& inst, const exact::IntMatrix& A,
                                         const std::vector<std::size_t>& basis) {
  const std::size_t n = inst.n();
  exact::IntMatrix AB(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) AB(i, j) = A(i, basis[j]);
  std::vector<Integer> rhs(inst.b_int().begin(), inst.b_int().end());
  std::vector<Rational> fB;
  if (!exact::solve(AB, rhs, fB)) return std::nullopt;

  BasicSolution s;
  s.basis = basis;
  s.f.assign(inst.m(), Rational(0));
  for (std::size_t j = 0; j < n; ++j) s.f[basis[j]] = fB[j];
  s.cost = 0;
  for (std::size_t e = 0; e < inst.m(); ++e) s.cost += Rational(inst.c_int()[e]) * abs(s.f[e]);
  return s;
}

}  // namespace

OracleReport enumerate_bfs(const ProblemInstance& inst, const OracleLimits& limits) {
  const std::size_t n = inst.n(), m = inst.m();
  if (m > limits.max_m || binomial(m, n) > static_cast<double>(limits.max_bases))
    throw Error(ErrorCode::TooLarge, "basis enumeration exceeds the combinatorial guard");

  std::vector<std::vector<std::size_t>> subsets;
  for_each_subset(m, n, [&](const std::vector<std::size_t>& s) { subsets.push_back(s); });

  const exact::IntMatrix A = inst.exact_A();
  std::vector<std::optional<BasicSolution>> solved(subsets.size());
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(1, subsets.size() / 64));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < subsets.size(); i += workers) solved[i] = solve_basis(inst, A, subsets[i]);
      });
    }
  }

  OracleReport rep;
  for (auto& s : solved) {
    if (s) rep.bases.push_back(std::move(*s));
  }
  if (rep.bases.empty()) throw Error(ErrorCode::Infeasible, "internal: no invertible basis despite full row rank");

  std::stable_sort(rep.bases.begin(), rep.bases.end(), [](const BasicSolution& a, const BasicSolution& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.basis < b.basis;
  });
  rep.optimal = 0;

  // Distinct solutions keyed by f; degenerate bases collapse onto one entry.
  std::map<std::vector<Rational>, Rational> unique;
  for (const auto& s : rep.bases) unique.emplace(s.f, s.cost);
  rep.distinct_solutions = unique.size();
  std::vector<Rational> costs;
  for (const auto& [f, cost] : unique) costs.push_back(cost);
  std::sort(costs.begin(), costs.end());
  rep.distinct_costs = std::adjacent_find(costs.begin(), costs.end()) == costs.end();

  rep.D = max_subdeterminant(inst, limits);
  return rep;
}

std::optional<Integer> max_subdeterminant(const ProblemInstance& inst, const OracleLimits& limits) {
  const std::size_t n = inst.n(), m = inst.m();
  if (n > limits.max_n_for_D || m > limits.max_m) return std::nullopt;
  const exact::IntMatrix A = inst.exact_A();
  Integer best = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    for_each_subset(n, k, [&](const std::vector<std::size_t>& rows) {
      for_each_subset(m, k, [&](const std::vector<std::size_t>& cols) {
        exact::IntMatrix sub(k, k);
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j) sub(i, j) = A(rows[i], cols[j]);
        const Integer d = abs(exact::determinant(sub));
        if (d > best) best = d;
      });
    });
  }
  return best;
}

ProblemInstance certify(const ProblemInstance& inst, const OracleReport& report) {
  InstanceMeta meta = inst.meta();
  meta.distinct_bfs_costs = report.distinct_costs;
  return inst.with_meta(std::move(meta));
}

FixedPointVerdict verify_fixed_point(const ProblemInstance& inst, const OracleReport& report,
                                     const Eigen::VectorXd& x, double tol) {
  if (static_cast<std::size_t>(x.size()) != inst.m())
    throw Error(ErrorCode::DimensionMismatch, "capacity vector has wrong length");
  FixedPointVerdict v;
  v.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < report.bases.size(); ++i) {
    const double d = (x - report.bases[i].capacity()).lpNorm<Eigen::Infinity>();
    if (d < v.distance) {
      v.distance = d;
      v.nearest = i;
    }
  }
  const MinEnergySolution sol = solve_potentials_restricted(inst, x, tol);
  v.equilibrium_residual = (sol.q.cwiseAbs() - x).lpNorm<Eigen::Infinity>();
  v.is_fixed_point = v.distance <= tol && v.equilibrium_residual <= tol;
  return v;
}

double optimality_gap(const ProblemInstance& inst, const Eigen::VectorXd& x, const OracleReport& report) {
  if (!report.distinct_costs) throw Error(ErrorCode::NotCertified, "optimum is not unique (tied basic solution costs)");
  return inst.c().dot(x) - exact::to_double(report.best().cost);
}

json to_json(const OracleReport& report) {
  json bases = json::array();
  for (const auto& s : report.bases) {
    std::vector<std::size_t> cols;
    for (auto c : s.basis) cols.push_back(c + 1);
    std::vector<std::string> f;
    for (const auto& v : s.f) f.push_back(exact::to_string(v));
    bases.push_back(json{{"B", cols}, {"f", f}, {"cost", exact::to_string(s.cost)}});
  }
  json j{{"bases", bases}, {"optimal", report.optimal}, {"distinct_costs", report.distinct_costs}};
  j["D"] = report.D ? json(report.D->str()) : json(nullptr);
  return j;
}

}  // namespace physarum
