#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "physarum/instance.hpp"
#include "physarum/minenergy.hpp"

namespace physarum {

enum class Variant { Uniform, NonUniform, Refined };

std::string_view variant_name(Variant v);

/// Time trend of a state-independent reactivity, used to classify presets.
enum class Trend { None, Increasing, Decreasing };

/// Edge reactivity a_e(x, t) with declared bounds eps <= a <= C. Every
/// evaluation is checked against the declared bounds.
class ReactivityFn {
 public:
  using Evaluator = std::function<double(std::size_t e, const Eigen::VectorXd& x, double t)>;

  struct Traits {
    double epsilon = 0.0;
    double C = 1.0;
    bool lipschitz = true;
    bool state_dependent = false;
    Trend trend = Trend::None;
  };

  ReactivityFn(std::string kind, Evaluator eval, Traits traits, nlohmann::json params);

  /// Per-edge constants, e.g. decay rates of the minimum-risk model.
  static ReactivityFn constant(std::vector<double> a);
  /// The same constant on every edge.
  static ReactivityFn constant_all(double a);
  /// a(t) = scale * exp(-t); not bounded away from zero.
  static ReactivityFn exp_decay(double scale = 0.5);
  /// a(x, t) = 1 / x_e; unbounded.
  static ReactivityFn inverse_state();
  /// a_e(t) = base_e (1 + growth (1 - exp(-t))), nondecreasing in t.
  static ReactivityFn ramp_up(std::vector<double> base, double growth);
  /// a_e(t) = base_e (1 + growth exp(-t)), nonincreasing in t.
  static ReactivityFn ramp_down(std::vector<double> base, double growth);

  double operator()(std::size_t e, const Eigen::VectorXd& x, double t) const;
  Eigen::VectorXd values(const Eigen::VectorXd& x, double t) const;

  const std::string& kind() const { return kind_; }
  const Traits& traits() const { return traits_; }
  double epsilon() const { return traits_.epsilon; }
  double C() const { return traits_.C; }
  nlohmann::json to_json() const;

 private:
  std::string kind_;
  Evaluator eval_;
  Traits traits_;
  nlohmann::json params_;
};

/// Response function g_e(y) on y >= 0, increasing with g(1) = 1.
class ResponseFn {
 public:
  using Evaluator = std::function<double(double)>;

  /// Checks g(1) == 1 and monotonicity on a sample grid; throws
  /// ReactivityBoundViolated otherwise. value_at_zero is returned for y == 0.
  ResponseFn(std::string kind, Evaluator eval, double value_at_zero, nlohmann::json params,
             std::optional<double> linear_lower_bound);

  /// g(y) = y^mu.
  static ResponseFn power(double mu);
  /// g(y) = (1 + alpha) y^mu / (1 + alpha y^mu).
  static ResponseFn saturating(double mu, double alpha);
  static ResponseFn identity() { return power(1.0); }

  double operator()(double y) const;

  /// Central-difference estimate of g'(1).
  double derivative_at_one() const;

  /// alpha with g(y) >= 1 + alpha (y - 1) for all y >= 0, if one is known
  /// analytically (convex members of the catalog use g'(1)).
  std::optional<double> linear_lower_bound() const { return linear_lower_bound_; }

  const std::string& kind() const { return kind_; }
  nlohmann::json to_json() const;

 private:
  std::string kind_;
  Evaluator eval_;
  double value_at_zero_;
  nlohmann::json params_;
  std::optional<double> linear_lower_bound_;
};

/// True when g(y) >= 1 + alpha (y - 1) on an even grid over [0, y_max].
bool satisfies_linear_lower_bound(const ResponseFn& g, double alpha, double y_max, int samples = 4097);

/// True when g is nondecreasing on an even grid over [0, y_max].
bool is_monotone_on_grid(const ResponseFn& g, double y_max, int samples = 4097);

/// Largest alpha with g(y) >= 1 + alpha (y - 1) on a grid over [0, y_max].
/// Feasible alphas form an interval bounded below by chords on y < 1 and
/// above by chords on y > 1; returns nullopt when it is empty or not positive.
std::optional<double> estimate_linear_lower_bound(const ResponseFn& g, double y_max, int samples = 4097);

struct DynamicsSpec {
  Variant variant = Variant::Uniform;
  std::optional<ReactivityFn> reactivity;  // NonUniform only
  std::vector<ResponseFn> responses;       // Refined only: one shared, or one per edge

  static DynamicsSpec uniform();
  static DynamicsSpec nonuniform(ReactivityFn a);
  static DynamicsSpec refined(ResponseFn g);
  static DynamicsSpec refined(std::vector<ResponseFn> g);

  const ResponseFn& response(std::size_t e) const;

  /// a_e(x, t) for every edge; all ones for Uniform. Undefined for Refined.
  Eigen::VectorXd reactivities(const Eigen::VectorXd& x, double t) const;
};

nlohmann::json to_json(const DynamicsSpec& spec);
DynamicsSpec spec_from_json(const nlohmann::json& j);

/// xdot from a precomputed minimum-energy solution at (x, t).
Eigen::VectorXd rhs_from_solution(const ProblemInstance& inst, const DynamicsSpec& spec, const Eigen::VectorXd& x,
                                  double t, const MinEnergySolution& sol);

/// xdot for the given state; solves for potentials once.
Eigen::VectorXd rhs(const ProblemInstance& inst, const DynamicsSpec& spec, const State& state);

/// xdot computed from the potentials alone through lambda_e = |A_e^T p| / c_e.
Eigen::VectorXd rhs_rewritten(const ProblemInstance& inst, const DynamicsSpec& spec, const State& state);

/// lambda_e = |A_e^T p| / c_e.
Eigen::VectorXd normalized_drops(const ProblemInstance& inst, const MinEnergySolution& sol);

/// xdot_e = |q_e| - a_e x_e, the decay-rate form with constant a.
Eigen::VectorXd rhs_decay_rate(const ProblemInstance& inst, const Eigen::VectorXd& a, const Eigen::VectorXd& x);

/// Change of variables y_e = a_e x_e for constant reactivities. The decay
/// dynamics on the original instance maps onto the non-uniform dynamics with
/// reactivity a on the instance with costs a_e c_e. Those costs are scaled by
/// a common positive integer so they stay integral; a common cost scale does
/// not change the minimum-energy currents.
struct Reformulation {
  ProblemInstance instance;
  Eigen::VectorXd a;
  std::int64_t cost_scale = 1;

  Eigen::VectorXd to_y(const Eigen::VectorXd& x) const { return a.cwiseProduct(x); }
  Eigen::VectorXd to_x(const Eigen::VectorXd& y) const { return y.cwiseQuotient(a); }
};

/// Throws NonPositiveReactivity for a_e <= 0, InvalidArgument when some a_e
/// is not a rational with denominator <= 1000.
Reformulation reformulate_nonuniform(const ProblemInstance& inst, const Eigen::VectorXd& a);

}  // namespace physarum
