#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "physarum/dynamics.hpp"
#include "physarum/minenergy.hpp"

namespace physarum {

enum class Method { Euler, RK4 };
enum class Status { ReachedHorizon, ConvergedToFixedPoint, BlowUp, Error };

std::string_view method_name(Method m);
std::string_view status_name(Status s);
Method parse_method(std::string_view s);
Status parse_status(std::string_view s);

struct IntegratorConfig {
  Method method = Method::RK4;
  double h = 1e-3;
  double t_end = 50.0;
  /// Positivity floor for every capacity.
  double x_min = 1e-12;
  /// Halve the step when it would push a capacity through the floor.
  bool adapt = true;
  /// Record every k-th step; the initial and terminal states are always kept.
  int record_every = 10;
  /// Early stop once ||xdot-defining residual||_inf <= fp_tol.
  double fp_tol = 1e-8;
  bool stop_at_fixed_point = true;

  /// Throws InvalidConfig unless h > 0, t_end > 0, x_min > 0, record_every >= 1.
  void check() const;
};

/// Smallest step the adaptive floor guard will try before giving up.
inline constexpr double kMinStep = 1e-15;

struct TrajectoryEvent {
  double t = 0;
  /// FloorClamp, StepHalved, StepSizeUnderflow, BlowUp, or a module error name.
  std::string kind;
  std::optional<std::size_t> edge;
  std::string detail;
};

struct TrajectoryRow {
  double t = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd q;
  Eigen::VectorXd lambda;
  double L = 0;
  double dLdt = 0;
  double residual = 0;
};

struct TrajectoryRecord {
  std::vector<TrajectoryRow> rows;
  std::vector<TrajectoryEvent> events;
  Status status = Status::ReachedHorizon;
  State terminal;
  std::size_t steps = 0;

  std::size_t count_events(std::string_view kind) const;
  std::vector<double> L_series() const;
};

// -- Generic flow engine ----------------------------------------------------

using VectorField = std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& x)>;

struct StepProbe {
  Eigen::VectorXd xdot;
  bool converged = false;
};

/// A flow plus a probe evaluated once at the start of every step. The probe
/// returns the first stage derivative, may record the sample, and decides
/// convergence.
struct FlowSystem {
  VectorField derivative;
  std::function<StepProbe(double t, const Eigen::VectorXd& x, bool record)> probe;
};

struct FlowOutcome {
  Status status = Status::ReachedHorizon;
  State terminal;
  std::vector<TrajectoryEvent> events;
  std::size_t steps = 0;
};

/// Integrates x' = f(t, x) from t = 0. When a step would push some x_e below
/// x_min, the event is classified by whether the current slope would empty
/// the edge within one base step (x_e + h xdot_e < 0). Slow decay is clamped
/// to the floor, logged when the edge first arrives there. Fast collapse, or
/// a module error inside an intermediate stage, halves the step (adapt) until
/// the step falls below kMinStep, which ends the run with BlowUp; without
/// adaptation it is clamped and the run ends with BlowUp. Module errors at an
/// accepted state end the run with status Error.
FlowOutcome run_flow(const FlowSystem& sys, const Eigen::VectorXd& x0, const IntegratorConfig& cfg);

struct FlowSample {
  double t;
  Eigen::VectorXd x;
};

struct FlowRecord {
  std::vector<FlowSample> samples;
  FlowOutcome outcome;
};

/// Integrates an arbitrary vector field, recording (t, x) samples. Stops
/// early when ||xdot||_inf <= fp_tol and stop_at_fixed_point is set.
FlowRecord simulate_flow(const VectorField& f, const Eigen::VectorXd& x0, const IntegratorConfig& cfg);

// -- Physarum trajectories --------------------------------------------------

/// Integrates the dynamics from x0 > 0, recording currents, drops, L, dL/dt
/// and the feasibility residual at each sample. Converged when
/// || |q| - x ||_inf <= fp_tol.
TrajectoryRecord simulate(const ProblemInstance& inst, const DynamicsSpec& spec, const Eigen::VectorXd& x0,
                          const IntegratorConfig& cfg);

struct BoundsReport {
  double C = 0;
  std::optional<double> D;
  std::size_t samples = 0;
  /// min over samples/edges of x_e(t) - x_e(0) exp(-C t) (+inf when C is unbounded).
  double worst_lower_slack = 0;
  /// min of max(x_e(0), D|b|_1) - x_e(t).
  std::optional<double> worst_upper_slack;
  /// min of D|b|_1 - |q_e(t)|.
  std::optional<double> worst_current_slack;
  double tol = 1e-9;

  bool lower_ok() const { return worst_lower_slack >= -tol; }
  bool upper_ok() const { return !worst_upper_slack || *worst_upper_slack >= -tol; }
  bool current_ok() const { return !worst_current_slack || *worst_current_slack >= -tol; }
  bool ok() const { return lower_ok() && upper_ok() && current_ok(); }
};

/// Growth constant C in xdot_e >= -C x_e: 1 for Uniform, the declared
/// reactivity bound for NonUniform, and 1 for Refined (g >= 0).
double decay_constant(const DynamicsSpec& spec);

/// Checks x_e(t) >= x_e(0) e^{-Ct}, x_e(t) <= max(x_e(0), D|b|_1) and
/// |q_e| <= D|b|_1 on every recorded sample. D-based checks are skipped when
/// D is not supplied.
BoundsReport bounds_check(const TrajectoryRecord& record, const ProblemInstance& inst, const DynamicsSpec& spec,
                          std::optional<double> D);

// -- CSV ----------------------------------------------------------------------

/// Header: t,x_1..x_m,q_1..q_m,L,dLdt,residual; 17 significant digits.
void write_trajectory_csv(const TrajectoryRecord& record, const std::string& path);
/// Sidecar with status, step count, events and terminal state.
void write_events_sidecar(const TrajectoryRecord& record, const std::string& path,
                          const nlohmann::json& extra = nlohmann::json::object());
std::string sidecar_path(const std::string& csv_path);

/// Reads rows back (lambda is not stored and stays empty). Status and events
/// come from the sidecar when it exists.
TrajectoryRecord read_trajectory_csv(const std::string& path);

nlohmann::json to_json(const TrajectoryEvent& ev);
nlohmann::json to_json(const IntegratorConfig& cfg);

}  // namespace physarum
