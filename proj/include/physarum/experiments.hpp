#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "physarum/dynamics.hpp"
#include "physarum/instance.hpp"
#include "physarum/integrate.hpp"
#include "physarum/oracle.hpp"

namespace physarum {

struct PresetInfo {
  std::string id;
  std::string description;
};

const std::vector<PresetInfo>& list_presets();

struct ExperimentOutcome {
  std::string id;
  std::uint64_t seed = 0;
  bool pass = false;
  nlohmann::json evidence = nlohmann::json::object();
  std::vector<std::string> artifacts;
};

nlohmann::json to_json(const ExperimentOutcome& outcome);

struct RunOptions {
  /// Directory for trajectory CSVs; nothing is written when empty.
  std::string artifact_dir;
};

/// Runs a named preset. Throws UnknownPreset; errors raised inside a run are
/// reported as failing evidence rather than thrown.
ExperimentOutcome run_preset(const std::string& id, std::uint64_t seed = 0, const RunOptions& opts = {});

// -- Shared building blocks (also used by the test suites) -------------------

struct CertifiedInstance {
  ProblemInstance instance;
  OracleReport report;
  int resamples = 0;
};

struct DrawOptions {
  std::size_t max_n = 3;
  std::size_t max_m = 6;
  std::int64_t entry_bound = 2;
  std::int64_t cost_bound = 9;
  int max_resamples = 10000;
};

/// Random instance (sizes drawn from seed) resampled until the oracle
/// certifies distinct basic-solution costs. Throws GenerationFailed.
CertifiedInstance draw_certified_instance(std::uint64_t seed, const DrawOptions& opts = {});

struct ConvergenceCheck {
  double x_error = 0;  // || x(T) - x* ||_inf
  double q_error = 0;  // || |q(T)| - x* ||_inf
  Status status = Status::ReachedHorizon;
  double t_final = 0;
  bool converged(double tol) const { return x_error <= tol && q_error <= tol; }
};

ConvergenceCheck check_convergence(const ProblemInstance& inst, const TrajectoryRecord& rec,
                                   const Eigen::VectorXd& x_star);

/// Integrator settings used by the convergence presets.
IntegratorConfig convergence_config();

}  // namespace physarum
