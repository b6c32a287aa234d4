#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "physarum/dynamics.hpp"

namespace physarum::cli {

/// Exit codes: 0 success, 1 judgment failure, 2 usage or data error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

/// Runs one invocation; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Accepts a keyword (uniform), inline JSON, or a path to a JSON file.
DynamicsSpec parse_spec(const std::string& arg);
/// ones | uniform:lo,hi (seeded) | comma list | JSON array.
Eigen::VectorXd parse_x0(const std::string& arg, std::size_t m, std::uint64_t seed);

}  // namespace physarum::cli
