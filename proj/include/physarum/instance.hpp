#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "physarum/error.hpp"
#include "physarum/exact.hpp"

namespace physarum {

using IntMat = std::vector<std::vector<std::int64_t>>;
using IntVec = std::vector<std::int64_t>;

/// Provenance and oracle certification attached to an instance.
struct InstanceMeta {
  /// Set only by the oracle after enumeration; empty means unknown.
  std::optional<bool> distinct_bfs_costs;
  std::string generator;
  std::optional<std::uint64_t> seed;
  /// How many candidates a certifying generator rejected before this one.
  std::optional<int> resamples;

  bool operator==(const InstanceMeta&) const = default;
};

/// Raw, possibly invalid problem data as read from a file or a caller.
struct InstanceData {
  IntMat A;
  IntVec b;
  IntVec c;
};

struct ValidationReport {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t rank = 0;
  bool dimensions_consistent = false;
  bool costs_positive = false;
  bool full_row_rank = false;
  /// First failed invariant, if any.
  std::optional<ErrorCode> error;

  bool valid() const { return !error.has_value(); }
};

ValidationReport validate(const InstanceData& data);

/// Weighted basis pursuit data: minimize c^T x subject to A f = b, |f| <= x.
/// Immutable once constructed; construction verifies full row rank exactly.
class ProblemInstance {
 public:
  /// Throws Error(RankDeficient | NonPositiveCost | DimensionMismatch).
  explicit ProblemInstance(InstanceData data, InstanceMeta meta = {});

  std::size_t n() const { return data_.b.size(); }
  std::size_t m() const { return data_.c.size(); }

  const IntMat& A_int() const { return data_.A; }
  const IntVec& b_int() const { return data_.b; }
  const IntVec& c_int() const { return data_.c; }
  const InstanceData& data() const { return data_; }
  const InstanceMeta& meta() const { return meta_; }

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& b() const { return b_; }
  const Eigen::VectorXd& c() const { return c_; }

  exact::IntMatrix exact_A() const;

  /// Copy with replaced metadata (instances are otherwise immutable).
  ProblemInstance with_meta(InstanceMeta meta) const;

  bool operator==(const ProblemInstance& o) const {
    return data_.A == o.data_.A && data_.b == o.data_.b && data_.c == o.data_.c && meta_ == o.meta_;
  }

 private:
  InstanceData data_;
  InstanceMeta meta_;
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
  Eigen::VectorXd c_;
};

// Generators. All are pure functions of their arguments.

/// Two nodes joined by k parallel links carrying one unit of flow.
ProblemInstance gen_parallel_links(const IntVec& costs);

struct DirectedEdge {
  std::size_t from;
  std::size_t to;
};

/// Node-arc incidence instance with the sink row removed. Column e is +1 at
/// its tail and -1 at its head; b carries +demand at the source.
ProblemInstance gen_incidence(const std::vector<DirectedEdge>& edges, const IntVec& lengths,
                              std::size_t source, std::size_t sink, std::int64_t demand);

/// Random integer instance with b = A f0, deterministic in seed.
ProblemInstance gen_random(std::size_t n, std::size_t m, std::int64_t entry_bound,
                           std::int64_t cost_bound, std::uint64_t seed);

// JSON: {"n","m","A","b","c","meta"}; unknown fields are rejected.
nlohmann::json to_json(const ProblemInstance& inst);
ProblemInstance instance_from_json(const nlohmann::json& j);

/// Canonical serialization used for files: byte-stable across round trips.
std::string dump_instance(const ProblemInstance& inst);
ProblemInstance load_instance_file(const std::string& path);
void save_instance_file(const ProblemInstance& inst, const std::string& path);

}  // namespace physarum
