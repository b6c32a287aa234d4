#include "physarum/instance.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace physarum {

using nlohmann::json;

ValidationReport validate(const InstanceData& data) {
  ValidationReport rep;
  rep.n = data.b.size();
  rep.m = data.c.size();

  rep.dimensions_consistent = rep.n >= 1 && rep.m >= 1 && data.A.size() == rep.n;
  for (const auto& row : data.A) {
    if (row.size() != rep.m) rep.dimensions_consistent = false;
  }
  if (!rep.dimensions_consistent) {
    rep.error = ErrorCode::DimensionMismatch;
    return rep;
  }

  rep.costs_positive = std::all_of(data.c.begin(), data.c.end(), [](std::int64_t v) { return v >= 1; });

  exact::IntMatrix A(rep.n, rep.m);
  for (std::size_t i = 0; i < rep.n; ++i)
    for (std::size_t j = 0; j < rep.m; ++j) A(i, j) = data.A[i][j];
  rep.rank = exact::rank(A);
  rep.full_row_rank = rep.rank == rep.n;

  if (!rep.costs_positive) {
    rep.error = ErrorCode::NonPositiveCost;
  } else if (!rep.full_row_rank) {
    rep.error = ErrorCode::RankDeficient;
  }
  return rep;
}

ProblemInstance::ProblemInstance(InstanceData data, InstanceMeta meta)
    : data_(std::move(data)), meta_(std::move(meta)) {
  const ValidationReport rep = validate(data_);
  if (!rep.valid()) {
    std::ostringstream msg;
    msg << "instance " << rep.n << "x" << rep.m << " rejected (rank " << rep.rank << ")";
    throw Error(*rep.error, msg.str());
  }
  A_.resize(static_cast<Eigen::Index>(n()), static_cast<Eigen::Index>(m()));
  b_.resize(static_cast<Eigen::Index>(n()));
  c_.resize(static_cast<Eigen::Index>(m()));
  for (std::size_t i = 0; i < n(); ++i) {
    b_(i) = static_cast<double>(data_.b[i]);
    for (std::size_t j = 0; j < m(); ++j) A_(i, j) = static_cast<double>(data_.A[i][j]);
  }
  for (std::size_t j = 0; j < m(); ++j) c_(j) = static_cast<double>(data_.c[j]);
}

exact::IntMatrix ProblemInstance::exact_A() const {
  exact::IntMatrix out(n(), m());
  for (std::size_t i = 0; i < n(); ++i)
    for (std::size_t j = 0; j < m(); ++j) out(i, j) = data_.A[i][j];
  return out;
}

ProblemInstance ProblemInstance::with_meta(InstanceMeta meta) const {
  ProblemInstance copy = *this;
  copy.meta_ = std::move(meta);
  return copy;
}

namespace {
InstanceMeta generated_by(std::string generator, std::optional<std::uint64_t> seed = std::nullopt) {
  InstanceMeta meta;
  meta.generator = std::move(generator);
  meta.seed = seed;
  return meta;
}
}  // namespace

ProblemInstance gen_parallel_links(const IntVec& costs) {
  if (costs.empty()) throw Error(ErrorCode::EmptyEdgeSet, "parallel links need at least one edge");
  InstanceData d;
  d.A = {IntVec(costs.size(), 1)};
  d.b = {1};
  d.c = costs;
  return ProblemInstance(std::move(d), generated_by("parallel"));
}

ProblemInstance gen_incidence(const std::vector<DirectedEdge>& edges, const IntVec& lengths,
                              std::size_t source, std::size_t sink, std::int64_t demand) {
  if (edges.empty()) throw Error(ErrorCode::EmptyEdgeSet, "graph has no edges");
  if (lengths.size() != edges.size())
    throw Error(ErrorCode::DimensionMismatch, "one length per edge required");
  if (demand < 1) throw Error(ErrorCode::InvalidArgument, "demand must be >= 1");
  if (source == sink) throw Error(ErrorCode::InvalidArgument, "source equals sink");

  std::size_t nodes = std::max(source, sink) + 1;
  for (const auto& e : edges) nodes = std::max({nodes, e.from + 1, e.to + 1});

  // Undirected connectivity over all nodes: the incidence matrix then has
  // rank nodes-1 and deleting one row restores full row rank.
  std::vector<std::size_t> parent(nodes);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const auto& e : edges) parent[find(e.from)] = find(e.to);
  std::set<std::size_t> roots;
  for (std::size_t v = 0; v < nodes; ++v) roots.insert(find(v));
  if (roots.size() != 1) throw Error(ErrorCode::DisconnectedGraph, std::to_string(roots.size()) + " components");

  InstanceData d;
  for (std::size_t v = 0; v < nodes; ++v) {
    if (v == sink) continue;
    IntVec row(edges.size(), 0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (edges[e].from == v) row[e] += 1;
      if (edges[e].to == v) row[e] -= 1;
    }
    d.A.push_back(std::move(row));
    d.b.push_back(v == source ? demand : 0);
  }
  d.c = lengths;
  try {
    return ProblemInstance(std::move(d), generated_by("incidence"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RankDeficient)
      throw Error(ErrorCode::RankDeficient, std::string("internal: connected incidence matrix lost rank: ") + e.what());
    throw;
  }
}

ProblemInstance gen_random(std::size_t n, std::size_t m, std::int64_t entry_bound, std::int64_t cost_bound,
                           std::uint64_t seed) {
  if (n < 1 || n > m) throw Error(ErrorCode::InvalidArgument, "need 1 <= n <= m");
  if (entry_bound < 1 || cost_bound < 1) throw Error(ErrorCode::InvalidArgument, "bounds must be >= 1");

  constexpr int kMaxRetries = 1000;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> entry(-entry_bound, entry_bound);
  std::uniform_int_distribution<std::int64_t> cost(1, cost_bound);

  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    InstanceData d;
    d.A.assign(n, IntVec(m));
    for (auto& row : d.A)
      for (auto& v : row) v = entry(rng);

    exact::IntMatrix ex(n, m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) ex(i, j) = d.A[i][j];
    if (exact::rank(ex) != n) continue;

    // b = A f0 for a random integer f0; a zero right-hand side is rejected
    // since its only optimum is x* = 0.
    d.b.assign(n, 0);
    for (int tries = 0; tries < kMaxRetries; ++tries) {
      IntVec f0(m);
      for (auto& v : f0) v = entry(rng);
      for (std::size_t i = 0; i < n; ++i) {
        d.b[i] = 0;
        for (std::size_t j = 0; j < m; ++j) d.b[i] += d.A[i][j] * f0[j];
      }
      if (std::any_of(d.b.begin(), d.b.end(), [](std::int64_t v) { return v != 0; })) break;
    }
    if (std::all_of(d.b.begin(), d.b.end(), [](std::int64_t v) { return v == 0; })) continue;

    d.c.resize(m);
    for (auto& v : d.c) v = cost(rng);
    return ProblemInstance(std::move(d), generated_by("random", seed));
  }
  throw Error(ErrorCode::GenerationFailed, "no full-rank instance after retries");
}

json to_json(const ProblemInstance& inst) {
  json j;
  j["n"] = inst.n();
  j["m"] = inst.m();
  j["A"] = inst.A_int();
  j["b"] = inst.b_int();
  j["c"] = inst.c_int();
  const InstanceMeta& meta = inst.meta();
  json mj = json::object();
  if (meta.distinct_bfs_costs) mj["distinct_bfs_costs"] = *meta.distinct_bfs_costs;
  if (!meta.generator.empty()) mj["generator"] = meta.generator;
  if (meta.seed) mj["seed"] = *meta.seed;
  if (meta.resamples) mj["resamples"] = *meta.resamples;
  if (!mj.empty()) j["meta"] = mj;
  return j;
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorCode::InvalidInstanceFile, std::string("unknown field '") + key + "' in " + where);
  }
}

// nlohmann converts floats to integers silently; instance data must be integral.
IntVec integer_array(const json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidInstanceFile, what + " must be an array");
  IntVec out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw Error(ErrorCode::InvalidInstanceFile, what + " must hold integers");
    out.push_back(v.get<std::int64_t>());
  }
  return out;
}

}  // namespace

ProblemInstance instance_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidInstanceFile, "instance must be a JSON object");
  reject_unknown(j, {"n", "m", "A", "b", "c", "meta"}, "instance");
  for (const char* key : {"n", "m", "A", "b", "c"}) {
    if (!j.contains(key)) throw Error(ErrorCode::InvalidInstanceFile, std::string("missing field '") + key + "'");
  }
  InstanceData d;
  std::size_t n = 0, m = 0;
  try {
    n = j.at("n").get<std::size_t>();
    m = j.at("m").get<std::size_t>();
    if (!j.at("A").is_array()) throw Error(ErrorCode::InvalidInstanceFile, "A must be an array of rows");
    for (const auto& row : j.at("A")) d.A.push_back(integer_array(row, "A"));
    d.b = integer_array(j.at("b"), "b");
    d.c = integer_array(j.at("c"), "c");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInstanceFile, e.what());
  }
  if (d.b.size() != n || d.c.size() != m || d.A.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "declared n/m disagree with array sizes");

  InstanceMeta meta;
  if (j.contains("meta")) {
    const json& mj = j.at("meta");
    if (!mj.is_object()) throw Error(ErrorCode::InvalidInstanceFile, "meta must be an object");
    reject_unknown(mj, {"distinct_bfs_costs", "generator", "seed", "resamples"}, "meta");
    try {
      if (mj.contains("distinct_bfs_costs")) meta.distinct_bfs_costs = mj.at("distinct_bfs_costs").get<bool>();
      if (mj.contains("generator")) meta.generator = mj.at("generator").get<std::string>();
      if (mj.contains("seed")) meta.seed = mj.at("seed").get<std::uint64_t>();
      if (mj.contains("resamples")) meta.resamples = mj.at("resamples").get<int>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidInstanceFile, e.what());
    }
  }
  return ProblemInstance(std::move(d), std::move(meta));
}

std::string dump_instance(const ProblemInstance& inst) { return to_json(inst).dump(2) + "\n"; }

ProblemInstance load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInstanceFile, path + ": " + e.what());
  }
  return instance_from_json(j);
}

void save_instance_file(const ProblemInstance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << dump_instance(inst);
}

}  // namespace physarum
