#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "physarum/instance.hpp"
#include "support/generators.hpp"

using namespace physarum;

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

// A f for integer data.
IntVec mat_vec(const IntMat& A, const IntVec& f) {
  IntVec out(A.size(), 0);
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t e = 0; e < f.size(); ++e) out[i] += A[i][e] * f[e];
  return out;
}

}  // namespace

TEST(Validate, RowOfOnesHasRankOne) {
  const ValidationReport r = validate({{{1, 1}}, {1}, {1, 2}});
  EXPECT_TRUE(r.valid());
  EXPECT_EQ(r.rank, 1u);
  EXPECT_EQ(r.n, 1u);
  EXPECT_EQ(r.m, 2u);
}

TEST(Validate, DuplicatedRowIsRankDeficient) {
  const ValidationReport r = validate({{{1, 1}, {1, 1}}, {1, 1}, {1, 1}});
  EXPECT_EQ(r.error, ErrorCode::RankDeficient);
  EXPECT_EQ(r.rank, 1u);
  EXPECT_FALSE(r.full_row_rank);
}

TEST(Validate, ZeroCostRejected) {
  const ValidationReport r = validate({{{1, 0}, {0, 1}}, {3, -2}, {1, 0}});
  EXPECT_EQ(r.error, ErrorCode::NonPositiveCost);
  EXPECT_FALSE(r.costs_positive);
}

TEST(Validate, DimensionMismatch) {
  EXPECT_EQ(validate({{{1, 1}, {1}}, {1, 1}, {1, 1}}).error, ErrorCode::DimensionMismatch);
  EXPECT_EQ(validate({{{1, 1}}, {1, 2}, {1, 1}}).error, ErrorCode::DimensionMismatch);
  EXPECT_EQ(validate({{{1, 1}}, {1}, {1}}).error, ErrorCode::DimensionMismatch);
  EXPECT_EQ(validate({{}, {}, {}}).error, ErrorCode::DimensionMismatch);
  // More rows than columns cannot have full row rank.
  EXPECT_EQ(validate({{{1}, {2}}, {1, 2}, {1}}).error, ErrorCode::RankDeficient);
}

TEST(Validate, ConstructorThrowsOnInvalidData) {
  EXPECT_EQ(error_of([] { ProblemInstance({{{1, 1}, {2, 2}}, {1, 2}, {1, 1}}); }), ErrorCode::RankDeficient);
  EXPECT_EQ(error_of([] { ProblemInstance({{{1}}, {1}, {-1}}); }), ErrorCode::NonPositiveCost);
}

TEST(ParallelLinks, TwoEdges) {
  const ProblemInstance inst = gen_parallel_links({1, 2});
  EXPECT_EQ(inst.A_int(), (IntMat{{1, 1}}));
  EXPECT_EQ(inst.b_int(), (IntVec{1}));
  EXPECT_EQ(inst.c_int(), (IntVec{1, 2}));
}

TEST(ParallelLinks, SingleEdge) {
  const ProblemInstance inst = gen_parallel_links({5});
  EXPECT_EQ(inst.A_int(), (IntMat{{1}}));
  EXPECT_EQ(inst.b_int(), (IntVec{1}));
  EXPECT_EQ(inst.c_int(), (IntVec{5}));
}

TEST(ParallelLinks, ThreeEdgesCheapestIsSecond) {
  const ProblemInstance inst = gen_parallel_links({3, 1, 2});
  EXPECT_EQ(inst.A_int(), (IntMat{{1, 1, 1}}));
  // Each basic solution routes the unit on one edge.
  std::int64_t best_cost = std::numeric_limits<std::int64_t>::max();
  std::size_t best = 99;
  for (std::size_t e = 0; e < inst.m(); ++e) {
    IntVec f(inst.m(), 0);
    f[e] = 1;
    ASSERT_EQ(mat_vec(inst.A_int(), f), inst.b_int());
    if (inst.c_int()[e] < best_cost) best_cost = inst.c_int()[e], best = e;
  }
  EXPECT_EQ(best, 1u);
  EXPECT_EQ(best_cost, 1);
}

TEST(ParallelLinks, Errors) {
  EXPECT_EQ(error_of([] { gen_parallel_links({}); }), ErrorCode::EmptyEdgeSet);
  EXPECT_EQ(error_of([] { gen_parallel_links({1, 0}); }), ErrorCode::NonPositiveCost);
}

TEST(Incidence, PathForcesUnitFlow) {
  // s=0 -> v=1 -> t=2
  const ProblemInstance inst = gen_incidence({{0, 1}, {1, 2}}, {1, 1}, 0, 2, 1);
  EXPECT_EQ(inst.n(), 2u);
  EXPECT_EQ(inst.m(), 2u);
  EXPECT_EQ(mat_vec(inst.A_int(), {1, 1}), inst.b_int());
  // Square and invertible, so the feasible flow is unique.
  EXPECT_EQ(exact::determinant(inst.exact_A()) != 0, true);
}

TEST(Incidence, TwoParallelArcsMatchParallelLinks) {
  const ProblemInstance inc = gen_incidence({{0, 1}, {0, 1}}, {4, 7}, 0, 1, 1);
  const ProblemInstance par = gen_parallel_links({4, 7});
  EXPECT_EQ(inc.A_int(), par.A_int());
  EXPECT_EQ(inc.b_int(), par.b_int());
  EXPECT_EQ(inc.c_int(), par.c_int());
}

TEST(Incidence, DiamondPrefersCheaperPath) {
  // s=0, a=1, b=2, t=3; arcs s->a, a->t, s->b, b->t.
  const ProblemInstance inst = gen_incidence({{0, 1}, {1, 3}, {0, 2}, {2, 3}}, {1, 1, 2, 1}, 0, 3, 1);
  const IntVec via_a{1, 1, 0, 0}, via_b{0, 0, 1, 1};
  ASSERT_EQ(mat_vec(inst.A_int(), via_a), inst.b_int());
  ASSERT_EQ(mat_vec(inst.A_int(), via_b), inst.b_int());
  auto cost = [&](const IntVec& f) {
    std::int64_t s = 0;
    for (std::size_t e = 0; e < f.size(); ++e) s += inst.c_int()[e] * f[e];
    return s;
  };
  EXPECT_EQ(cost(via_a), 2);
  EXPECT_EQ(cost(via_b), 3);
}

TEST(Incidence, ColumnsAreSignedIncidence) {
  const ProblemInstance inst = gen_incidence({{0, 1}, {2, 1}, {0, 2}}, {1, 1, 1}, 0, 1, 3);
  // Sink row (node 1) removed; remaining rows are nodes 0 and 2.
  EXPECT_EQ(inst.A_int(), (IntMat{{1, 0, 1}, {0, 1, -1}}));
  EXPECT_EQ(inst.b_int(), (IntVec{3, 0}));
}

TEST(Incidence, Errors) {
  EXPECT_EQ(error_of([] { gen_incidence({{0, 1}, {2, 3}}, {1, 1}, 0, 3, 1); }), ErrorCode::DisconnectedGraph);
  EXPECT_EQ(error_of([] { gen_incidence({{0, 1}}, {1, 2}, 0, 1, 1); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(error_of([] { gen_incidence({{0, 1}}, {1}, 0, 1, 0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(error_of([] { gen_incidence({{0, 1}}, {1}, 0, 0, 1); }), ErrorCode::InvalidArgument);
}

TEST(Random, OneByOne) {
  const ProblemInstance inst = gen_random(1, 1, 1, 1, 7);
  ASSERT_EQ(inst.A_int().size(), 1u);
  EXPECT_EQ(std::abs(inst.A_int()[0][0]), 1);
  EXPECT_EQ(inst.c_int(), (IntVec{1}));
  EXPECT_EQ(inst.meta().generator, "random");
  EXPECT_EQ(inst.meta().seed, 7u);
}

TEST(Random, TwoByFourValidates) {
  const ProblemInstance inst = gen_random(2, 4, 2, 5, 42);
  const ValidationReport r = validate(inst.data());
  EXPECT_TRUE(r.valid());
  EXPECT_EQ(r.rank, 2u);
  for (const auto& row : inst.A_int())
    for (auto v : row) EXPECT_LE(std::abs(v), 2);
  for (auto c : inst.c_int()) {
    EXPECT_GE(c, 1);
    EXPECT_LE(c, 5);
  }
}

TEST(Random, DeterministicInSeed) {
  EXPECT_EQ(gen_random(3, 6, 2, 9, 99), gen_random(3, 6, 2, 9, 99));
  EXPECT_EQ(dump_instance(gen_random(2, 5, 3, 4, 1)), dump_instance(gen_random(2, 5, 3, 4, 1)));
  EXPECT_NE(dump_instance(gen_random(3, 6, 2, 9, 1)), dump_instance(gen_random(3, 6, 2, 9, 2)));
}

TEST(Random, Errors) {
  EXPECT_EQ(error_of([] { gen_random(3, 2, 1, 1, 0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(error_of([] { gen_random(0, 2, 1, 1, 0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(error_of([] { gen_random(1, 2, 0, 1, 0); }), ErrorCode::InvalidArgument);
}

TEST(RandomProperty, EveryDrawValidatesWithinBounds) {
  proptest::Gen gen(5);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = gen.index(1, 4), m = gen.index(n, 7);
    const std::int64_t eb = gen.integer(1, 3), cb = gen.integer(1, 9);
    const ProblemInstance inst = gen_random(n, m, eb, cb, gen.seed());
    const ValidationReport r = validate(inst.data());
    ASSERT_TRUE(r.valid()) << "draw " << k;
    EXPECT_EQ(r.rank, n);
    bool nonzero_b = false;
    for (auto v : inst.b_int()) nonzero_b |= v != 0;
    EXPECT_TRUE(nonzero_b);
    for (const auto& row : inst.A_int())
      for (auto v : row) EXPECT_LE(std::abs(v), eb);
    for (auto c : inst.c_int()) EXPECT_TRUE(c >= 1 && c <= cb);
  }
}

TEST(Json, RoundTripIsByteStable) {
  proptest::Gen gen(6);
  for (int k = 0; k < 50; ++k) {
    const ProblemInstance inst = gen.instance(4, 7);
    const std::string text = dump_instance(inst);
    const ProblemInstance back = instance_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(back, inst);
    EXPECT_EQ(dump_instance(back), text);
  }
}

TEST(Json, FieldNames) {
  const nlohmann::json j = to_json(gen_parallel_links({1, 2}));
  EXPECT_EQ(j.at("n"), 1);
  EXPECT_EQ(j.at("m"), 2);
  EXPECT_EQ(j.at("A"), nlohmann::json::parse("[[1,1]]"));
  EXPECT_EQ(j.at("b"), nlohmann::json::parse("[1]"));
  EXPECT_EQ(j.at("c"), nlohmann::json::parse("[1,2]"));
}

TEST(Json, MetaSurvivesRoundTrip) {
  InstanceMeta meta;
  meta.distinct_bfs_costs = true;
  meta.generator = "random";
  meta.seed = 12;
  meta.resamples = 3;
  const ProblemInstance inst = gen_parallel_links({1, 2}).with_meta(meta);
  EXPECT_EQ(instance_from_json(to_json(inst)).meta(), meta);
}

TEST(Json, RejectsUnknownOrMalformed) {
  using nlohmann::json;
  const json good = json::parse(R"({"n":1,"m":2,"A":[[1,1]],"b":[1],"c":[1,2]})");
  EXPECT_NO_THROW(instance_from_json(good));
  json extra = good;
  extra["weights"] = 1;
  EXPECT_EQ(error_of([&] { instance_from_json(extra); }), ErrorCode::InvalidInstanceFile);
  json meta_extra = good;
  meta_extra["meta"] = {{"colour", "red"}};
  EXPECT_EQ(error_of([&] { instance_from_json(meta_extra); }), ErrorCode::InvalidInstanceFile);
  json missing = good;
  missing.erase("c");
  EXPECT_EQ(error_of([&] { instance_from_json(missing); }), ErrorCode::InvalidInstanceFile);
  json wrong_n = good;
  wrong_n["n"] = 2;
  EXPECT_EQ(error_of([&] { instance_from_json(wrong_n); }), ErrorCode::DimensionMismatch);
  json floats = good;
  floats["A"] = json::parse("[[1.5,1]]");
  EXPECT_EQ(error_of([&] { instance_from_json(floats); }), ErrorCode::InvalidInstanceFile);
}

TEST(Json, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "physarum_instance_roundtrip.json";
  const ProblemInstance inst = gen_incidence({{0, 1}, {1, 2}, {0, 2}}, {1, 2, 4}, 0, 2, 2);
  save_instance_file(inst, path.string());
  EXPECT_EQ(load_instance_file(path.string()), inst);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), dump_instance(inst));
  std::filesystem::remove(path);
  EXPECT_EQ(error_of([&] { load_instance_file(path.string()); }), ErrorCode::IoError);
}
