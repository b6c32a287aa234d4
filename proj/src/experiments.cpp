#include "physarum/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <random>

#include "physarum/lyapunov.hpp"
#include "physarum/minenergy.hpp"

namespace physarum {

using nlohmann::json;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Derived seed stream so that preset runs never share generator state.
std::uint64_t mix(std::uint64_t seed, std::uint64_t k) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  std::uint64_t out[1];
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  out[0] = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return out[0];
}

class Context {
 public:
  Context(std::string id, std::uint64_t seed, const RunOptions& opts) : opts_(opts) {
    out_.id = std::move(id);
    out_.seed = seed;
    out_.pass = true;
  }

  void fail(const std::string& why) {
    out_.pass = false;
    out_.evidence["failures"].push_back(why);
  }
  json& evidence() { return out_.evidence; }

  void save(const TrajectoryRecord& rec, const std::string& tag) {
    if (opts_.artifact_dir.empty()) return;
    std::filesystem::create_directories(opts_.artifact_dir);
    const std::string path =
        (std::filesystem::path(opts_.artifact_dir) / (out_.id + "-" + std::to_string(out_.seed) + "-" + tag + ".csv"))
            .string();
    write_trajectory_csv(rec, path);
    write_events_sidecar(rec, sidecar_path(path));
    out_.artifacts.push_back(path);
  }

  ExperimentOutcome finish() && { return std::move(out_); }

 private:
  const RunOptions& opts_;
  ExperimentOutcome out_;
};

ProblemInstance unit_constraint() {
  InstanceMeta meta;
  meta.generator = "unit";
  return ProblemInstance(InstanceData{{{1}}, {1}, {1}}, meta);
}

Eigen::VectorXd ones(const ProblemInstance& inst) { return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(inst.m())); }

json convergence_row(const CertifiedInstance& ci, const ConvergenceCheck& chk, const TrajectoryRecord& rec) {
  return json{{"n", ci.instance.n()},
              {"m", ci.instance.m()},
              {"resamples", ci.resamples},
              {"x_star", to_std(ci.report.x_star())},
              {"x_final", to_std(rec.terminal.x)},
              {"x_error", chk.x_error},
              {"q_error", chk.q_error},
              {"status", std::string(status_name(chk.status))},
              {"t_final", chk.t_final},
              {"clamps", rec.count_events("FloorClamp")}};
}

constexpr int kInstancesPerPreset = 5;
constexpr double kConvergenceTol = 1e-4;

// Runs `make_spec` over certified random instances and requires convergence
// to the enumerated optimum.
void convergence_suite(Context& ctx, std::uint64_t seed,
                       const std::function<DynamicsSpec(const ProblemInstance&, std::mt19937_64&)>& make_spec,
                       const std::string& tag) {
  std::mt19937_64 rng(mix(seed, 0xC0));
  for (int k = 0; k < kInstancesPerPreset; ++k) {
    const CertifiedInstance ci = draw_certified_instance(mix(seed, static_cast<std::uint64_t>(k)));
    const DynamicsSpec spec = make_spec(ci.instance, rng);
    const TrajectoryRecord rec = simulate(ci.instance, spec, ones(ci.instance), convergence_config());
    const ConvergenceCheck chk = check_convergence(ci.instance, rec, ci.report.x_star());
    json row = convergence_row(ci, chk, rec);
    row["spec"] = to_json(spec);
    ctx.evidence()["runs"].push_back(row);
    ctx.save(rec, tag + std::to_string(k));
    if (!chk.converged(kConvergenceTol)) ctx.fail("instance " + std::to_string(k) + " did not reach x*");
  }
}

std::vector<double> draw_reactivities(std::size_t m, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> a(m);
  for (auto& v : a) v = u(rng);
  return a;
}

// -- presets ----------------------------------------------------------------

void blowup_inverse_reactivity(Context& ctx, std::uint64_t) {
  // No constraints: the minimum-energy current is zero and xdot = a(x)(0 - x).
  const ReactivityFn a = ReactivityFn::inverse_state();
  for (double x0 : {0.5, 1.0, 2.0}) {
    IntegratorConfig cfg;
    cfg.t_end = 2.0 * x0 + 1.0;
    cfg.record_every = 100;
    const VectorField f = [&](double t, const Eigen::VectorXd& x) {
      return Eigen::VectorXd(-a.values(x, t).cwiseProduct(x));
    };
    const FlowRecord rec = simulate_flow(f, Eigen::VectorXd::Constant(1, x0), cfg);
    const double t_stop = rec.outcome.terminal.t;
    ctx.evidence()["runs"].push_back(json{{"x0", x0},
                                          {"status", std::string(status_name(rec.outcome.status))},
                                          {"t_blowup", t_stop},
                                          {"x_final", rec.outcome.terminal.x(0)}});
    if (rec.outcome.status != Status::BlowUp) ctx.fail("x0=" + std::to_string(x0) + ": no blow-up detected");
    if (std::abs(t_stop - x0) > 0.01) ctx.fail("x0=" + std::to_string(x0) + ": blow-up time off");
  }
}

void nonconvergence_exp_decay(Context& ctx, std::uint64_t) {
  const ProblemInstance inst = unit_constraint();
  const DynamicsSpec spec = DynamicsSpec::nonuniform(ReactivityFn::exp_decay(0.5));
  IntegratorConfig cfg;
  cfg.h = 1e-2;
  cfg.t_end = 50.0;
  cfg.record_every = 1;
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 0.5);
  const TrajectoryRecord rec = simulate(inst, spec, x0, cfg);

  IntegratorConfig ref_cfg = cfg;
  ref_cfg.h = cfg.h / 16.0;
  ref_cfg.record_every = 1 << 30;
  const TrajectoryRecord ref = simulate(inst, spec, x0, ref_cfg);

  double sup_x = 0;
  for (const auto& row : rec.rows) sup_x = std::max(sup_x, row.x(0));
  const double x_final = rec.terminal.x(0);
  const BoundsReport bounds = bounds_check(rec, inst, spec, 1.0);
  ctx.evidence()["sup_x"] = sup_x;
  ctx.evidence()["x_final"] = x_final;
  ctx.evidence()["x_reference"] = ref.terminal.x(0);
  // 1 - x solves a linear ODE in closed form.
  const double x_closed = 1.0 - (1.0 - x0(0)) * std::exp(-0.5 * (1.0 - std::exp(-rec.terminal.t)));
  ctx.evidence()["x_closed_form"] = x_closed;
  ctx.evidence()["status"] = std::string(status_name(rec.status));
  ctx.evidence()["bounds_ok"] = bounds.ok();
  ctx.save(rec, "main");

  if (!(sup_x <= 0.75 + 1e-6)) ctx.fail("capacity exceeded 3/4");
  if (std::abs(x_final - 1.0) <= 1e-3) ctx.fail("converged to the optimum x* = 1");
  if (std::abs(x_final - ref.terminal.x(0)) > 1e-3) ctx.fail("terminal state disagrees with reference run");
  if (std::abs(x_final - x_closed) > 1e-3) ctx.fail("terminal state disagrees with the closed form");
  if (rec.status != Status::ReachedHorizon) ctx.fail("unexpected status");
  if (!bounds.ok()) ctx.fail("existence bounds violated");
}

void uniform_converges_random(Context& ctx, std::uint64_t seed) {
  convergence_suite(ctx, seed, [](const ProblemInstance&, std::mt19937_64&) { return DynamicsSpec::uniform(); },
                    "uniform");
}

void nonuniform_constant_a(Context& ctx, std::uint64_t seed) {
  convergence_suite(
      ctx, seed,
      [](const ProblemInstance& inst, std::mt19937_64& rng) {
        return DynamicsSpec::nonuniform(ReactivityFn::constant(draw_reactivities(inst.m(), rng, 0.5, 2.0)));
      },
      "const");
}

void refined_power_response(Context& ctx, std::uint64_t seed) {
  for (double mu : {0.5, 1.0, 2.0}) {
    convergence_suite(
        ctx, seed, [mu](const ProblemInstance&, std::mt19937_64&) { return DynamicsSpec::refined(ResponseFn::power(mu)); },
        "mu" + std::to_string(mu).substr(0, 3) + "-");
  }
}

void refined_saturating_response(Context& ctx, std::uint64_t seed) {
  const double mu = 2.0, alpha = 1.0;
  const ResponseFn g = ResponseFn::saturating(mu, alpha);
  // Recorded only: this member is concave at y = 1, so no constant exists on
  // any range past one and the estimate comes back null.
  const double y_max = 4.0;
  const auto alpha_lb = estimate_linear_lower_bound(g, y_max);
  ctx.evidence()["alpha_lb_on_range"] = alpha_lb ? json(*alpha_lb) : json(nullptr);
  ctx.evidence()["alpha_lb_range"] = y_max;
  convergence_suite(ctx, seed, [g](const ProblemInstance&, std::mt19937_64&) { return DynamicsSpec::refined(g); },
                    "sat");
}

void nonuniform_monotone_a(Context& ctx, std::uint64_t seed) {
  // Convergence for either time trend is recorded, not judged; the run must
  // stay well-defined and keep L nonincreasing.
  for (const bool increasing : {true, false}) {
    std::mt19937_64 rng(mix(seed, increasing ? 0x1u : 0x2u));
    for (int k = 0; k < kInstancesPerPreset; ++k) {
      const CertifiedInstance ci = draw_certified_instance(mix(seed, static_cast<std::uint64_t>(k)));
      const std::vector<double> base = draw_reactivities(ci.instance.m(), rng, 0.5, 2.0);
      const DynamicsSpec spec = DynamicsSpec::nonuniform(increasing ? ReactivityFn::ramp_up(base, 1.0)
                                                                    : ReactivityFn::ramp_down(base, 1.0));
      const TrajectoryRecord rec = simulate(ci.instance, spec, ones(ci.instance), convergence_config());
      const ConvergenceCheck chk = check_convergence(ci.instance, rec, ci.report.x_star());
      const MonotonicityReport mono = check_monotone(rec.L_series());
      json row = convergence_row(ci, chk, rec);
      row["trend"] = increasing ? "increasing" : "decreasing";
      row["converged"] = chk.converged(kConvergenceTol);
      row["lyapunov_violations"] = mono.violations;
      ctx.evidence()["runs"].push_back(row);
      ctx.save(rec, std::string(increasing ? "up" : "down") + std::to_string(k));
      if (rec.status == Status::Error || rec.status == Status::BlowUp) ctx.fail("run ended abnormally");
      if (!mono.ok()) ctx.fail("Lyapunov function increased");
    }
  }
}

std::vector<std::pair<std::string, std::function<DynamicsSpec(const ProblemInstance&, std::mt19937_64&)>>>
variant_catalog() {
  return {
      {"uniform", [](const ProblemInstance&, std::mt19937_64&) { return DynamicsSpec::uniform(); }},
      {"nonuniform",
       [](const ProblemInstance& inst, std::mt19937_64& rng) {
         return DynamicsSpec::nonuniform(ReactivityFn::constant(draw_reactivities(inst.m(), rng, 0.5, 2.0)));
       }},
      {"refined", [](const ProblemInstance&, std::mt19937_64&) { return DynamicsSpec::refined(ResponseFn::power(2.0)); }},
  };
}

void lyapunov_monotone_suite(Context& ctx, std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed, 0x7));
  IntegratorConfig cfg;
  cfg.t_end = 20.0;
  cfg.h = 1e-2;
  cfg.record_every = 1;
  for (const auto& [name, make] : variant_catalog()) {
    for (int k = 0; k < kInstancesPerPreset; ++k) {
      const CertifiedInstance ci = draw_certified_instance(mix(seed, static_cast<std::uint64_t>(k)));
      const DynamicsSpec spec = make(ci.instance, rng);
      const TrajectoryRecord rec = simulate(ci.instance, spec, ones(ci.instance), cfg);
      const MonotonicityReport mono = check_monotone(rec.L_series());
      double max_dLdt = -std::numeric_limits<double>::infinity();
      for (const auto& row : rec.rows) max_dLdt = std::max(max_dLdt, row.dLdt);
      ctx.evidence()["runs"].push_back(json{{"variant", name},
                                            {"samples", mono.samples},
                                            {"violations", mono.violations},
                                            {"worst_excess", mono.worst_excess},
                                            {"max_dLdt", max_dLdt}});
      if (!mono.ok()) ctx.fail(name + " run " + std::to_string(k) + ": L increased");
      if (max_dLdt > 1e-9) ctx.fail(name + " run " + std::to_string(k) + ": positive analytic dL/dt");
    }
  }
}

void bounds_suite(Context& ctx, std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed, 0xB));
  IntegratorConfig cfg;
  cfg.t_end = 20.0;
  cfg.h = 1e-2;
  cfg.record_every = 1;
  for (const auto& [name, make] : variant_catalog()) {
    for (int k = 0; k < kInstancesPerPreset; ++k) {
      const CertifiedInstance ci = draw_certified_instance(mix(seed, static_cast<std::uint64_t>(k)));
      const DynamicsSpec spec = make(ci.instance, rng);
      std::uniform_real_distribution<double> u(0.1, 5.0);
      Eigen::VectorXd x0(static_cast<Eigen::Index>(ci.instance.m()));
      for (auto& v : x0) v = u(rng);
      const TrajectoryRecord rec = simulate(ci.instance, spec, x0, cfg);
      const BoundsReport b = bounds_check(rec, ci.instance, spec, ci.report.D_double());
      ctx.evidence()["runs"].push_back(json{{"variant", name},
                                            {"D", ci.report.D ? json(ci.report.D->str()) : json(nullptr)},
                                            {"worst_lower_slack", b.worst_lower_slack},
                                            {"worst_upper_slack", b.worst_upper_slack.value_or(NAN)},
                                            {"worst_current_slack", b.worst_current_slack.value_or(NAN)}});
      if (!b.D) ctx.fail("D unavailable");
      if (!b.ok()) ctx.fail(name + " run " + std::to_string(k) + ": bound violated");
    }
  }
}

void minimum_risk_reweighting(Context& ctx, std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed, 0x5));
  std::uniform_int_distribution<int> quarter(2, 8);  // a_e in {0.5, 0.75, ..., 2}
  IntegratorConfig cfg;
  cfg.t_end = 10.0;
  cfg.h = 1e-2;
  cfg.record_every = 10;
  cfg.stop_at_fixed_point = false;
  for (int k = 0; k < kInstancesPerPreset; ++k) {
    const CertifiedInstance ci = draw_certified_instance(mix(seed, static_cast<std::uint64_t>(k)));
    Eigen::VectorXd a(static_cast<Eigen::Index>(ci.instance.m()));
    for (auto& v : a) v = quarter(rng) / 4.0;
    const Reformulation ref = reformulate_nonuniform(ci.instance, a);

    const Eigen::VectorXd x0 = ones(ci.instance);
    const FlowRecord decay =
        simulate_flow([&](double, const Eigen::VectorXd& x) { return rhs_decay_rate(ci.instance, a, x); }, x0, cfg);
    const DynamicsSpec spec = DynamicsSpec::nonuniform(ReactivityFn::constant(to_std(a)));
    const TrajectoryRecord nupd = simulate(ref.instance, spec, ref.to_y(x0), cfg);

    double worst = 0;
    const std::size_t count = std::min(decay.samples.size(), nupd.rows.size());
    for (std::size_t i = 0; i < count; ++i) {
      worst = std::max(worst, (ref.to_y(decay.samples[i].x) - nupd.rows[i].x).lpNorm<Eigen::Infinity>());
    }
    const OracleReport transformed = enumerate_bfs(ref.instance);
    ctx.evidence()["runs"].push_back(json{{"a", to_std(a)},
                                          {"cost_scale", ref.cost_scale},
                                          {"matched_samples", count},
                                          {"max_deviation", worst},
                                          {"transformed_x_star", to_std(transformed.x_star())},
                                          {"y_final", to_std(nupd.terminal.x)}});
    if (count < 2 || count != decay.samples.size() || count != nupd.rows.size()) ctx.fail("sample grids differ");
    if (!(worst <= 1e-6)) ctx.fail("mapped trajectories differ by " + std::to_string(worst));
  }
}

using PresetFn = void (*)(Context&, std::uint64_t);

struct Preset {
  PresetInfo info;
  PresetFn run;
};

const std::vector<Preset>& catalog() {
  static const std::vector<Preset> presets = {
      {{"blowup-inverse-reactivity",
        "Unconstrained scalar flow with reactivity 1/x collapses at t = x(0); expects BlowUp within 0.01."},
       blowup_inverse_reactivity},
      {{"nonconvergence-exp-decay",
        "Single constraint x = 1 with reactivity exp(-t)/2 from x(0) = 1/2 stays below 3/4 and misses x* = 1."},
       nonconvergence_exp_decay},
      {{"uniform-converges-random", "Uniform dynamics reach the enumerated optimum on certified random instances."},
       uniform_converges_random},
      {{"nonuniform-constant-a", "Constant per-edge reactivities in [0.5, 2] reach the enumerated optimum."},
       nonuniform_constant_a},
      {{"refined-power-response", "Response g(y) = y^mu, mu in {0.5, 1, 2}, reaches the enumerated optimum."},
       refined_power_response},
      {{"refined-saturating-response",
        "Saturating response (1 + a) y^mu / (1 + a y^mu) reaches the enumerated optimum."},
       refined_saturating_response},
      {{"nonuniform-monotone-a",
        "Time-increasing and time-decreasing reactivities; convergence recorded per trend, L must not increase."},
       nonuniform_monotone_a},
      {{"lyapunov-monotone-suite", "Sampled L is nonincreasing and analytic dL/dt <= 0 for every variant."},
       lyapunov_monotone_suite},
      {{"bounds-suite", "Exponential lower bound, capacity upper bound and current bound D|b|_1 on every sample."},
       bounds_suite},
      {{"minimum-risk-reweighting",
        "Decay-rate dynamics in x match the non-uniform dynamics in y = a x on costs a c."},
       minimum_risk_reweighting},
  };
  return presets;
}

}  // namespace

const std::vector<PresetInfo>& list_presets() {
  static const std::vector<PresetInfo> infos = [] {
    std::vector<PresetInfo> out;
    for (const auto& p : catalog()) out.push_back(p.info);
    return out;
  }();
  return infos;
}

json to_json(const ExperimentOutcome& o) {
  return json{{"id", o.id}, {"seed", o.seed}, {"pass", o.pass}, {"evidence", o.evidence}, {"artifacts", o.artifacts}};
}

ExperimentOutcome run_preset(const std::string& id, std::uint64_t seed, const RunOptions& opts) {
  const auto& presets = catalog();
  const auto it = std::find_if(presets.begin(), presets.end(), [&](const Preset& p) { return p.info.id == id; });
  if (it == presets.end()) throw Error(ErrorCode::UnknownPreset, "no preset named '" + id + "'");
  Context ctx(id, seed, opts);
  try {
    it->run(ctx, seed);
  } catch (const Error& e) {
    ctx.evidence()["error"] = json{{"name", std::string(e.name())}, {"message", e.what()}};
    ctx.fail(e.what());
  }
  return std::move(ctx).finish();
}

CertifiedInstance draw_certified_instance(std::uint64_t seed, const DrawOptions& opts) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_n(1, opts.max_n);
  const std::size_t n = pick_n(rng);
  std::uniform_int_distribution<std::size_t> pick_m(n + 1, std::max(n + 1, opts.max_m));
  const std::size_t m = pick_m(rng);
  for (int k = 0; k < opts.max_resamples; ++k) {
    const std::uint64_t sub = mix(seed, static_cast<std::uint64_t>(k) + 1);
    ProblemInstance inst = gen_random(n, m, opts.entry_bound, opts.cost_bound, sub);
    OracleReport rep = enumerate_bfs(inst);
    if (!rep.distinct_costs) continue;
    InstanceMeta meta = inst.meta();
    meta.distinct_bfs_costs = true;
    meta.resamples = k;
    return CertifiedInstance{inst.with_meta(std::move(meta)), std::move(rep), k};
  }
  throw Error(ErrorCode::GenerationFailed, "no certified instance within the resample budget");
}

ConvergenceCheck check_convergence(const ProblemInstance& inst, const TrajectoryRecord& rec,
                                   const Eigen::VectorXd& x_star) {
  ConvergenceCheck chk;
  chk.status = rec.status;
  chk.t_final = rec.terminal.t;
  chk.x_error = (rec.terminal.x - x_star).lpNorm<Eigen::Infinity>();
  const MinEnergySolution sol = solve_potentials(inst, rec.terminal.x);
  chk.q_error = (sol.q.cwiseAbs() - x_star).lpNorm<Eigen::Infinity>();
  return chk;
}

IntegratorConfig convergence_config() {
  IntegratorConfig cfg;
  cfg.h = 1e-2;
  cfg.t_end = 200.0;
  cfg.record_every = 100;
  return cfg;
}

}  // namespace physarum
