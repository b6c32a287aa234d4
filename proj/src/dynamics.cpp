#include "physarum/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace physarum {

using nlohmann::json;

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Uniform: return "uniform";
    case Variant::NonUniform: return "nonuniform";
    case Variant::Refined: return "refined";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Reactivity

ReactivityFn::ReactivityFn(std::string kind, Evaluator eval, Traits traits, json params)
    : kind_(std::move(kind)), eval_(std::move(eval)), traits_(traits), params_(std::move(params)) {
  if (!(traits_.epsilon >= 0.0) || !(traits_.C >= traits_.epsilon))
    throw Error(ErrorCode::InvalidSpec, "reactivity bounds must satisfy 0 <= eps <= C");
}

double ReactivityFn::operator()(std::size_t e, const Eigen::VectorXd& x, double t) const {
  const double a = eval_(e, x, t);
  const double slack = 1e-12 * std::max(1.0, std::isfinite(traits_.C) ? traits_.C : 1.0);
  if (!std::isfinite(a) && std::isfinite(traits_.C)) {
    throw Error(ErrorCode::ReactivityBoundViolated, kind_ + ": non-finite reactivity");
  }
  if (a < -slack || a > traits_.C + slack || (traits_.epsilon > 0 && a < traits_.epsilon - slack)) {
    std::ostringstream msg;
    msg << kind_ << ": a_" << e << "(t=" << t << ") = " << a << " outside [" << traits_.epsilon << ", "
        << traits_.C << "]";
    throw Error(ErrorCode::ReactivityBoundViolated, msg.str());
  }
  return a;
}

Eigen::VectorXd ReactivityFn::values(const Eigen::VectorXd& x, double t) const {
  Eigen::VectorXd a(x.size());
  for (Eigen::Index e = 0; e < x.size(); ++e) a(e) = (*this)(static_cast<std::size_t>(e), x, t);
  return a;
}

json ReactivityFn::to_json() const {
  json j = params_;
  j["kind"] = kind_;
  return j;
}

namespace {

void check_per_edge(const std::vector<double>& a, const char* what) {
  if (a.empty()) throw Error(ErrorCode::InvalidSpec, std::string(what) + ": empty vector");
  for (double v : a) {
    if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::InvalidSpec, std::string(what) + ": negative entry");
  }
}

// A single entry is shared by every edge.
double at_edge(const std::vector<double>& a, std::size_t e) {
  if (a.size() == 1) return a.front();
  if (e >= a.size()) throw Error(ErrorCode::DimensionMismatch, "per-edge reactivity shorter than edge count");
  return a[e];
}

}  // namespace

ReactivityFn ReactivityFn::constant(std::vector<double> a) {
  check_per_edge(a, "constant");
  const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
  Traits tr{.epsilon = *lo, .C = *hi};
  json params{{"a", a}};
  return ReactivityFn(
      "constant", [a](std::size_t e, const Eigen::VectorXd&, double) { return at_edge(a, e); }, tr,
      std::move(params));
}

ReactivityFn ReactivityFn::constant_all(double a) {
  check_per_edge({a}, "constant");
  return ReactivityFn(
      "constant", [a](std::size_t, const Eigen::VectorXd&, double) { return a; }, Traits{.epsilon = a, .C = a},
      json{{"value", a}});
}

ReactivityFn ReactivityFn::exp_decay(double scale) {
  if (!(scale > 0)) throw Error(ErrorCode::InvalidSpec, "exp_decay scale must be positive");
  return ReactivityFn(
      "exp_decay", [scale](std::size_t, const Eigen::VectorXd&, double t) { return scale * std::exp(-t); },
      Traits{.epsilon = 0.0, .C = scale, .trend = Trend::Decreasing}, json{{"scale", scale}});
}

ReactivityFn ReactivityFn::inverse_state() {
  return ReactivityFn(
      "inverse_state", [](std::size_t e, const Eigen::VectorXd& x, double) { return 1.0 / x(e); },
      Traits{.epsilon = 0.0,
             .C = std::numeric_limits<double>::infinity(),
             .lipschitz = false,
             .state_dependent = true},
      json::object());
}

ReactivityFn ReactivityFn::ramp_up(std::vector<double> base, double growth) {
  check_per_edge(base, "ramp_up");
  if (!(growth >= 0)) throw Error(ErrorCode::InvalidSpec, "ramp growth must be >= 0");
  const auto [lo, hi] = std::minmax_element(base.begin(), base.end());
  Traits tr{.epsilon = *lo, .C = *hi * (1.0 + growth), .trend = Trend::Increasing};
  json params{{"base", base}, {"growth", growth}};
  return ReactivityFn(
      "ramp_up",
      [base, growth](std::size_t e, const Eigen::VectorXd&, double t) {
        return at_edge(base, e) * (1.0 + growth * -std::expm1(-t));
      },
      tr, std::move(params));
}

ReactivityFn ReactivityFn::ramp_down(std::vector<double> base, double growth) {
  check_per_edge(base, "ramp_down");
  if (!(growth >= 0)) throw Error(ErrorCode::InvalidSpec, "ramp growth must be >= 0");
  const auto [lo, hi] = std::minmax_element(base.begin(), base.end());
  Traits tr{.epsilon = *lo, .C = *hi * (1.0 + growth), .trend = Trend::Decreasing};
  json params{{"base", base}, {"growth", growth}};
  return ReactivityFn(
      "ramp_down",
      [base, growth](std::size_t e, const Eigen::VectorXd&, double t) {
        return at_edge(base, e) * (1.0 + growth * std::exp(-t));
      },
      tr, std::move(params));
}

// ---------------------------------------------------------------------------
// Response

ResponseFn::ResponseFn(std::string kind, Evaluator eval, double value_at_zero, json params,
                       std::optional<double> linear_lower_bound)
    : kind_(std::move(kind)),
      eval_(std::move(eval)),
      value_at_zero_(value_at_zero),
      params_(std::move(params)),
      linear_lower_bound_(linear_lower_bound) {
  if (!std::isfinite(value_at_zero_) || value_at_zero_ < 0)
    throw Error(ErrorCode::InvalidSpec, kind_ + ": g(0) must be finite and nonnegative");
  if ((*this)(1.0) != 1.0) throw Error(ErrorCode::ReactivityBoundViolated, kind_ + ": g(1) != 1");
  if (!is_monotone_on_grid(*this, 16.0, 257))
    throw Error(ErrorCode::ReactivityBoundViolated, kind_ + ": not increasing on [0, 16]");
}

ResponseFn ResponseFn::power(double mu) {
  if (!(mu > 0)) throw Error(ErrorCode::InvalidSpec, "power response needs mu > 0");
  // Convex for mu >= 1, so the tangent at 1 is a global lower bound. For
  // mu < 1, g(0) = 0 forces alpha >= 1 while the slope at 1 forces alpha <= mu.
  std::optional<double> lb;
  if (mu >= 1.0) lb = mu;
  return ResponseFn(
      "power", [mu](double y) { return std::pow(y, mu); }, 0.0, json{{"mu", mu}}, lb);
}

ResponseFn ResponseFn::saturating(double mu, double alpha) {
  if (!(mu > 0) || !(alpha > 0)) throw Error(ErrorCode::InvalidSpec, "saturating response needs mu, alpha > 0");
  return ResponseFn(
      "saturating",
      [mu, alpha](double y) {
        const double ym = std::pow(y, mu);
        return (1.0 + alpha) * ym / (1.0 + alpha * ym);
      },
      0.0, json{{"mu", mu}, {"alpha", alpha}}, std::nullopt);
}

double ResponseFn::operator()(double y) const {
  if (y == 0.0) return value_at_zero_;
  return eval_(y);
}

double ResponseFn::derivative_at_one() const {
  const double h = 1e-6;
  return ((*this)(1.0 + h) - (*this)(1.0 - h)) / (2 * h);
}

json ResponseFn::to_json() const {
  json j = params_;
  j["kind"] = kind_;
  return j;
}

bool satisfies_linear_lower_bound(const ResponseFn& g, double alpha, double y_max, int samples) {
  for (int i = 0; i < samples; ++i) {
    const double y = y_max * i / (samples - 1);
    if (g(y) < 1.0 + alpha * (y - 1.0) - 1e-12) return false;
  }
  return true;
}

bool is_monotone_on_grid(const ResponseFn& g, double y_max, int samples) {
  double prev = g(0.0);
  for (int i = 1; i < samples; ++i) {
    const double v = g(y_max * i / (samples - 1));
    if (v < prev) return false;
    prev = v;
  }
  return true;
}

std::optional<double> estimate_linear_lower_bound(const ResponseFn& g, double y_max, int samples) {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  // Even grid plus points closing in on y = 1, where the binding chord of a
  // smooth g tends to g'(1).
  std::vector<double> ys;
  for (int i = 0; i < samples; ++i) ys.push_back(y_max * i / (samples - 1));
  for (double d = 0.1; d >= 1e-6; d /= 2) {
    if (1.0 - d >= 0.0 && 1.0 - d <= y_max) ys.push_back(1.0 - d);
    if (1.0 + d <= y_max) ys.push_back(1.0 + d);
  }
  for (const double y : ys) {
    if (std::abs(y - 1.0) < 1e-9) continue;
    const double chord = (g(y) - 1.0) / (y - 1.0);
    if (y < 1.0) lower = std::max(lower, chord);
    else upper = std::min(upper, chord);
  }
  if (!(upper > 0) || lower > upper) return std::nullopt;
  if (!std::isfinite(upper)) return lower > 0 ? std::optional<double>(lower) : std::nullopt;
  return upper;
}

// ---------------------------------------------------------------------------
// Spec

DynamicsSpec DynamicsSpec::uniform() { return DynamicsSpec{}; }

DynamicsSpec DynamicsSpec::nonuniform(ReactivityFn a) {
  DynamicsSpec s;
  s.variant = Variant::NonUniform;
  s.reactivity = std::move(a);
  return s;
}

DynamicsSpec DynamicsSpec::refined(ResponseFn g) { return refined(std::vector<ResponseFn>{std::move(g)}); }

DynamicsSpec DynamicsSpec::refined(std::vector<ResponseFn> g) {
  if (g.empty()) throw Error(ErrorCode::InvalidSpec, "refined dynamics needs a response function");
  DynamicsSpec s;
  s.variant = Variant::Refined;
  s.responses = std::move(g);
  return s;
}

const ResponseFn& DynamicsSpec::response(std::size_t e) const {
  if (responses.size() == 1) return responses.front();
  if (e >= responses.size()) throw Error(ErrorCode::DimensionMismatch, "fewer responses than edges");
  return responses[e];
}

Eigen::VectorXd DynamicsSpec::reactivities(const Eigen::VectorXd& x, double t) const {
  switch (variant) {
    case Variant::Uniform: return Eigen::VectorXd::Ones(x.size());
    case Variant::NonUniform: return reactivity->values(x, t);
    case Variant::Refined: break;
  }
  throw Error(ErrorCode::InvalidSpec, "refined dynamics has no reactivity");
}

json to_json(const DynamicsSpec& spec) {
  json j{{"variant", std::string(variant_name(spec.variant))}};
  if (spec.variant == Variant::NonUniform) j["reactivity"] = spec.reactivity->to_json();
  if (spec.variant == Variant::Refined) {
    if (spec.responses.size() == 1) {
      j["response"] = spec.responses.front().to_json();
    } else {
      json arr = json::array();
      for (const auto& g : spec.responses) arr.push_back(g.to_json());
      j["response"] = arr;
    }
  }
  return j;
}

namespace {

std::vector<double> per_edge_or_value(const json& j, const char* vec_key, const char* kind) {
  if (j.contains(vec_key)) return j.at(vec_key).get<std::vector<double>>();
  if (j.contains("value")) return {j.at("value").get<double>()};
  throw Error(ErrorCode::InvalidSpec, std::string(kind) + " needs '" + vec_key + "' or 'value'");
}

ReactivityFn reactivity_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    if (j.contains("a")) return ReactivityFn::constant(j.at("a").get<std::vector<double>>());
    return ReactivityFn::constant_all(j.at("value").get<double>());
  }
  if (kind == "exp_decay") return ReactivityFn::exp_decay(j.value("scale", 0.5));
  if (kind == "inverse_state") return ReactivityFn::inverse_state();
  if (kind == "ramp_up" || kind == "ramp_down") {
    std::vector<double> base = per_edge_or_value(j, "base", kind.c_str());
    const double growth = j.value("growth", 1.0);
    return kind == "ramp_up" ? ReactivityFn::ramp_up(std::move(base), growth)
                             : ReactivityFn::ramp_down(std::move(base), growth);
  }
  throw Error(ErrorCode::InvalidSpec, "unknown reactivity kind '" + kind + "'");
}

// Shape parameters are required; a silent default would change the dynamics.
double required(const json& j, const char* key, const std::string& kind) {
  if (!j.contains(key)) throw Error(ErrorCode::InvalidSpec, kind + " response needs '" + key + "'");
  return j.at(key).get<double>();
}

ResponseFn response_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "power") return ResponseFn::power(required(j, "mu", kind));
  if (kind == "saturating") return ResponseFn::saturating(required(j, "mu", kind), required(j, "alpha", kind));
  throw Error(ErrorCode::InvalidSpec, "unknown response kind '" + kind + "'");
}

}  // namespace

DynamicsSpec spec_from_json(const json& j) {
  try {
    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "uniform") return DynamicsSpec::uniform();
    if (variant == "nonuniform") {
      if (!j.contains("reactivity")) throw Error(ErrorCode::InvalidSpec, "nonuniform needs 'reactivity'");
      return DynamicsSpec::nonuniform(reactivity_from_json(j.at("reactivity")));
    }
    if (variant == "refined") {
      if (!j.contains("response")) return DynamicsSpec::refined(ResponseFn::identity());
      const json& r = j.at("response");
      if (r.is_array()) {
        std::vector<ResponseFn> gs;
        for (const auto& item : r) gs.push_back(response_from_json(item));
        return DynamicsSpec::refined(std::move(gs));
      }
      return DynamicsSpec::refined(response_from_json(r));
    }
    throw Error(ErrorCode::InvalidSpec, "unknown variant '" + variant + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, e.what());
  }
}

// ---------------------------------------------------------------------------
// Right-hand sides

Eigen::VectorXd normalized_drops(const ProblemInstance& inst, const MinEnergySolution& sol) {
  return (inst.A().transpose() * sol.p).cwiseAbs().cwiseQuotient(inst.c());
}

Eigen::VectorXd rhs_from_solution(const ProblemInstance& inst, const DynamicsSpec& spec, const Eigen::VectorXd& x,
                                  double t, const MinEnergySolution& sol) {
  const Eigen::Index m = x.size();
  Eigen::VectorXd xdot(m);
  switch (spec.variant) {
    case Variant::Uniform:
      xdot = sol.q.cwiseAbs() - x;
      break;
    case Variant::NonUniform:
      for (Eigen::Index e = 0; e < m; ++e) {
        const double a = (*spec.reactivity)(static_cast<std::size_t>(e), x, t);
        xdot(e) = a * (std::abs(sol.q(e)) - x(e));
      }
      break;
    case Variant::Refined:
      for (Eigen::Index e = 0; e < m; ++e) {
        const auto& g = spec.response(static_cast<std::size_t>(e));
        xdot(e) = x(e) > 0 ? x(e) * (g(std::abs(sol.q(e)) / x(e)) - 1.0) : 0.0;
      }
      break;
  }
  (void)inst;
  return xdot;
}

Eigen::VectorXd rhs(const ProblemInstance& inst, const DynamicsSpec& spec, const State& state) {
  const MinEnergySolution sol = solve_potentials(inst, state.x);
  return rhs_from_solution(inst, spec, state.x, state.t, sol);
}

Eigen::VectorXd rhs_rewritten(const ProblemInstance& inst, const DynamicsSpec& spec, const State& state) {
  const MinEnergySolution sol = solve_potentials(inst, state.x);
  const Eigen::VectorXd lambda = normalized_drops(inst, sol);
  const Eigen::VectorXd& x = state.x;
  Eigen::VectorXd xdot(x.size());
  for (Eigen::Index e = 0; e < x.size(); ++e) {
    switch (spec.variant) {
      case Variant::Uniform: xdot(e) = x(e) * (lambda(e) - 1.0); break;
      case Variant::NonUniform:
        xdot(e) = (*spec.reactivity)(static_cast<std::size_t>(e), x, state.t) * x(e) * (lambda(e) - 1.0);
        break;
      case Variant::Refined: xdot(e) = x(e) * (spec.response(static_cast<std::size_t>(e))(lambda(e)) - 1.0); break;
    }
  }
  return xdot;
}

Eigen::VectorXd rhs_decay_rate(const ProblemInstance& inst, const Eigen::VectorXd& a, const Eigen::VectorXd& x) {
  const MinEnergySolution sol = solve_potentials(inst, x);
  return sol.q.cwiseAbs() - a.cwiseProduct(x);
}

Reformulation reformulate_nonuniform(const ProblemInstance& inst, const Eigen::VectorXd& a) {
  if (static_cast<std::size_t>(a.size()) != inst.m())
    throw Error(ErrorCode::DimensionMismatch, "one reactivity per edge required");
  constexpr std::int64_t kMaxDen = 1000;
  std::vector<std::int64_t> num(inst.m()), den(inst.m());
  for (std::size_t e = 0; e < inst.m(); ++e) {
    const double v = a(static_cast<Eigen::Index>(e));
    if (!(v > 0) || !std::isfinite(v)) throw Error(ErrorCode::NonPositiveReactivity, "reactivities must be > 0");
    bool found = false;
    for (std::int64_t d = 1; d <= kMaxDen && !found; ++d) {
      const double scaled = v * static_cast<double>(d);
      const double r = std::round(scaled);
      if (std::abs(scaled - r) <= 1e-9 * std::max(1.0, scaled)) {
        num[e] = static_cast<std::int64_t>(r);
        den[e] = d;
        found = true;
      }
    }
    if (!found) throw Error(ErrorCode::InvalidArgument, "reactivity is not a small-denominator rational");
  }
  std::int64_t scale = 1;
  for (auto d : den) scale = std::lcm(scale, d);

  InstanceData d = inst.data();
  for (std::size_t e = 0; e < inst.m(); ++e) d.c[e] = d.c[e] * num[e] * (scale / den[e]);
  InstanceMeta meta;
  meta.generator = inst.meta().generator.empty() ? "reformulated" : inst.meta().generator + "+reformulated";
  meta.seed = inst.meta().seed;
  return Reformulation{ProblemInstance(std::move(d), std::move(meta)), a, scale};
}

}  // namespace physarum
