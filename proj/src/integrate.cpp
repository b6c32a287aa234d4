#include "physarum/integrate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "physarum/lyapunov.hpp"

namespace physarum {

using nlohmann::json;

std::string_view method_name(Method m) { return m == Method::Euler ? "euler" : "rk4"; }

std::string_view status_name(Status s) {
  switch (s) {
    case Status::ReachedHorizon: return "ReachedHorizon";
    case Status::ConvergedToFixedPoint: return "ConvergedToFixedPoint";
    case Status::BlowUp: return "BlowUp";
    case Status::Error: return "Error";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  if (s == "euler") return Method::Euler;
  if (s == "rk4") return Method::RK4;
  throw Error(ErrorCode::InvalidConfig, "unknown method '" + std::string(s) + "'");
}

Status parse_status(std::string_view s) {
  for (Status st : {Status::ReachedHorizon, Status::ConvergedToFixedPoint, Status::BlowUp, Status::Error}) {
    if (status_name(st) == s) return st;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown status '" + std::string(s) + "'");
}

void IntegratorConfig::check() const {
  if (!(h > 0) || !(t_end > 0) || !(x_min > 0) || record_every < 1 || !(fp_tol >= 0))
    throw Error(ErrorCode::InvalidConfig, "need h > 0, t_end > 0, x_min > 0, record_every >= 1, fp_tol >= 0");
}

std::size_t TrajectoryRecord::count_events(std::string_view kind) const {
  std::size_t n = 0;
  for (const auto& ev : events) n += ev.kind == kind;
  return n;
}

std::vector<double> TrajectoryRecord::L_series() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.L);
  return out;
}

// ---------------------------------------------------------------------------
// Engine

namespace {

Eigen::VectorXd advance(const FlowSystem& sys, Method method, double t, const Eigen::VectorXd& x, double h,
                        const Eigen::VectorXd& k1) {
  if (method == Method::Euler) return x + h * k1;
  const Eigen::VectorXd k2 = sys.derivative(t + 0.5 * h, x + 0.5 * h * k1);
  const Eigen::VectorXd k3 = sys.derivative(t + 0.5 * h, x + 0.5 * h * k2);
  const Eigen::VectorXd k4 = sys.derivative(t + h, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

FlowOutcome run_flow(const FlowSystem& sys, const Eigen::VectorXd& x0, const IntegratorConfig& cfg) {
  cfg.check();
  if (x0.size() == 0 || !x0.allFinite() || x0.minCoeff() <= 0)
    throw Error(ErrorCode::InvalidArgument, "initial capacities must be finite and positive");
  if (!(cfg.x_min < x0.minCoeff())) throw Error(ErrorCode::InvalidConfig, "x_min must be below min initial capacity");

  FlowOutcome out;
  double t = 0.0;
  Eigen::VectorXd x = x0;
  double h = cfg.h;
  const double end_eps = 1e-12 * std::max(1.0, cfg.t_end);

  auto finish = [&](Status status) {
    out.status = status;
    out.terminal = State{x, t};
    return out;
  };

  try {
    for (std::size_t step = 0;; ++step) {
      const bool at_end = cfg.t_end - t <= end_eps;
      const bool record = at_end || step % static_cast<std::size_t>(cfg.record_every) == 0;
      StepProbe probe = sys.probe(t, x, record);
      if (probe.converged) {
        if (!record) sys.probe(t, x, true);
        return finish(Status::ConvergedToFixedPoint);
      }
      if (at_end) return finish(Status::ReachedHorizon);
      if (!probe.xdot.allFinite()) {
        out.events.push_back({t, "NonFiniteInput", std::nullopt, "non-finite derivative"});
        return finish(Status::Error);
      }

      for (;;) {
        const double h_step = std::min(h, cfg.t_end - t);
        Eigen::VectorXd x_new;
        std::optional<Error> stage_error;
        try {
          x_new = advance(sys, cfg.method, t, x, h_step, probe.xdot);
        } catch (const Error& err) {
          // An intermediate stage left the domain of the flow; the accepted
          // state itself was fine, so a shorter step may still succeed.
          if (!cfg.adapt) throw;
          stage_error = err;
          x_new = Eigen::VectorXd::Constant(x.size(), std::numeric_limits<double>::quiet_NaN());
        }

        bool fast = !x_new.allFinite();
        std::vector<std::size_t> crossing;
        for (Eigen::Index e = 0; e < x_new.size(); ++e) {
          if (!(x_new(e) >= cfg.x_min)) {
            crossing.push_back(static_cast<std::size_t>(e));
            if (x(e) + cfg.h * probe.xdot(e) < 0) fast = true;
          }
        }
        if (crossing.empty()) {
          t += h_step;
          x = std::move(x_new);
          h = std::min(cfg.h, 2.0 * h);
          break;
        }

        if (fast && cfg.adapt) {
          h = 0.5 * h_step;
          out.events.push_back({t, "StepHalved", crossing.front(),
                                "h=" + std::to_string(h) +
                                    (stage_error ? " after " + std::string(stage_error->name()) : "")});
          if (h < kMinStep) {
            out.events.push_back({t, "StepSizeUnderflow", crossing.front(), "adaptive step fell below 1e-15"});
            out.events.push_back({t, "BlowUp", crossing.front(), "capacity collapsing to the floor"});
            sys.probe(t, x, true);
            out.steps = step;
            return finish(Status::BlowUp);
          }
          continue;
        }

        for (std::size_t e : crossing) {
          const auto i = static_cast<Eigen::Index>(e);
          // Logged once per arrival; an edge resting on the floor stays quiet.
          if (x(i) > cfg.x_min) {
            std::ostringstream detail;
            detail << "x=" << x_new(i) << " clamped to " << cfg.x_min;
            out.events.push_back({t + h_step, "FloorClamp", e, detail.str()});
          }
          x_new(i) = cfg.x_min;
        }
        t += h_step;
        x = std::move(x_new);
        if (fast) {
          out.events.push_back({t, "BlowUp", crossing.front(), "floor reached with strongly negative slope"});
          sys.probe(t, x, true);
          out.steps = step + 1;
          return finish(Status::BlowUp);
        }
        break;
      }
      out.steps = step + 1;
    }
  } catch (const Error& err) {
    out.events.push_back({t, std::string(err.name()), std::nullopt, err.what()});
    return finish(Status::Error);
  }
}

FlowRecord simulate_flow(const VectorField& f, const Eigen::VectorXd& x0, const IntegratorConfig& cfg) {
  FlowRecord rec;
  FlowSystem sys;
  sys.derivative = f;
  sys.probe = [&](double t, const Eigen::VectorXd& x, bool record) {
    StepProbe p{f(t, x), false};
    if (record && (rec.samples.empty() || rec.samples.back().t < t)) rec.samples.push_back({t, x});
    p.converged = cfg.stop_at_fixed_point && p.xdot.lpNorm<Eigen::Infinity>() <= cfg.fp_tol;
    return p;
  };
  rec.outcome = run_flow(sys, x0, cfg);
  return rec;
}

// ---------------------------------------------------------------------------
// Physarum trajectories

TrajectoryRecord simulate(const ProblemInstance& inst, const DynamicsSpec& spec, const Eigen::VectorXd& x0,
                          const IntegratorConfig& cfg) {
  if (static_cast<std::size_t>(x0.size()) != inst.m())
    throw Error(ErrorCode::DimensionMismatch, "x0 length differs from edge count");

  TrajectoryRecord rec;
  FlowSystem sys;
  sys.derivative = [&](double t, const Eigen::VectorXd& x) { return rhs(inst, spec, State{x, t}); };
  sys.probe = [&](double t, const Eigen::VectorXd& x, bool record) {
    const MinEnergySolution sol = solve_potentials(inst, x);
    StepProbe p{rhs_from_solution(inst, spec, x, t, sol), false};
    const double mismatch = (sol.q.cwiseAbs() - x).lpNorm<Eigen::Infinity>();
    if (record && (rec.rows.empty() || rec.rows.back().t < t)) {
      TrajectoryRow row;
      row.t = t;
      row.x = x;
      row.q = sol.q;
      row.lambda = normalized_drops(inst, sol);
      row.L = lyapunov_value(inst, x, sol);
      row.dLdt = dLdt(inst, spec, x, t, sol);
      row.residual = sol.residual;
      rec.rows.push_back(std::move(row));
    }
    p.converged = cfg.stop_at_fixed_point && mismatch <= cfg.fp_tol;
    return p;
  };
  FlowOutcome outcome = run_flow(sys, x0, cfg);
  rec.events = std::move(outcome.events);
  rec.status = outcome.status;
  rec.terminal = std::move(outcome.terminal);
  rec.steps = outcome.steps;
  return rec;
}

double decay_constant(const DynamicsSpec& spec) {
  switch (spec.variant) {
    case Variant::Uniform: return 1.0;
    case Variant::NonUniform: return spec.reactivity->C();
    case Variant::Refined: return 1.0;
  }
  return 1.0;
}

BoundsReport bounds_check(const TrajectoryRecord& record, const ProblemInstance& inst, const DynamicsSpec& spec,
                          std::optional<double> D) {
  BoundsReport rep;
  rep.C = decay_constant(spec);
  rep.D = D;
  rep.samples = record.rows.size();
  rep.worst_lower_slack = std::numeric_limits<double>::infinity();
  if (record.rows.empty()) return rep;

  const Eigen::VectorXd& x0 = record.rows.front().x;
  std::optional<double> cap;
  if (D) {
    cap = *D * inst.b().lpNorm<1>();
    rep.worst_upper_slack = std::numeric_limits<double>::infinity();
    rep.worst_current_slack = std::numeric_limits<double>::infinity();
  }
  for (const auto& row : record.rows) {
    for (Eigen::Index e = 0; e < row.x.size(); ++e) {
      if (std::isfinite(rep.C)) {
        rep.worst_lower_slack = std::min(rep.worst_lower_slack, row.x(e) - x0(e) * std::exp(-rep.C * row.t));
      }
      if (cap) {
        rep.worst_upper_slack = std::min(*rep.worst_upper_slack, std::max(x0(e), *cap) - row.x(e));
        if (row.q.size() == row.x.size())
          rep.worst_current_slack = std::min(*rep.worst_current_slack, *cap - std::abs(row.q(e)));
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json to_json(const TrajectoryEvent& ev) {
  json j{{"t", ev.t}, {"kind", ev.kind}, {"detail", ev.detail}};
  if (ev.edge) j["edge"] = *ev.edge + 1;
  return j;
}

json to_json(const IntegratorConfig& cfg) {
  return json{{"method", std::string(method_name(cfg.method))},
              {"h", cfg.h},
              {"t_end", cfg.t_end},
              {"x_min", cfg.x_min},
              {"adapt", cfg.adapt},
              {"record_every", cfg.record_every},
              {"fp_tol", cfg.fp_tol},
              {"stop_at_fixed_point", cfg.stop_at_fixed_point}};
}

std::string sidecar_path(const std::string& csv_path) { return csv_path + ".events.json"; }

void write_trajectory_csv(const TrajectoryRecord& record, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  const Eigen::Index m = record.rows.empty() ? record.terminal.x.size() : record.rows.front().x.size();
  out << "t";
  for (Eigen::Index e = 1; e <= m; ++e) out << ",x_" << e;
  for (Eigen::Index e = 1; e <= m; ++e) out << ",q_" << e;
  out << ",L,dLdt,residual\n";
  for (const auto& row : record.rows) {
    out << fmt17(row.t);
    for (Eigen::Index e = 0; e < m; ++e) out << ',' << fmt17(row.x(e));
    for (Eigen::Index e = 0; e < m; ++e) out << ',' << fmt17(row.q(e));
    out << ',' << fmt17(row.L) << ',' << fmt17(row.dLdt) << ',' << fmt17(row.residual) << '\n';
  }
}

void write_events_sidecar(const TrajectoryRecord& record, const std::string& path, const json& extra) {
  json j = extra;
  j["status"] = std::string(status_name(record.status));
  j["steps"] = record.steps;
  json evs = json::array();
  for (const auto& ev : record.events) evs.push_back(to_json(ev));
  j["events"] = evs;
  j["terminal"] = json{{"t", record.terminal.t},
                       {"x", std::vector<double>(record.terminal.x.data(),
                                                 record.terminal.x.data() + record.terminal.x.size())}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << j.dump(2) << '\n';
}

TrajectoryRecord read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, path + ": empty file");

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 6 || (header.size() - 4) % 2 != 0 || header.front() != "t")
    throw Error(ErrorCode::IoError, path + ": unexpected trajectory header");
  const std::size_t m = (header.size() - 4) / 2;
  for (std::size_t e = 0; e < m; ++e) {
    if (header[1 + e] != "x_" + std::to_string(e + 1) || header[1 + m + e] != "q_" + std::to_string(e + 1))
      throw Error(ErrorCode::IoError, path + ": unexpected column '" + header[1 + e] + "'");
  }

  TrajectoryRecord rec;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::strtod(cell.c_str(), nullptr));
    if (vals.size() != header.size()) throw Error(ErrorCode::IoError, path + ": ragged row");
    TrajectoryRow row;
    row.t = vals[0];
    row.x = Eigen::Map<const Eigen::VectorXd>(vals.data() + 1, static_cast<Eigen::Index>(m));
    row.q = Eigen::Map<const Eigen::VectorXd>(vals.data() + 1 + m, static_cast<Eigen::Index>(m));
    row.L = vals[1 + 2 * m];
    row.dLdt = vals[2 + 2 * m];
    row.residual = vals[3 + 2 * m];
    rec.rows.push_back(std::move(row));
  }
  if (rec.rows.empty()) throw Error(ErrorCode::IoError, path + ": no samples");
  rec.terminal = State{rec.rows.back().x, rec.rows.back().t};

  std::ifstream side(sidecar_path(path));
  if (side) {
    try {
      json j;
      side >> j;
      rec.status = parse_status(j.at("status").get<std::string>());
      rec.steps = j.value("steps", std::size_t{0});
      for (const auto& ev : j.value("events", json::array())) {
        TrajectoryEvent e{ev.at("t").get<double>(), ev.at("kind").get<std::string>(), std::nullopt,
                          ev.value("detail", std::string{})};
        if (ev.contains("edge")) e.edge = ev.at("edge").get<std::size_t>() - 1;
        rec.events.push_back(std::move(e));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::IoError, sidecar_path(path) + ": " + e.what());
    }
  }
  return rec;
}

}  // namespace physarum
