#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "physarum/error.hpp"
#include "physarum/experiments.hpp"
#include "physarum/instance.hpp"
#include "physarum/integrate.hpp"
#include "physarum/lyapunov.hpp"
#include "physarum/oracle.hpp"

namespace physarum::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw Error(ErrorCode::InvalidArgument, "not a number: '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw Error(ErrorCode::InvalidArgument, "not an integer: '" + s + "'");
  return v;
}

IntVec parse_int_list(const std::string& s) {
  IntVec out;
  for (const auto& item : split(s, ',')) out.push_back(parse_int(item));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, what + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
}

void emit(const json& j, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << j.dump(2) << "\n";
  } else {
    write_text(path, j.dump(2) + "\n");
  }
}

}  // namespace

DynamicsSpec parse_spec(const std::string& arg) {
  if (arg == "uniform") return DynamicsSpec::uniform();
  if (!arg.empty() && arg.front() == '{') return spec_from_json(parse_json(arg, "inline spec"));
  if (fs::exists(arg)) return spec_from_json(parse_json(read_file(arg), arg));
  throw Error(ErrorCode::InvalidSpec, "spec must be 'uniform', inline JSON or a file: '" + arg + "'");
}

Eigen::VectorXd parse_x0(const std::string& arg, std::size_t m, std::uint64_t seed) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(m));
  if (arg == "ones") {
    x.setOnes();
  } else if (arg.rfind("uniform:", 0) == 0) {
    const auto bounds = split(arg.substr(8), ',');
    if (bounds.size() != 2) throw Error(ErrorCode::InvalidArgument, "expected uniform:lo,hi");
    const double lo = parse_double(bounds[0]), hi = parse_double(bounds[1]);
    if (!(lo > 0 && hi >= lo)) throw Error(ErrorCode::InvalidArgument, "need 0 < lo <= hi in " + arg);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    for (auto& v : x) v = u(rng);
  } else {
    std::string body = arg;
    if (!body.empty() && body.front() == '[') body = body.substr(1, body.size() - 2);
    const auto items = split(body, ',');
    if (items.size() != m)
      throw Error(ErrorCode::DimensionMismatch,
                  "x0 has " + std::to_string(items.size()) + " entries, instance has " + std::to_string(m));
    for (std::size_t e = 0; e < m; ++e) x(static_cast<Eigen::Index>(e)) = parse_double(items[e]);
  }
  for (double v : x) {
    if (!(v > 0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "x0 must be strictly positive");
  }
  return x;
}

namespace {

struct SimOptions {
  std::string spec = "uniform";
  std::string x0 = "ones";
  double h = 1e-3;
  double t_end = 50.0;
  std::string method = "rk4";
  double x_min = 1e-12;
  bool no_adapt = false;
  int record_every = 10;
  double fp_tol = 1e-8;
  std::uint64_t seed = 0;
};

IntegratorConfig make_config(const SimOptions& o) {
  IntegratorConfig cfg;
  cfg.method = parse_method(o.method);
  cfg.h = o.h;
  cfg.t_end = o.t_end;
  cfg.x_min = o.x_min;
  cfg.adapt = !o.no_adapt;
  cfg.record_every = o.record_every;
  cfg.fp_tol = o.fp_tol;
  cfg.check();
  return cfg;
}

json run_summary(const TrajectoryRecord& rec) {
  return json{{"status", std::string(status_name(rec.status))},
              {"t_final", rec.terminal.t},
              {"steps", rec.steps},
              {"samples", rec.rows.size()},
              {"events", rec.events.size()},
              {"clamps", rec.count_events("FloorClamp")}};
}

TrajectoryRecord simulate_to_csv(const ProblemInstance& inst, const DynamicsSpec& spec, const Eigen::VectorXd& x0,
                                 const IntegratorConfig& cfg, const std::string& csv) {
  TrajectoryRecord rec = simulate(inst, spec, x0, cfg);
  write_trajectory_csv(rec, csv);
  write_events_sidecar(rec, sidecar_path(csv), json{{"spec", to_json(spec)}, {"config", to_json(cfg)}});
  return rec;
}

// A sweep grid is the cartesian product of instances, specs, x0 choices and
// step sizes. Relative instance paths resolve against the grid file.
struct SweepJob {
  std::size_t index;
  std::string instance_path;
  json spec;
  std::string x0;
  double h;
};

int cmd_sweep(const std::string& grid_path, const std::string& out_dir, const SimOptions& base, std::ostream& out) {
  const json grid = parse_json(read_file(grid_path), grid_path);
  const fs::path root = fs::path(grid_path).parent_path();
  static const std::vector<std::string> known = {"instances", "specs", "x0", "h", "t_end", "method", "record_every"};
  for (const auto& [key, _] : grid.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error(ErrorCode::InvalidSpec, "unknown grid field '" + key + "'");
  }
  if (!grid.contains("instances") || !grid.contains("specs"))
    throw Error(ErrorCode::InvalidSpec, "grid needs 'instances' and 'specs'");

  SimOptions opts = base;
  opts.t_end = grid.value("t_end", base.t_end);
  opts.method = grid.value("method", base.method);
  opts.record_every = grid.value("record_every", base.record_every);
  const std::vector<std::string> x0s = grid.value("x0", std::vector<std::string>{base.x0});
  const std::vector<double> hs = grid.value("h", std::vector<double>{base.h});

  std::vector<SweepJob> jobs;
  for (const auto& ip : grid.at("instances")) {
    fs::path p = ip.get<std::string>();
    if (p.is_relative()) p = root / p;
    for (const auto& s : grid.at("specs")) {
      for (const auto& x0 : x0s) {
        for (double h : hs) jobs.push_back({jobs.size(), p.string(), s, x0, h});
      }
    }
  }
  fs::create_directories(out_dir);

  std::vector<json> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      const SweepJob& job = jobs[k];
      char name[32];
      std::snprintf(name, sizeof name, "run-%04zu.csv", job.index);
      const std::string csv = (fs::path(out_dir) / name).string();
      json row{{"run", job.index}, {"instance", job.instance_path}, {"spec", job.spec}, {"x0", job.x0}, {"h", job.h}};
      try {
        const ProblemInstance inst = load_instance_file(job.instance_path);
        const DynamicsSpec spec =
            job.spec.is_string() ? parse_spec(job.spec.get<std::string>()) : spec_from_json(job.spec);
        SimOptions o = opts;
        o.h = job.h;
        const TrajectoryRecord rec =
            simulate_to_csv(inst, spec, parse_x0(job.x0, inst.m(), opts.seed), make_config(o), csv);
        row["csv"] = csv;
        row.update(run_summary(rec));
      } catch (const Error& e) {
        row["status"] = "Error";
        row["error"] = std::string(e.what());
      }
      rows[k] = std::move(row);
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), jobs.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }

  const json summary{{"grid", grid_path}, {"runs", rows}};
  write_text((fs::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");
  std::size_t errors = 0;
  for (const auto& r : rows) errors += r.at("status") == "Error";
  out << "sweep: " << rows.size() << " runs, " << errors << " errors -> " << out_dir << "\n";
  return errors == 0 ? kExitOk : kExitFail;
}

int cmd_verify(const std::string& csv, const std::string& inst_path, double tol, std::ostream& out) {
  const TrajectoryRecord rec = read_trajectory_csv(csv);
  const ProblemInstance inst = load_instance_file(inst_path);
  if (rec.rows.empty()) throw Error(ErrorCode::IoError, csv + ": no samples");
  if (static_cast<std::size_t>(rec.rows.back().x.size()) != inst.m())
    throw Error(ErrorCode::DimensionMismatch, "trajectory and instance disagree on m");
  const OracleReport report = enumerate_bfs(inst);
  const Eigen::VectorXd& x = rec.rows.back().x;

  const FixedPointVerdict fp = verify_fixed_point(inst, report, x, tol);
  const MonotonicityReport mono = check_monotone(rec.L_series());
  json j{{"samples", rec.rows.size()},
         {"t_final", rec.rows.back().t},
         {"status", std::string(status_name(rec.status))},
         {"fixed_point", fp.is_fixed_point},
         {"nearest_basis", fp.nearest},
         {"distance", fp.distance},
         {"equilibrium_residual", fp.equilibrium_residual},
         {"lyapunov_violations", mono.violations},
         {"distinct_costs", report.distinct_costs}};
  bool pass = fp.is_fixed_point && mono.ok();
  if (report.distinct_costs) {
    const double dist = (x - report.x_star()).lpNorm<Eigen::Infinity>();
    const double gap = optimality_gap(inst, x, report);
    j["distance_to_optimum"] = dist;
    j["gap"] = gap;
    pass = pass && dist <= tol && std::abs(gap) <= tol;
  } else {
    j["gap"] = nullptr;
  }
  j["pass"] = pass;
  out << j.dump(2) << "\n";
  return pass ? kExitOk : kExitFail;
}

int dispatch(CLI::App& app, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::string out_path;
  // -h is taken by the step size.
  app.set_help_flag("--help", "Print this help message and exit");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate an instance file")->require_subcommand(1);
  std::string costs;
  auto* gen_par = gen->add_subcommand("parallel", "Two nodes joined by parallel links");
  gen_par->add_option("--costs", costs, "Comma-separated positive costs")->required();
  gen_par->add_option("-o,--output", out_path, "Instance file (stdout if omitted)");

  std::string edges, lengths;
  std::size_t source = 0, sink = 1;
  std::int64_t demand = 1;
  auto* gen_inc = gen->add_subcommand("incidence", "Node-arc incidence of a directed graph");
  gen_inc->add_option("--edges", edges, "Arcs as u-v pairs, e.g. 0-1,1-2")->required();
  gen_inc->add_option("--lengths", lengths, "Comma-separated arc lengths")->required();
  gen_inc->add_option("--source", source)->required();
  gen_inc->add_option("--sink", sink)->required();
  gen_inc->add_option("--demand", demand)->capture_default_str();
  gen_inc->add_option("-o,--output", out_path);

  std::size_t rn = 2, rm = 4;
  std::int64_t entry_bound = 2, cost_bound = 9;
  std::uint64_t seed = 0;
  bool certify_random = false;
  auto* gen_rand = gen->add_subcommand("random", "Random integer instance with b = A f0");
  gen_rand->add_option("--n", rn)->capture_default_str();
  gen_rand->add_option("--m", rm)->capture_default_str();
  gen_rand->add_option("--entry-bound", entry_bound)->capture_default_str();
  gen_rand->add_option("--cost-bound", cost_bound)->capture_default_str();
  gen_rand->add_option("--seed", seed)->capture_default_str();
  gen_rand->add_flag("--certify", certify_random, "Run the oracle and record distinct_bfs_costs");
  gen_rand->add_option("-o,--output", out_path);

  // oracle
  std::string inst_path;
  auto* oracle = app.add_subcommand("oracle", "Enumerate basic feasible solutions");
  oracle->add_option("FILE", inst_path)->required();
  oracle->add_option("-o,--output", out_path);

  // simulate
  SimOptions sim;
  std::string csv_path;
  auto* simulate_cmd = app.add_subcommand("simulate", "Integrate the dynamics and write a trajectory CSV");
  simulate_cmd->add_option("FILE", inst_path)->required();
  simulate_cmd->add_option("--spec", sim.spec, "uniform, inline JSON or a spec file")->capture_default_str();
  simulate_cmd->add_option("--x0", sim.x0, "ones | uniform:lo,hi | comma list")->capture_default_str();
  simulate_cmd->add_option("--h", sim.h)->capture_default_str();
  simulate_cmd->add_option("--t-end", sim.t_end)->capture_default_str();
  simulate_cmd->add_option("--method", sim.method)->check(CLI::IsMember({"euler", "rk4"}))->capture_default_str();
  simulate_cmd->add_option("--x-min", sim.x_min)->capture_default_str();
  simulate_cmd->add_flag("--no-adapt", sim.no_adapt);
  simulate_cmd->add_option("--record-every", sim.record_every)->capture_default_str();
  simulate_cmd->add_option("--fp-tol", sim.fp_tol)->capture_default_str();
  simulate_cmd->add_option("--seed", sim.seed, "Seed for uniform:lo,hi")->capture_default_str();
  simulate_cmd->add_option("-o,--output", csv_path)->required();

  // verify
  double tol = 1e-4;
  auto* verify = app.add_subcommand("verify", "Check a trajectory's terminal state against the oracle");
  verify->add_option("CSV", csv_path)->required();
  verify->add_option("FILE", inst_path)->required();
  verify->add_option("--tol", tol)->capture_default_str();

  // experiment
  std::string preset;
  std::string artifacts;
  bool list = false;
  auto* experiment = app.add_subcommand("experiment", "Run a named preset");
  experiment->add_option("ID", preset);
  experiment->add_option("--seed", seed)->capture_default_str();
  experiment->add_option("--artifacts", artifacts, "Directory for trajectory CSVs");
  experiment->add_flag("--list", list, "List preset ids");
  experiment->add_option("-o,--output", out_path);

  // sweep
  std::string grid_path, out_dir;
  auto* sweep = app.add_subcommand("sweep", "Run a grid of simulations concurrently");
  sweep->add_option("GRIDFILE", grid_path)->required();
  sweep->add_option("-o,--output", out_dir)->required();

  app.require_subcommand(1);

  std::vector<std::string> argv_store;
  argv_store.push_back("physarum");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const auto write_instance = [&](const ProblemInstance& inst) {
    if (out_path.empty()) {
      out << dump_instance(inst);
    } else {
      save_instance_file(inst, out_path);
    }
    return kExitOk;
  };

  if (gen_par->parsed()) return write_instance(gen_parallel_links(parse_int_list(costs)));
  if (gen_inc->parsed()) {
    std::vector<DirectedEdge> arcs;
    for (const auto& item : split(edges, ',')) {
      const auto ends = split(item, '-');
      if (ends.size() != 2) throw Error(ErrorCode::InvalidArgument, "arc must look like u-v: '" + item + "'");
      arcs.push_back({static_cast<std::size_t>(parse_int(ends[0])), static_cast<std::size_t>(parse_int(ends[1]))});
    }
    return write_instance(gen_incidence(arcs, parse_int_list(lengths), source, sink, demand));
  }
  if (gen_rand->parsed()) {
    ProblemInstance inst = gen_random(rn, rm, entry_bound, cost_bound, seed);
    if (certify_random) inst = certify(inst, enumerate_bfs(inst));
    return write_instance(inst);
  }
  if (oracle->parsed()) {
    const ProblemInstance inst = load_instance_file(inst_path);
    emit(to_json(enumerate_bfs(inst)), out_path, out);
    return kExitOk;
  }
  if (simulate_cmd->parsed()) {
    const ProblemInstance inst = load_instance_file(inst_path);
    const DynamicsSpec spec = parse_spec(sim.spec);
    const IntegratorConfig cfg = make_config(sim);
    const TrajectoryRecord rec = simulate_to_csv(inst, spec, parse_x0(sim.x0, inst.m(), sim.seed), cfg, csv_path);
    out << run_summary(rec).dump() << "\n";
    return rec.status == Status::Error ? kExitFail : kExitOk;
  }
  if (verify->parsed()) return cmd_verify(csv_path, inst_path, tol, out);
  if (experiment->parsed()) {
    if (list) {
      for (const auto& p : list_presets()) out << p.id << "\t" << p.description << "\n";
      return kExitOk;
    }
    if (preset.empty()) throw Error(ErrorCode::InvalidArgument, "experiment needs an ID or --list");
    const ExperimentOutcome outcome = run_preset(preset, seed, RunOptions{artifacts});
    emit(to_json(outcome), out_path, out);
    return outcome.pass ? kExitOk : kExitFail;
  }
  if (sweep->parsed()) return cmd_sweep(grid_path, out_dir, sim, out);
  return kExitUsage;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Physarum dynamics for weighted basis pursuit"};
  app.name("physarum");
  try {
    return dispatch(app, args, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const json::exception& e) {
    err << "error: InvalidInstanceFile: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitUsage;
}

}  // namespace physarum::cli
