// plateau: batch driver for the phase-field soap-film solver.
//
// Exit codes: 0 ok, 1 non-convergence, 2 configuration error, 3 infeasible constraint.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "plateau/config.hpp"
#include "plateau/isoperimetric.hpp"
#include "plateau/recovery.hpp"
#include "plateau/scenario.hpp"
#include "plateau/solver.hpp"
#include "plateau/spanning.hpp"

using namespace plateau;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kNonConvergence = 1, kConfig = 2, kInfeasible = 3;

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}

std::string history_csv(const MinimizerResult& R) {
  std::string s = MinimizerResult::history_header() + "\n";
  for (const auto& row : R.history) s += row + "\n";
  return s;
}

// Per-loop spanning report at level t as CSV rows; failing slices are ';'-separated.
std::string span_rows(const Mask& S, const SpanningGeometry& G, double t, int* failing) {
  std::ostringstream s;
  auto res = is_spanning(S, G);
  for (std::size_t l = 0; l < res.loops.size(); ++l) {
    const auto& L = res.loops[l];
    s << t << ',' << l << ',' << (L.pass ? "pass" : "fail") << ',' << L.slices_passed << ',';
    for (std::size_t k = 0; k < L.failing_slices.size(); ++k) s << (k ? ";" : "") << L.failing_slices[k];
    s << '\n';
    if (!L.pass && failing) ++*failing;
  }
  return s.str();
}

ScalarField initial_field(const RunConfig& rc, const Problem& P, const std::string& init_path) {
  if (!init_path.empty()) {
    ScalarField u = resample(load_field(init_path), P.grid());
    for (std::size_t i = 0; i < u.size(); ++i)
      if (P.wire.mask[i]) u[i] = 0.0;
    return u;
  }
  const auto& s = rc.solver;
  switch (s.init) {
    case InitKind::recovery:
      return build_recovery(rc.sharp(P.grid()), s.config.eps, s.recovery_M, s.config.delta, P.W, P.wire_mask());
    case InitKind::uniform: return init_field(P.grid(), InitPreset::uniform, s.config.seed, P.wire_mask());
    case InitKind::noise: break;
  }
  return init_field(P.grid(), InitPreset::noise, s.config.seed, P.wire_mask());
}

void write_run(const fs::path& out, const std::string& tag, const MinimizerResult& R, const Problem& P,
               const SolverConfig& c) {
  dump_field(R.field, (out / (tag + ".json")).string());
  write_text(out / (tag == "field" ? "history.csv" : tag + "_history.csv"), history_csv(R));
  int failing = 0;
  std::string rows;
  for (double t : c.levels()) rows += span_rows(superlevel_set(R.field, t, P.wire_mask()), P.span, t, &failing);
  if (failing > 0) write_text(out / (tag + "_witness.csv"), "level,loop,status,slices_passed,failing_slices\n" + rows);
  for (const auto& w : R.sfr_warnings) std::cerr << "warning: outside the soap-film regime: " << w << '\n';
}

int cmd_minimize(const std::string& config, const std::string& init, const fs::path& out) {
  auto doc = ConfigDoc::load(config);
  RunConfig rc = parse_run_config(doc);
  Problem P = rc.problem();
  ScalarField u = initial_field(rc, P, init);
  auto R = minimize(P, rc.solver.config, u);
  fs::create_directories(out);
  write_run(out, "field", R, P, rc.solver.config);
  write_text(out / "sweep.csv", sweep_csv({R}));
  std::cout << "energy " << 0.5 * R.breakdown.total << " iterations " << R.iterations << " reason "
            << to_string(R.convergence_reason) << '\n';
  return R.converged() ? kOk : kNonConvergence;
}

int cmd_sweep(const std::string& config, const std::string& schedule, const fs::path& out) {
  auto doc = ConfigDoc::load(config);
  RunConfig rc = parse_run_config(doc);
  auto sdoc = ConfigDoc::load(schedule);
  Section root(sdoc, sdoc.root(), {});
  bool warm = root.get<bool>("warm_start", true);
  std::vector<SolverSection> stages;
  for (const auto& s : root.list("stages")) stages.push_back(parse_solver(s, rc.solver));
  root.finish();
  if (stages.empty()) sdoc.fail({"stages"}, "must be nonempty");
  Problem P = rc.problem();
  std::vector<Stage> sched;
  for (const auto& s : stages) sched.push_back({P, s.config});
  std::optional<ScalarField> init;
  if (warm || rc.solver.init == InitKind::recovery) {
    RunConfig first = rc;
    first.solver = stages[0];
    init = initial_field(first, P, "");
  }
  auto rs = continuation(sched, warm, init, rc.solver.init == InitKind::uniform ? InitPreset::uniform : InitPreset::noise);
  fs::create_directories(out);
  bool ok = true;
  for (std::size_t k = 0; k < rs.size(); ++k) {
    write_run(out, "stage" + std::to_string(k), rs[k], P, sched[k].config);
    ok = ok && rs[k].converged();
  }
  write_text(out / "sweep.csv", sweep_csv(rs));
  std::cout << sweep_csv(rs);
  return ok ? kOk : kNonConvergence;
}

int cmd_theta(double v, double eps, int n, const std::string& out) {
  Potential W(n);
  auto R = solve_theta(v, eps, n, W);
  std::ostringstream row;
  row << std::setprecision(12) << "v,eps,n,theta,lambda,equipartition_gap,residual,iterations,ambiguous\n"
      << v << ',' << eps << ',' << n << ',' << R.theta << ',' << R.lambda << ',' << R.equipartition_gap << ','
      << R.residual << ',' << R.iterations << ',' << (R.ambiguous ? 1 : 0) << '\n';
  if (R.slow_regime) std::cerr << "warning: eps / v^(1/(n+1)) > 1, convergence is slow\n";
  if (R.ambiguous) std::cerr << "warning: restarts disagree, the minimizer may not be unique\n";
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(fs::path(out) / "profile.csv", R.profile_csv());
    write_text(fs::path(out) / "summary.csv", row.str());
  }
  std::cout << row.str();
  return kOk;
}

int cmd_recover(const std::string& geometry, const std::vector<double>& eps, double M, double delta,
                const fs::path& out) {
  auto doc = ConfigDoc::load(geometry);
  Section root(doc, doc.root(), {});
  Grid g = parse_grid(root.sub("grid"));
  std::vector<Shape> wire_shapes, K, E;
  if (root.has("wireframe")) {
    auto w = root.sub("wireframe");
    wire_shapes = parse_shapes(w.list("shapes"), g.dim);
    w.finish();
  }
  K = parse_shapes(root.list("K", false), g.dim);
  E = parse_shapes(root.list("E", false), g.dim);
  root.finish();
  if (K.empty() && E.empty()) doc.fail({}, "K and E are both empty");
  if (eps.empty()) throw ConfigError("--eps needs at least one value");
  if (!(delta > 0.5 && delta <= 1.0)) throw ConfigError("--delta must lie in (1/2, 1]");
  if (!(M > 0)) throw ConfigError("--M must be positive");
  WireFrame wire(g, wire_shapes);
  const Mask* wm = wire_shapes.empty() ? nullptr : &wire.mask;
  SharpInterfaceData D{K.empty() ? Mask(g) : voxelize(K, g), E.empty() ? Mask(g) : voxelize(E, g)};
  Potential W(g.dim - 1);
  auto u = build_recovery(D, eps.front(), M, delta, W, wm);
  auto rows = recovery_report(D, eps, M, delta, W, wm);
  fs::create_directories(out);
  dump_field(u, (out / "field.json").string());
  write_text(out / "report.csv", recovery_csv(rows));
  std::cout << recovery_csv(rows);
  return kOk;
}

int cmd_span_check(const std::string& field, const std::string& config, std::optional<double> level) {
  auto doc = ConfigDoc::load(config);
  RunConfig rc = parse_run_config(doc);
  ScalarField u = load_field(field);
  if (!u.grid.same_as(rc.grid)) throw ConfigError("field grid does not match the config grid");
  Problem P = rc.problem();
  std::vector<double> levels = level ? std::vector<double>{*level} : rc.solver.config.levels();
  std::cout << "level,loop,status,slices_passed,failing_slices\n";
  for (double t : levels) std::cout << span_rows(superlevel_set(u, t, P.wire_mask()), P.span, t, nullptr);
  return kOk;
}

int cmd_scenario(const std::string& name, const std::string& config, const fs::path& out) {
  std::optional<ConfigDoc> doc;
  if (!config.empty()) doc = ConfigDoc::load(config);
  Scenario s = configure_scenario(name, doc ? &*doc : nullptr);
  auto O = run_scenario(s, out);
  std::cout << O.summary.dump(2) << '\n';
  return O.converged ? kOk : kNonConvergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-field soap-film solver"};
  app.require_subcommand(1);

  std::string config, init, out, schedule, geometry, field;
  double v = 0, eps1 = 0, M = 10, delta = 1;
  int n = 1;
  std::vector<double> eps_list;
  std::optional<double> level;
  std::string scenario_name;

  auto* mn = app.add_subcommand("minimize", "minimize the constrained energy for one configuration");
  mn->add_option("--config", config, "JSON configuration")->required();
  mn->add_option("--init", init, "initial field dump");
  mn->add_option("--out", out, "output directory")->required();

  auto* sw = app.add_subcommand("sweep", "run a continuation schedule");
  sw->add_option("--config", config, "JSON configuration")->required();
  sw->add_option("--schedule", schedule, "JSON schedule")->required();
  sw->add_option("--out", out, "output directory")->required();

  auto* th = app.add_subcommand("theta", "radial isoperimetric profile");
  th->add_option("--v", v, "volume")->required();
  th->add_option("--eps", eps1, "interface width")->required();
  th->add_option("--n", n, "dimension of the interface (1 or 2)");
  th->add_option("--out", out, "output directory for profile.csv and summary.csv");

  auto* rc = app.add_subcommand("recover", "recovery field and energy report from sharp data");
  rc->add_option("--geometry", geometry, "JSON geometry with grid, K, E")->required();
  rc->add_option("--eps", eps_list, "interface widths (first one is dumped)")->required();
  rc->add_option("--M", M, "profile truncation length");
  rc->add_option("--delta", delta, "crossing value");
  rc->add_option("--out", out, "output directory")->required();

  auto* sc = app.add_subcommand("span-check", "per-loop spanning report for a field dump");
  sc->add_option("--field", field, "field dump")->required();
  sc->add_option("--config", config, "JSON configuration")->required();
  sc->add_option("--level", level, "superlevel to check (default: configured levels)");

  auto* sn = app.add_subcommand("scenario", "run a named experiment");
  sn->add_option("name", scenario_name, "scenario name")->required()->check(CLI::IsMember(scenario_names()));
  sn->add_option("--config", config, "JSON configuration (experiment and solver sections)");
  sn->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int r = app.exit(e);
    return r == 0 ? kOk : kConfig;
  }

  try {
    if (*mn) return cmd_minimize(config, init, out);
    if (*sw) return cmd_sweep(config, schedule, out);
    if (*th) return cmd_theta(v, eps1, n, out);
    if (*rc) return cmd_recover(geometry, eps_list, M, delta, out);
    if (*sc) return cmd_span_check(field, config, level);
    if (*sn) return cmd_scenario(scenario_name, config, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const InfeasibleTarget& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const RepairFailed& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const ConstantField& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const NonConvergence& e) {
    std::cerr << "non-convergence: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const DivergenceError& e) {
    std::cerr << "non-convergence: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const FieldIOError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kConfig;
  } catch (const SpanningGeometryError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNonConvergence;
  }
  return kConfig;
}
