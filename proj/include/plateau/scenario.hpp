#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "plateau/config.hpp"
#include "plateau/frames.hpp"
#include "plateau/isoperimetric.hpp"
#include "plateau/recovery.hpp"
#include "plateau/solver.hpp"
#include "plateau/topology.hpp"

namespace plateau {

namespace fs = std::filesystem;

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"triple_disk",        "two_disk",           "annulus",
                                              "iso_sweep",          "hierarchy_v_fixed",  "hierarchy_v_to_zero",
                                              "recovery_suite"};
  return names;
}

// Result of a scenario: summary.json content plus the exit status it maps to.
struct ScenarioOutcome {
  json summary = json::object();
  bool converged = true;
  bool all_pass() const {
    for (auto& [k, v] : summary["checks"].items())
      if (!v.get<bool>()) return false;
    return true;
  }
};

namespace detail {

inline void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}

inline json stage_json(const MinimizerResult& R) {
  const auto& b = R.breakdown;
  return {{"eps", b.eps},
          {"v", b.v},
          {"delta", b.delta},
          {"energy", 0.5 * b.total},
          {"dirichlet", 0.5 * b.dirichlet},
          {"potential", 0.5 * b.potential},
          {"volume", b.volume},
          {"equipartition_gap", b.equipartition_gap},
          {"lambda", R.lambda},
          {"eps_lambda", b.eps * R.lambda},
          {"iterations", R.iterations},
          {"convergence_reason", to_string(R.convergence_reason)},
          {"spanning_repairs", R.spanning_repairs},
          {"monotonicity_violations", R.monotonicity_violations},
          {"sfr_warnings", R.sfr_warnings}};
}

inline json topology_json(const TopologyReport& t) {
  return {{"connected", t.connected},
          {"touches_all", t.touches_all},
          {"junction", t.junction},
          {"components", t.components},
          {"junction_count", t.junction_count}};
}

inline bool strictly_decreasing(const std::vector<double>& x) {
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] < x[i - 1])) return false;
  return true;
}

// Recovery field of a straight band of area v from a to b: K the segment, E the band shortened by
// its half-width at both ends so it stays clear of the frame.
inline ScalarField band_init(const Problem& P, const Vec3& a, const Vec3& b, double v, double eps, double delta,
                             double M) {
  const Grid& g = P.grid();
  const double L = norm(b - a);
  const double w = 0.5 * v / L;
  Vec3 d = (1.0 / L) * (b - a);
  std::vector<Shape> band;
  if (w >= 0.5 * g.h && 2 * w < L) band.push_back(Capsule{a + w * d, b - w * d, w});
  SharpInterfaceData D{voxelize({Segment{a, b}}, g), band.empty() ? Mask(g) : voxelize(band, g)};
  return build_recovery(D, eps, M, delta, P.W, P.wire_mask());
}

// Experiment parameters and solver overrides shared by all scenarios.
struct ScenarioInput {
  const ConfigDoc* doc = nullptr;
  json experiment = json::object();
  SolverSection solver;  // only tolerances, iteration caps, seed and step settings are honoured
  bool has_solver = false;
};

inline ScenarioInput read_input(const ConfigDoc* doc) {
  ScenarioInput in;
  in.doc = doc;
  if (!doc) return in;
  Section root(*doc, doc->root(), {});
  if (root.has("experiment")) {
    (void)root.sub("experiment");
    in.experiment = doc->root()["experiment"];
    if (!in.experiment.is_object()) doc->fail({"experiment"}, "expected an object");
  }
  if (root.has("solver")) {
    SolverSection base;
    base.config.eps = 1.0;  // placeholders so validation of the overrides passes
    base.config.v = 1.0;
    in.solver = parse_solver(root.sub("solver"), base);
    in.has_solver = true;
  }
  root.finish();
  return in;
}

// Applies the run-control overrides of the scenario's solver section onto c.
inline void apply_overrides(const ScenarioInput& in, SolverConfig& c) {
  if (!in.has_solver) return;
  const auto& o = in.solver.config;
  const auto& j = in.doc->root()["solver"];
  if (j.contains("max_iters")) c.max_iters = o.max_iters;
  if (j.contains("grad_tol")) c.grad_tol = o.grad_tol;
  if (j.contains("stall_tol")) c.stall_tol = o.stall_tol;
  if (j.contains("stall_window")) c.stall_window = o.stall_window;
  if (j.contains("volume_tol")) c.volume_tol = o.volume_tol;
  if (j.contains("seed")) c.seed = o.seed;
  if (j.contains("step_policy")) c.backtracking = o.backtracking;
  if (j.contains("step_size")) c.step_size = o.step_size;
  if (j.contains("k_span")) c.k_span = o.k_span;
  if (j.contains("pin_release")) c.pin_release = o.pin_release;
  if (j.contains("min_iters")) c.min_iters = o.min_iters;
}

// Typed experiment parameter with a default; unknown keys are rejected by ExperimentKeys::finish.
class ExperimentKeys {
 public:
  explicit ExperimentKeys(const ScenarioInput& in) : in_(in) {}
  template <class T>
  T get(const std::string& k, const T& fallback) {
    used_.insert(k);
    if (!in_.experiment.contains(k)) return fallback;
    try {
      return in_.experiment[k].template get<T>();
    } catch (const json::exception&) {
      in_.doc->fail({"experiment", k}, "wrong type");
    }
  }
  void require(bool ok, const std::string& k, const std::string& msg) {
    if (!ok) {
      if (in_.doc) in_.doc->fail({"experiment", k}, msg);
      throw ConfigError("experiment." + k + ": " + msg);
    }
  }
  void finish() {
    for (auto it = in_.experiment.begin(); it != in_.experiment.end(); ++it)
      if (!used_.count(it.key())) in_.doc->fail({"experiment", it.key()}, "unknown key");
  }

 private:
  const ScenarioInput& in_;
  std::set<std::string> used_;
};

}  // namespace detail

// A scenario in two phases: configure (validates everything, no side effects) and run.
struct Scenario {
  std::string name;
  std::function<ScenarioOutcome(const fs::path& out)> run;
};

// ---------------------------------------------------------------------------------------------

inline Scenario make_triple_disk(const detail::ScenarioInput& in) {
  detail::ExperimentKeys e(in);
  TripleDisk T;
  T.n = e.get<int>("n", 256);
  T.R = e.get<double>("R", 0.5);
  T.rho = e.get<double>("rho", 0.1);
  const double delta = e.get<double>("delta", 0.9);
  const auto stages = e.get<std::vector<double>>("eps_over_h", {16.0, 8.0, 4.0});
  const double vf = e.get<double>("v_over_eps", 4.0);
  const double M = e.get<double>("recovery_M", 4.0);
  e.require(T.n >= 32, "n", "must be at least 32");
  e.require(T.rho > 0 && T.rho < 0.5 * T.R, "rho", "must lie in (0, R/2)");
  e.require(delta > 0.5 && delta <= 1.0, "delta", "must lie in (1/2, 1]");
  e.require(!stages.empty(), "eps_over_h", "must be nonempty");
  for (double m : stages) e.require(m >= 2.0, "eps_over_h", "entries must be at least 2");
  e.require(vf > 0, "v_over_eps", "must be positive");
  e.finish();
  SolverConfig base;
  base.delta = delta;
  base.check_levels = {delta};  // the binding level: superlevel sets shrink as t grows
  base.grad_tol = 1e-5;
  detail::apply_overrides(in, base);
  return {"triple_disk", [=](const fs::path& out) {
            ScenarioOutcome O;
            Problem P = T.problem();
            const double h = P.grid().h;
            std::vector<Stage> schedule;
            for (double m : stages) {
              SolverConfig c = base;
              c.eps = m * h;
              c.v = vf * c.eps;
              schedule.push_back({P, c});
            }
            const auto& c0 = schedule[0].config;
            ScalarField init = build_recovery(T.steiner_data(P.grid(), c0.v), c0.eps, M, delta, P.W, P.wire_mask());
            auto rs = continuation(schedule, true, init);
            const double target = 2 * P.W.Phi(delta) * T.steiner_length();
            json st = json::array();
            std::vector<double> epslam;
            TopologyReport topo;
            for (std::size_t k = 0; k < rs.size(); ++k) {
              topo = film_topology(superlevel_set(rs[k].field, delta - 0.1, P.wire_mask()), P.wire, T.collar + h);
              json s = detail::stage_json(rs[k]);
              s["topology"] = detail::topology_json(topo);
              st.push_back(s);
              epslam.push_back(std::abs(rs[k].breakdown.eps * rs[k].lambda));
              O.converged = O.converged && rs[k].converged();
              dump_field(rs[k].field, (out / "fields" / ("stage" + std::to_string(k) + ".json")).string());
            }
            const double E = 0.5 * rs.back().breakdown.total;
            O.summary["target_energy"] = target;
            O.summary["final_energy"] = E;
            O.summary["relative_gap"] = E / target - 1.0;
            O.summary["stages"] = st;
            O.summary["triple_junction_found"] = topo.junction;
            O.summary["checks"] = {
                {"energy_within_10pct", std::abs(E / target - 1.0) <= 0.10},
                {"triple_junction_found", topo.junction},
                {"connected", topo.connected},
                {"touches_all_disks", topo.touches_all},
                {"equipartition_halved", std::abs(rs.back().breakdown.equipartition_gap) <=
                                             0.5 * std::abs(rs.front().breakdown.equipartition_gap)},
                {"abs_eps_lambda_decreasing", detail::strictly_decreasing(epslam)}};
            detail::write_text(out / "sweep.csv", sweep_csv(rs));
            return O;
          }};
}

inline Scenario make_two_disk(const detail::ScenarioInput& in) {
  detail::ExperimentKeys e(in);
  TwoDisk T;
  T.h = e.get<double>("h", 0.01);
  T.a = e.get<double>("a", 0.9);
  const double eps = e.get<double>("eps", 0.08);
  const double delta = e.get<double>("delta", 0.99);
  const double level = e.get<double>("check_level", 0.98);
  const double v_sfr = e.get<double>("v_sfr_over_eps", 4.0) * eps;
  const double v_small = e.get<double>("v_small_over_eps", 0.25) * eps;
  e.require(T.h > 0 && T.h <= 0.05, "h", "must lie in (0, 0.05]");
  e.require(T.a > 0.3 && T.a < 1.5, "a", "must lie in (0.3, 1.5)");
  e.require(eps >= 2 * T.h, "eps", "must be at least 2h");
  e.require(delta > 0.5 && delta <= 1.0, "delta", "must lie in (1/2, 1]");
  e.require(level > 0.5 && level <= delta, "check_level", "must lie in (1/2, delta]");
  e.require(v_small > 0 && v_sfr > v_small, "v_sfr_over_eps", "need v_sfr > v_small > 0");
  e.finish();
  SolverConfig base;
  base.eps = eps;
  base.delta = delta;
  base.check_levels = {level};
  base.grad_tol = 1e-5;
  detail::apply_overrides(in, base);
  return {"two_disk", [=](const fs::path& out) {
            ScenarioOutcome O;
            Problem P = T.problem();
            const double h = P.grid().h;
            const Vec3 a{-T.a + T.rho, 0, 0}, b{T.a - T.rho, 0, 0};
            std::vector<double> vols{v_sfr, v_small};
            std::vector<MinimizerResult> rs(2);
            parallel_for(2, [&](std::size_t k) {
              SolverConfig c = base;
              c.v = vols[k];
              rs[k] = minimize(P, c, detail::band_init(P, a, b, c.v, eps, delta, 4.0));
            });
            const double film = 2 * P.W.Phi(delta) * T.gap();
            const double E_sfr = 0.5 * rs[0].breakdown.total, E_small = 0.5 * rs[1].breakdown.total;
            auto topo = film_topology(superlevel_set(rs[0].field, delta - 0.1, P.wire_mask()), P.wire, T.collar + h);
            json st = json::array();
            for (std::size_t k = 0; k < 2; ++k) {
              st.push_back(detail::stage_json(rs[k]));
              O.converged = O.converged && rs[k].converged();
              dump_field(rs[k].field, (out / "fields" / (k == 0 ? "sfr.json" : "small_v.json")).string());
            }
            st[0]["topology"] = detail::topology_json(topo);
            O.summary["film_energy"] = film;
            O.summary["runs"] = st;
            O.summary["energy_ratio"] = E_small / E_sfr;
            O.summary["checks"] = {{"band_within_5pct", std::abs(E_sfr / film - 1.0) <= 0.05},
                                   {"band_joins_disks", topo.connected && topo.touches_all},
                                   {"small_v_ratio_at_least_2", E_small >= 2.0 * E_sfr}};
            detail::write_text(out / "sweep.csv", sweep_csv(rs));
            return O;
          }};
}

inline Scenario make_annulus(const detail::ScenarioInput& in) {
  detail::ExperimentKeys e(in);
  Annulus A;
  A.n = e.get<int>("n", 192);
  A.a = e.get<double>("a", 0.2);
  A.b = e.get<double>("b", 0.8);
  const double eh = e.get<double>("eps_over_h", 4.0);
  const double vf = e.get<double>("v_over_eps", 4.0);
  const double delta = e.get<double>("delta", 0.9);
  e.require(A.n >= 32, "n", "must be at least 32");
  e.require(A.a > 0 && A.b > A.a + 0.2, "b", "need 0 < a and b > a + 0.2");
  e.require(eh >= 2, "eps_over_h", "must be at least 2");
  e.require(vf > 0, "v_over_eps", "must be positive");
  e.require(delta > 0.5 && delta <= 1.0, "delta", "must lie in (1/2, 1]");
  e.finish();
  SolverConfig base;
  base.delta = delta;
  base.check_levels = {delta};
  base.grad_tol = 1e-5;
  detail::apply_overrides(in, base);
  return {"annulus", [=](const fs::path& out) {
            ScenarioOutcome O;
            Problem P = A.problem();
            const double h = P.grid().h;
            SolverConfig c = base;
            c.eps = eh * h;
            c.v = vf * c.eps;
            auto R = minimize(P, c, detail::band_init(P, {A.a, 0, 0}, {A.b, 0, 0}, c.v, c.eps, delta, 4.0));
            O.converged = R.converged();
            const double film = 2 * P.W.Phi(delta) * (A.b - A.a);
            const double E = 0.5 * R.breakdown.total;
            auto topo = film_topology(superlevel_set(R.field, delta - 0.1, P.wire_mask()), P.wire, 0.05 + h);
            json s = detail::stage_json(R);
            s["topology"] = detail::topology_json(topo);
            O.summary["film_energy"] = film;
            O.summary["runs"] = json::array({s});
            O.summary["checks"] = {{"energy_within_10pct", std::abs(E / film - 1.0) <= 0.10},
                                   {"film_spans_the_gap", topo.connected && topo.touches_all}};
            dump_field(R.field, (out / "fields" / "final.json").string());
            detail::write_text(out / "sweep.csv", sweep_csv({R}));
            return O;
          }};
}

inline Scenario make_iso_sweep(const detail::ScenarioInput& in) {
  detail::ExperimentKeys e(in);
  const auto vs = e.get<std::vector<double>>("v", {0.5, 1.0, 2.0, 4.0});
  const auto es = e.get<std::vector<double>>("eps", {0.02, 0.04});
  const int n = e.get<int>("n", 1);
  const double r = e.get<double>("scaling_r", 2.0);
  e.require(!vs.empty(), "v", "must be nonempty");
  e.require(!es.empty(), "eps", "must be nonempty");
  for (double v : vs) e.require(v > 0, "v", "entries must be positive");
  for (double x : es) e.require(x > 0, "eps", "entries must be positive");
  e.require(n == 1 || n == 2, "n", "must be 1 or 2");
  e.require(r > 1, "scaling_r", "must exceed 1");
  e.finish();
  return {"iso_sweep", [=](const fs::path& out) {
            ScenarioOutcome O;
            Potential W(n);
            auto T = theta_profile_table(vs, es, n, W);
            // scaling rows: Theta(v, eps) against r^n Theta(v / r^(n+1), eps / r)
            std::vector<std::pair<double, double>> pairs;
            for (double x : es)
              for (double v : vs) pairs.push_back({v, x});
            std::vector<RadialMinimizer> scaled(pairs.size());
            parallel_for(pairs.size(), [&](std::size_t k) {
              scaled[k] = solve_theta(pairs[k].first / std::pow(r, n + 1), pairs[k].second / r, n, W);
            });
            json rows = json::array();
            double worst = 0.0;
            for (std::size_t k = 0; k < pairs.size(); ++k) {
              const auto& row = T.rows[k];
              double rhs = std::pow(r, n) * scaled[k].theta;
              double rel = std::abs(row.theta / rhs - 1.0);
              worst = std::max(worst, rel);
              rows.push_back({{"v", row.v}, {"eps", row.eps}, {"theta", row.theta}, {"scaled_theta", rhs},
                              {"relative_violation", rel}, {"lambda_sqrt_v", row.lambda * std::pow(row.v, 1.0 / (n + 1))}});
            }
            fs::create_directories(out / "fields");
            for (std::size_t k = 0; k < pairs.size(); ++k) {
              auto R = solve_theta(pairs[k].first, pairs[k].second, n, W);
              std::ostringstream nm;
              nm << "profile_v" << pairs[k].first << "_eps" << pairs[k].second << ".csv";
              detail::write_text(out / "fields" / nm.str(), R.profile_csv());
            }
            O.summary["scaling"] = rows;
            O.summary["max_scaling_violation"] = worst;
            O.summary["checks"] = {{"scaling_within_1pct", worst <= 0.01}, {"theta_over_v_decreasing", T.decreasing}};
            detail::write_text(out / "sweep.csv", T.csv());
            return O;
          }};
}

// eps schedules on the coarse two-disk frame, warm-started.
inline Scenario make_hierarchy(const detail::ScenarioInput& in, bool v_to_zero) {
  detail::ExperimentKeys e(in);
  TwoDisk T;
  T.h = e.get<double>("h", 0.02);
  const auto eps = e.get<std::vector<double>>("eps", v_to_zero ? std::vector<double>{0.16, 0.08, 0.04}
                                                                : std::vector<double>{0.32, 0.16, 0.08, 0.04});
  const double delta = e.get<double>("delta", v_to_zero ? 0.99 : 1.0);
  const double level = e.get<double>("check_level", v_to_zero ? 0.98 : 0.75);
  const double v_fixed = v_to_zero ? 0.0 : e.get<double>("v", 0.32);
  const double c = v_to_zero ? e.get<double>("v_coefficient", 0.8) : 0.0;
  const double power = v_to_zero ? e.get<double>("v_power", 0.5) : 0.0;
  e.require(T.h > 0 && T.h <= 0.05, "h", "must lie in (0, 0.05]");
  e.require(eps.size() >= 2, "eps", "needs at least two entries");
  for (double x : eps) e.require(x >= 2 * T.h, "eps", "entries must be at least 2h");
  e.require(delta > 0.5 && delta <= 1.0, "delta", "must lie in (1/2, 1]");
  e.require(level > 0.5 && level <= delta, "check_level", "must lie in (1/2, delta]");
  if (v_to_zero) {
    e.require(c > 0, "v_coefficient", "must be positive");
    e.require(power > 0 && power < 1, "v_power", "must lie in (0, 1) so that eps / v -> 0");
  } else {
    e.require(v_fixed > 0, "v", "must be positive");
  }
  e.finish();
  SolverConfig base;
  base.delta = delta;
  base.check_levels = {level};
  base.grad_tol = 1e-5;
  detail::apply_overrides(in, base);
  const std::string name = v_to_zero ? "hierarchy_v_to_zero" : "hierarchy_v_fixed";
  return {name, [=](const fs::path& out) {
            ScenarioOutcome O;
            Problem P = T.problem();
            std::vector<Stage> schedule;
            for (double x : eps) {
              SolverConfig s = base;
              s.eps = x;
              s.v = v_to_zero ? c * std::pow(x, power) : v_fixed;
              schedule.push_back({P, s});
            }
            const auto& s0 = schedule[0].config;
            const Vec3 a{-T.a + T.rho, 0, 0}, b{T.a - T.rho, 0, 0};
            auto rs = continuation(schedule, true, detail::band_init(P, a, b, s0.v, s0.eps, delta, 2.0));
            json st = json::array();
            std::vector<double> E, epslam;
            for (std::size_t k = 0; k < rs.size(); ++k) {
              st.push_back(detail::stage_json(rs[k]));
              E.push_back(0.5 * rs[k].breakdown.total);
              epslam.push_back(std::abs(rs[k].breakdown.eps * rs[k].lambda));
              O.converged = O.converged && rs[k].converged();
              dump_field(rs[k].field, (out / "fields" / ("stage" + std::to_string(k) + ".json")).string());
            }
            O.summary["stages"] = st;
            O.summary["film_energy"] = 2 * P.W.Phi(delta) * T.gap();
            const bool eq = std::abs(rs.back().breakdown.equipartition_gap) <=
                            0.5 * std::abs(rs.front().breakdown.equipartition_gap);
            if (v_to_zero) {
              O.summary["checks"] = {{"abs_eps_lambda_decreasing", detail::strictly_decreasing(epslam)},
                                     {"equipartition_halved", eq}};
            } else {
              bool shrink = E.size() >= 3;
              for (std::size_t k = 2; k < E.size(); ++k)
                shrink = shrink && std::abs(E[k - 1] - E[k - 2]) >= 1.5 * std::abs(E[k] - E[k - 1]);
              O.summary["checks"] = {{"energy_decreasing", detail::strictly_decreasing(E)},
                                     {"differences_shrink_1_5x", shrink},
                                     {"equipartition_halved", eq}};
            }
            detail::write_text(out / "sweep.csv", sweep_csv(rs));
            return O;
          }};
}

inline Scenario make_recovery_suite(const detail::ScenarioInput& in) {
  detail::ExperimentKeys e(in);
  const int N = e.get<int>("N", 256);
  const double M = e.get<double>("M", 10.0);
  const int disk_n = e.get<int>("disk_n", 512);
  e.require(N >= 64, "N", "must be at least 64");
  e.require(M > 1, "M", "must exceed 1");
  e.require(disk_n >= 64, "disk_n", "must be at least 64");
  e.finish();
  return {"recovery_suite", [=](const fs::path& out) {
            ScenarioOutcome O;
            const Potential W(1);
            const double h = 1.0 / N;
            auto s = segment_setup(N, 1.0);
            auto seg = recovery_report(s.data, {16 * h, 8 * h, 4 * h}, M, 1.0, W, &s.wire.mask);
            auto half = recovery_report(s.data, {8 * h}, M, 0.5, W, &s.wire.mask);
            auto g = Grid::make2d(disk_n, disk_n, 1.0 / disk_n);
            const double r = 0.4;
            auto d = disk_setup(g, {0.5, 0.5, 0}, r);
            const double dh = 1.0 / disk_n;
            auto disk = recovery_report(d, {8 * dh, 4 * dh, 2 * dh}, 4.0, 1.0, W);
            dump_field(build_recovery(s.data, 8 * h, M, 1.0, W, &s.wire.mask),
                       (out / "fields" / "segment.json").string());
            std::vector<double> disk_gap;
            for (const auto& row : disk) disk_gap.push_back(std::abs(row.energy / (2 * std::numbers::pi * r) - 1.0));
            auto rows = [](const std::vector<RecoveryRow>& v) {
              json a = json::array();
              for (const auto& x : v)
                a.push_back({{"eps", x.eps}, {"energy", x.energy}, {"target", x.target}, {"gap", x.gap}});
              return a;
            };
            O.summary["segment"] = rows(seg);
            O.summary["segment_half_level"] = rows(half);
            O.summary["disk"] = rows(disk);
            O.summary["disk_gap_to_circle"] = disk_gap;
            O.summary["checks"] = {{"segment_within_5pct", std::abs(seg[1].energy / 2.0 - 1.0) <= 0.05},
                                   {"half_level_within_5pct", std::abs(half[0].energy - 1.0) <= 0.05},
                                   {"half_level_below_full", half[0].energy < seg[1].energy},
                                   {"disk_gap_decreasing", detail::strictly_decreasing(disk_gap)}};
            std::string csv = "case,eps,energy,target,gap,target_faces\n";
            auto add = [&](const std::string& tag, const std::vector<RecoveryRow>& v) {
              auto body = recovery_csv(v);
              std::istringstream ss(body);
              std::string line;
              std::getline(ss, line);
              while (std::getline(ss, line)) csv += tag + "," + line + "\n";
            };
            add("segment", seg);
            add("segment_half", half);
            add("disk", disk);
            detail::write_text(out / "sweep.csv", csv);
            return O;
          }};
}

// Validates the configuration and returns the runnable scenario; throws ConfigError.
inline Scenario configure_scenario(const std::string& name, const ConfigDoc* doc) {
  auto in = detail::read_input(doc);
  if (name == "triple_disk") return make_triple_disk(in);
  if (name == "two_disk") return make_two_disk(in);
  if (name == "annulus") return make_annulus(in);
  if (name == "iso_sweep") return make_iso_sweep(in);
  if (name == "hierarchy_v_fixed") return make_hierarchy(in, false);
  if (name == "hierarchy_v_to_zero") return make_hierarchy(in, true);
  if (name == "recovery_suite") return make_recovery_suite(in);
  throw ConfigError("unknown scenario '" + name + "'");
}

// Runs a configured scenario into out (created), writing summary.json last.
inline ScenarioOutcome run_scenario(const Scenario& s, const fs::path& out) {
  fs::create_directories(out / "fields");
  ScenarioOutcome O = s.run(out);
  O.summary["scenario"] = s.name;
  O.summary["converged"] = O.converged;
  O.summary["all_checks_pass"] = O.all_pass();
  detail::write_text(out / "summary.json", O.summary.dump(2) + "\n");
  return O;
}

}  // namespace plateau
