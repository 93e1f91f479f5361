#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "plateau/energy.hpp"
#include "plateau/geometry.hpp"
#include "plateau/grid.hpp"
#include "plateau/potential.hpp"
#include "plateau/spanning.hpp"

namespace plateau {

struct InfeasibleTarget : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConstantField : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------------------------
// Volume restoration by the clamp-shift family u_s = clamp(u + s, 0, 1).

struct VolumeFixResult {
  double shift = 0.0;
  double volume = 0.0;
};

// Solves V(clamp(u + s)) = target for s in [-1, 1] on voxels that are in Omega and not pinned;
// pinned voxels keep their values. Safeguarded Newton on the monotone volume function.
inline VolumeFixResult volume_fix_in_place(ScalarField& u, double target, const Potential& W,
                                           const Mask* wire = nullptr,
                                           const std::vector<char>* pins = nullptr,
                                           double rel_tol = 1e-12) {
  const Grid& g = u.grid;
  const double hd = g.cell_measure();
  std::vector<std::size_t> free;
  double fixed_vol = 0.0;
  bool all0 = true, all1 = true;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!detail::in_omega(wire, i)) continue;
    all0 = all0 && u[i] == 0.0;
    all1 = all1 && u[i] == 1.0;
    if (pins && (*pins)[i]) fixed_vol += W.V(u[i]).value * hd;
    else free.push_back(i);
  }
  if (all0 || all1) throw ConstantField("volume_fix: field is identically 0 or 1 on the domain");
  if (!(target >= 0.0)) throw InfeasibleTarget("volume target must be non-negative");
  auto eval = [&](double s, double* deriv) {
    double v = fixed_vol, d = 0.0;
    for (auto i : free) {
      double x = u[i] + s;
      if (x <= 0.0) continue;
      if (x >= 1.0) {
        v += hd;
        continue;
      }
      auto vv = W.V(x);
      v += vv.value * hd;
      d += vv.deriv * hd;
    }
    if (deriv) *deriv = d;
    return v;
  };
  const double vmax = eval(1.0, nullptr);
  const double vmin = eval(-1.0, nullptr);
  if (target > vmax * (1.0 + 1e-14) || target < vmin * (1.0 - 1e-14))
    throw InfeasibleTarget("volume target " + std::to_string(target) + " outside reachable range [" +
                           std::to_string(vmin) + ", " + std::to_string(vmax) + "]");
  const double tol = rel_tol * std::max(target, hd);
  double lo = -1.0, hi = 1.0, s = 0.0;
  double d;
  double f = eval(s, &d) - target;
  for (int it = 0; it < 200 && std::abs(f) > tol; ++it) {
    (f > 0 ? hi : lo) = s;
    double next = d > 0 ? s - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    s = next;
    f = eval(s, &d) - target;
    if (hi - lo < 1e-15) break;
  }
  if (s != 0.0)
    for (auto i : free) u[i] = std::clamp(u[i] + s, 0.0, 1.0);
  return {s, f + target};
}

inline ScalarField volume_fix(const ScalarField& u, double target, const Potential& W,
                              const Mask* wire = nullptr) {
  ScalarField w = u;
  volume_fix_in_place(w, target, W, wire);
  return w;
}

// ---------------------------------------------------------------------------------------------

struct SolverConfig {
  double eps = 0.0;
  double v = 0.0;
  double delta = 1.0;
  std::optional<double> t_check;       // default (1/2 + delta)/2
  std::vector<double> check_levels;    // overrides t_check when nonempty
  int max_iters = 20000;
  bool backtracking = true;            // false: fixed step
  std::optional<double> step_size;     // L2 gradient step; default from the stability bound
  double grad_tol = 1e-6;              // RMS of eps * projected gradient
  double stall_tol = 1e-8;             // relative energy change over stall_window iterations
  int stall_window = 200;
  double volume_tol = 1e-6;
  unsigned seed = 0;
  double sfr_tau0 = 0.5;
  double sfr_tau1 = 1.0;
  int k_span = 5;
  int pin_release = 250;               // first pin release; later ones at doubling intervals (0 keeps pins)
  int burn_in = 50;
  int min_iters = 0;

  double level() const { return t_check.value_or(0.5 * (0.5 + delta)); }
  std::vector<double> levels() const {
    return check_levels.empty() ? std::vector<double>{level()} : check_levels;
  }
  void validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("solver.eps must be positive");
    if (!(v > 0.0)) throw std::invalid_argument("solver.v must be positive");
    if (!(delta > 0.5 && delta <= 1.0)) throw std::invalid_argument("solver.delta must lie in (1/2, 1]");
    for (double t : levels())
      if (!(t > 0.5 && t <= delta)) throw std::invalid_argument("check levels must lie in (1/2, delta]");
    if (max_iters < 1) throw std::invalid_argument("solver.max_iters must be positive");
    if (!(volume_tol > 0.0)) throw std::invalid_argument("solver.volume_tol must be positive");
    if (k_span < 1) throw std::invalid_argument("solver.k_span must be positive");
    if (pin_release < 0) throw std::invalid_argument("solver.pin_release must be non-negative");
  }
};

// A frame, its spanning geometry and the potential: everything that stays fixed along a schedule.
struct Problem {
  WireFrame wire;
  SpanningGeometry span;
  Potential W{1};

  const Grid& grid() const { return wire.grid(); }
  const Mask* wire_mask() const { return &wire.mask; }
};

inline Problem make_problem(const Grid& g, std::vector<Shape> shapes, const SpanningClass& sc,
                            Potential W) {
  Problem P;
  P.wire = WireFrame(g, std::move(shapes));
  P.span = realize(sc, g, &P.wire.mask);
  if (W.n() != g.dim - 1) throw std::invalid_argument("potential dimension n must equal grid dim - 1");
  P.W = std::move(W);
  return P;
}

// Membership in the soap-film regime; returns the violated conditions (empty when inside).
inline std::vector<std::string> sfr_violations(const SolverConfig& c, double diam, int n) {
  std::vector<std::string> out;
  const double dn = std::pow(diam, n), dn1 = std::pow(diam, n + 1);
  if (!(c.eps * dn <= c.sfr_tau1 * c.v)) out.push_back("eps * diam^n > tau1 * v");
  if (!(c.v / dn1 <= c.sfr_tau0)) out.push_back("v / diam^(n+1) > tau0");
  if (!(std::min(1.0 - c.delta, c.v / dn1) <= c.sfr_tau1)) out.push_back("min(1 - delta, v / diam^(n+1)) > tau1");
  return out;
}

enum class Convergence { grad_tol, energy_stall, max_iters };

inline const char* to_string(Convergence c) {
  switch (c) {
    case Convergence::grad_tol: return "grad_tol";
    case Convergence::energy_stall: return "energy_stall";
    case Convergence::max_iters: return "max_iters";
  }
  return "?";
}

struct MinimizerResult {
  ScalarField field;
  EnergyBreakdown breakdown;
  double lambda = 0.0;
  int iterations = 0;
  Convergence convergence_reason = Convergence::max_iters;
  int spanning_repairs = 0;  // loop repairs over the run
  int monotonicity_violations = 0;
  double grad_norm = 0.0;
  std::vector<std::string> sfr_warnings;
  std::vector<std::string> history;  // CSV rows, header in history_header()
  std::vector<char> pins;

  bool converged() const { return convergence_reason != Convergence::max_iters; }
  static std::string history_header() { return "iter,energy,volume,lambda_hat,grad_norm,step,repairs"; }
};

enum class InitPreset { uniform, noise };

// "uniform": u = 0.05 then volume restoration; "noise": seeded uniform noise in [0, 0.1].
inline ScalarField init_field(const Grid& g, InitPreset p, unsigned seed, const Mask* wire) {
  ScalarField u(g, 0.05);
  if (p == InitPreset::noise) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 0.1);
    for (auto& x : u.values) x = U(rng);
  }
  if (wire)
    for (std::size_t i = 0; i < g.size(); ++i)
      if ((*wire)[i]) u[i] = 0.0;
  return u;
}

namespace detail {

inline std::string fmt_row(int it, double e, double vol, double lam, double gn, double tau, int rep) {
  std::ostringstream s;
  s << std::setprecision(12) << it << ',' << e << ',' << vol << ',' << lam << ',' << gn << ',' << tau << ','
    << rep;
  return s.str();
}

}  // namespace detail

// Default L2 step: 1.8 / L with L the Lipschitz bound of the L2 gradient of AC.
inline double default_step(const Grid& g, double eps, const Potential& W) {
  const double L = 8.0 * g.dim * eps / (g.h * g.h) + W.max_W2() / eps;
  return 1.8 / L;
}

// Projected gradient descent for AC under the volume constraint and the spanning constraint.
inline MinimizerResult minimize(const Problem& P, const SolverConfig& cfg, const ScalarField& init) {
  cfg.validate();
  const Grid& g = P.grid();
  if (!init.grid.same_as(g)) throw std::invalid_argument("initial field grid does not match the problem grid");
  const Mask* wire = P.wire_mask();
  const Potential& W = P.W;
  const double hd = g.cell_measure();
  const auto levels = cfg.levels();
  const bool spanning = !P.span.tubes.empty();

  MinimizerResult R;
  R.sfr_warnings = sfr_violations(cfg, P.wire.diameter(), g.dim - 1);
  R.pins.assign(g.size(), 0);
  ScalarField u = init;
  clamp_unit(u);
  for (std::size_t i = 0; i < g.size(); ++i)
    if ((*wire)[i]) u[i] = 0.0;

  auto project = [&](ScalarField& f) {
    if (!spanning) return;
    ProjectionReport rep;
    f = spanning_projection(f, P.span, cfg.delta, levels, wire, &rep, &R.pins);
    R.spanning_repairs += rep.repaired_loops;
  };
  auto restore = [&](ScalarField& f) { volume_fix_in_place(f, cfg.v, W, wire, &R.pins); };

  // feasibility of the initial field
  project(u);
  restore(u);
  project(u);
  restore(u);

  const double tau_max = cfg.step_size.value_or(default_step(g, cfg.eps, W));
  double tau = tau_max;
  double E = ac_energy(u, cfg.eps, W, wire).total;
  const double E0 = E;
  double lambda = 0.0, gn = 0.0;
  std::vector<double> dir(g.size(), 0.0);
  std::vector<char> use(g.size(), 0);
  std::vector<double> energy_trace;
  double last_projected = E;
  ScalarField trial(g);
  R.history.push_back(detail::fmt_row(0, 0.5 * E, volume(u, W, wire), 0.0, 0.0, tau, R.spanning_repairs));

  int next_release = cfg.pin_release;
  int it = 0;
  for (; it < cfg.max_iters;) {
    ++it;
    auto gac = ac_gradient(u, cfg.eps, W, wire);
    auto gv = volume_gradient(u, W, wire);
    for (std::size_t i = 0; i < g.size(); ++i) use[i] = detail::in_omega(wire, i) && !R.pins[i];
    double den = 0.0, num = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (use[i]) {
        num += gac[i] * gv[i];
        den += gv[i] * gv[i];
      }
    lambda = den > 0 ? num / den : 0.0;
    // L2 gradient of the Lagrangian, projected onto the feasible box
    double gsum = 0.0;
    std::size_t nfree = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      dir[i] = 0.0;
      if (!detail::in_omega(wire, i)) continue;
      ++nfree;
      double d = (gac[i] - lambda * gv[i]) / hd;
      const double lo = R.pins[i] ? cfg.delta : 0.0;
      if (u[i] <= lo && d > 0) d = 0.0;
      if (u[i] >= 1.0 && d < 0) d = 0.0;
      dir[i] = d;
      gsum += d * d;
    }
    gn = cfg.eps * std::sqrt(gsum / static_cast<double>(std::max<std::size_t>(nfree, 1)));

    // step with backtracking on the restored energy
    double Enew = E;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        double x = std::clamp(u[i] - tau * dir[i], 0.0, 1.0);
        if (R.pins[i]) x = std::max(x, cfg.delta);
        trial[i] = x;
      }
      restore(trial);
      Enew = ac_energy(trial, cfg.eps, W, wire).total;
      if (!cfg.backtracking || Enew <= E) {
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) ++R.monotonicity_violations;
    std::swap(u.values, trial.values);
    double Eprev = E;
    E = Enew;
    if (cfg.backtracking) tau = std::min(tau_max, tau * 1.25);

    bool repaired = false;
    // pins are released periodically; the next projection re-pins failing loops at the current
    // maximum of their tube, so stale repairs do not outlive the film that made them necessary
    if (spanning && cfg.pin_release > 0 && it == next_release) {
      std::fill(R.pins.begin(), R.pins.end(), 0);
      next_release *= 2;
    }
    if (spanning && it % cfg.k_span == 0) {
      int before = R.spanning_repairs;
      project(u);
      if (R.spanning_repairs != before) {
        restore(u);
        repaired = true;
        E = ac_energy(u, cfg.eps, W, wire).total;
      }
      // post-projection energies must not increase after burn-in, except on repair rounds
      if (it > cfg.burn_in && !repaired && E > last_projected + 1e-6 * std::abs(last_projected))
        ++R.monotonicity_violations;
      last_projected = E;
    }
    if (it > cfg.burn_in && E > 10.0 * E0 && E0 > 0)
      throw DivergenceError("energy exceeded 10x its initial value after burn-in");
    (void)Eprev;
    energy_trace.push_back(E);
    if (it % 50 == 0 || it == 1)
      R.history.push_back(detail::fmt_row(it, 0.5 * E, volume(u, W, wire), lambda, gn, tau, R.spanning_repairs));

    if (it < cfg.min_iters) continue;
    if (gn <= cfg.grad_tol) {
      R.convergence_reason = Convergence::grad_tol;
      break;
    }
    const int w = cfg.stall_window;
    if (static_cast<int>(energy_trace.size()) > w && !repaired) {
      double old = energy_trace[energy_trace.size() - 1 - w];
      if (std::abs(old - E) <= cfg.stall_tol * std::abs(E)) {
        R.convergence_reason = Convergence::energy_stall;
        break;
      }
    }
  }
  if (it >= cfg.max_iters && R.convergence_reason == Convergence::max_iters) R.convergence_reason = Convergence::max_iters;
  // final feasibility
  if (spanning) {
    project(u);
    restore(u);
  }
  R.field = u;
  R.iterations = it;
  R.lambda = lambda;
  R.grad_norm = gn;
  R.breakdown = ac_energy(u, cfg.eps, W, wire);
  R.breakdown.v = cfg.v;
  R.breakdown.delta = cfg.delta;
  R.breakdown.lambda_hat = lambda;
  R.history.push_back(detail::fmt_row(it, 0.5 * R.breakdown.total, R.breakdown.volume, lambda, gn, tau, R.spanning_repairs));
  return R;
}

inline MinimizerResult minimize(const Problem& P, const SolverConfig& cfg, InitPreset preset) {
  return minimize(P, cfg, init_field(P.grid(), preset, cfg.seed, P.wire_mask()));
}

// Cap on worker threads: PLATEAU_THREADS when set, else the hardware concurrency.
inline unsigned thread_cap() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* s = std::getenv("PLATEAU_THREADS")) {
    char* end = nullptr;
    long n = std::strtol(s, &end, 10);
    if (end != s && n >= 1) return static_cast<unsigned>(n);
  }
  return hw;
}

// Runs f(0..n-1) on at most thread_cap() threads; exceptions are rethrown in index order.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  unsigned T = std::min<std::size_t>(thread_cap(), n);
  if (T <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errs(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < T; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          f(i);
        } catch (...) {
          errs[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

struct Stage {
  Problem problem;
  SolverConfig config;
};

// Runs the schedule in order. With warm_start each stage starts from the previous result,
// resampled onto its grid; otherwise every stage starts from `init` resampled (or the preset)
// and the stages run concurrently.
inline std::vector<MinimizerResult> continuation(const std::vector<Stage>& schedule, bool warm_start,
                                                 const std::optional<ScalarField>& init,
                                                 InitPreset preset = InitPreset::noise) {
  if (schedule.empty()) throw std::invalid_argument("continuation: empty schedule");
  for (const auto& s : schedule)
    if (s.problem.grid().dim != schedule[0].problem.grid().dim)
      throw std::invalid_argument("continuation: all grids must share one dimension");
  auto start = [&](const Stage& s) {
    if (!init) return init_field(s.problem.grid(), preset, s.config.seed, s.problem.wire_mask());
    ScalarField u = resample(*init, s.problem.grid());
    for (std::size_t i = 0; i < u.size(); ++i)
      if (s.problem.wire.mask[i]) u[i] = 0.0;
    return u;
  };
  std::vector<MinimizerResult> out(schedule.size());
  if (warm_start) {
    for (std::size_t k = 0; k < schedule.size(); ++k) {
      const auto& s = schedule[k];
      ScalarField u = k == 0 ? start(s) : resample(out[k - 1].field, s.problem.grid());
      for (std::size_t i = 0; i < u.size(); ++i)
        if (s.problem.wire.mask[i]) u[i] = 0.0;
      out[k] = minimize(s.problem, s.config, u);
    }
  } else {
    parallel_for(schedule.size(), [&](std::size_t k) {
      out[k] = minimize(schedule[k].problem, schedule[k].config, start(schedule[k]));
    });
  }
  return out;
}

inline std::string sweep_csv(const std::vector<MinimizerResult>& rs) {
  std::string s = EnergyBreakdown::csv_header() + "\n";
  for (const auto& r : rs) s += r.breakdown.csv_row() + "\n";
  return s;
}

}  // namespace plateau
