#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "plateau/potential.hpp"

namespace plateau {

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) { return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0); }

struct RadialMinimizer {
  std::vector<double> r;
  std::vector<double> zeta;
  double theta = 0.0;        // AC/2
  double lambda = 0.0;       // multiplier of 2 eps^2 Lap z = W'(z) - eps Lambda V'(z)
  double v = 0.0;
  double eps = 0.0;
  int n = 1;
  double dirichlet = 0.0;    // halves
  double potential = 0.0;
  double equipartition_gap = 0.0;
  double residual = 0.0;     // weighted l2 norm of the radial EL residual
  int iterations = 0;
  bool ambiguous = false;    // two restarts disagree in theta beyond 1e-4 relative
  bool slow_regime = false;  // eps / v^(1/(n+1)) > 1

  std::string profile_csv() const {
    std::ostringstream s;
    s << "r,zeta\n" << std::setprecision(12);
    for (std::size_t k = 0; k < r.size(); ++k) s << r[k] << ',' << zeta[k] << '\n';
    return s.str();
  }
};

struct RadialOptions {
  int max_iters = 400000;
  double residual_tol = 1e-7;
  unsigned seed = 1;
  bool restart_check = true;
};

namespace detail {

// Finite-volume radial discretization on nodes r_k = k dr. Cell weights w_k = int r^n over the
// dual cell, face weights f_k = (1/dr) int_{r_k}^{r_k+1} r^n.
struct RadialGrid {
  int n = 1;
  double dr = 0.0;
  double area = 0.0;  // (n+1) omega_{n+1}
  std::vector<double> r, w, f;

  RadialGrid(int n_, double R, double dr_) : n(n_), dr(dr_) {
    const int N = static_cast<int>(std::ceil(R / dr));
    area = (n + 1) * unit_ball_volume(n + 1);
    auto P = [&](double x) { return std::pow(x, n + 1) / (n + 1); };
    r.resize(N + 1);
    w.resize(N + 1);
    f.resize(N);
    for (int k = 0; k <= N; ++k) {
      r[k] = k * dr;
      double a = std::max(0.0, r[k] - 0.5 * dr), b = k == N ? r[k] : r[k] + 0.5 * dr;
      w[k] = P(b) - P(a);
    }
    for (int k = 0; k < N; ++k) f[k] = (P(r[k + 1]) - P(r[k])) / dr;
  }
  std::size_t size() const { return r.size(); }
};

struct RadialState {
  double dir = 0.0, pot = 0.0, vol = 0.0;
};

inline RadialState radial_energy(const RadialGrid& G, const std::vector<double>& z, double eps,
                                 const Potential& W) {
  RadialState s;
  for (std::size_t k = 0; k + 1 < z.size(); ++k) {
    double d = z[k + 1] - z[k];
    s.dir += G.f[k] * d * d / G.dr;
  }
  for (std::size_t k = 0; k < z.size(); ++k) {
    s.pot += G.w[k] * W.W(z[k]).value;
    s.vol += G.w[k] * W.V(z[k]).value;
  }
  s.dir *= G.area * eps;
  s.pot *= G.area / eps;
  s.vol *= G.area;
  return s;
}

// Discrete radial Laplacian (divergence form); at r = 0 it reduces to 2^{n+1}(z_1 - z_0)/dr^2.
inline void radial_laplacian(const RadialGrid& G, const std::vector<double>& z, std::vector<double>& lap) {
  const std::size_t N = z.size();
  lap.assign(N, 0.0);
  for (std::size_t k = 0; k + 1 < N; ++k) {
    double flux = G.f[k] * (z[k + 1] - z[k]) / G.dr;
    lap[k] += flux;
    lap[k + 1] -= flux;
  }
  for (std::size_t k = 0; k < N; ++k) lap[k] /= G.w[k];
}

// Clamp-shift volume restoration in the radial weights (safeguarded Newton on s in [-1, 1]).
inline void radial_volume_fix(const RadialGrid& G, std::vector<double>& z, double target, const Potential& W) {
  auto vol = [&](double s, double* deriv) {
    double v = 0.0, d = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      double x = z[k] + s;
      if (x <= 0.0) continue;
      if (x >= 1.0) {
        v += G.w[k];
        continue;
      }
      auto vv = W.V(x);
      v += G.w[k] * vv.value;
      d += G.w[k] * vv.deriv;
    }
    if (deriv) *deriv = d * G.area;
    return v * G.area;
  };
  if (target > vol(1.0, nullptr)) throw std::invalid_argument("volume exceeds the radial domain");
  double lo = -1.0, hi = 1.0, s = 0.0, d = 0.0;
  double f = vol(s, &d) - target;
  for (int it = 0; it < 100 && std::abs(f) > 1e-14 * target; ++it) {
    (f > 0 ? hi : lo) = s;
    double next = d > 0 ? s - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    s = next;
    f = vol(s, &d) - target;
  }
  if (s != 0.0)
    for (auto& x : z) x = std::clamp(x + s, 0.0, 1.0);
}

// Least-squares Lambda and the weighted l2 EL residual.
inline std::pair<double, double> radial_multiplier(const RadialGrid& G, const std::vector<double>& z, double eps,
                                                   const Potential& W) {
  std::vector<double> lap;
  radial_laplacian(G, z, lap);
  double num = 0.0, den = 0.0;
  std::vector<double> a(z.size()), b(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    a[k] = W.W(z[k]).deriv - 2 * eps * eps * lap[k];
    b[k] = eps * W.V(z[k]).deriv;
    num += G.w[k] * a[k] * b[k];
    den += G.w[k] * b[k] * b[k];
  }
  double L = den > 0 ? num / den : 0.0;
  double res = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) res += G.area * G.w[k] * std::pow(a[k] - L * b[k], 2);
  return {L, std::sqrt(res)};
}

inline RadialMinimizer radial_descent(const RadialGrid& G, std::vector<double> z, double v, double eps,
                                      const Potential& W, const RadialOptions& opt) {
  const std::size_t N = z.size();
  radial_volume_fix(G, z, v, W);
  // Gershgorin bound of the weighted gradient
  double L = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    double s = (k > 0 ? G.f[k - 1] : 0.0) + (k + 1 < N ? G.f[k] : 0.0);
    L = std::max(L, 4.0 * eps * s / (G.dr * G.w[k]));
  }
  L += W.max_W2() / eps;
  const double tau = 1.8 / L;
  std::vector<double> lap, d(N);
  RadialMinimizer R;
  int it = 0;
  for (; it < opt.max_iters; ++it) {
    // weighted gradients per unit weight: -2 eps Lap z + W'/eps and V'
    radial_laplacian(G, z, lap);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      double ga = -2 * eps * lap[k] + W.W(z[k]).deriv / eps;
      double gv = W.V(z[k]).deriv;
      d[k] = ga;
      num += G.w[k] * ga * gv;
      den += G.w[k] * gv * gv;
    }
    double lam = den > 0 ? num / den : 0.0;
    for (std::size_t k = 0; k < N; ++k) d[k] -= lam * W.V(z[k]).deriv;
    if (it % 200 == 0) {
      auto [Lm, res] = radial_multiplier(G, z, eps, W);
      (void)Lm;
      if (res <= opt.residual_tol) break;
    }
    for (std::size_t k = 0; k < N; ++k) z[k] = std::clamp(z[k] - tau * d[k], 0.0, 1.0);
    radial_volume_fix(G, z, v, W);
  }
  if (it >= opt.max_iters)
    throw NonConvergence("radial solve did not converge in " + std::to_string(opt.max_iters) + " iterations");
  auto st = radial_energy(G, z, eps, W);
  auto [Lm, res] = radial_multiplier(G, z, eps, W);
  R.r = G.r;
  R.zeta = z;
  R.theta = 0.5 * (st.dir + st.pot);
  R.dirichlet = 0.5 * st.dir;
  R.potential = 0.5 * st.pot;
  R.equipartition_gap = (st.dir - st.pot) / (st.dir + st.pot);
  R.lambda = Lm;
  R.residual = res;
  R.iterations = it;
  R.v = v;
  R.eps = eps;
  R.n = G.n;
  return R;
}

}  // namespace detail

// Radial minimizer of AC/2 at volume v in R^{n+1}.
inline RadialMinimizer solve_theta(double v, double eps, int n, const Potential& W,
                                   const RadialOptions& opt = {}) {
  if (!(v > 0.0) || !(eps > 0.0)) throw std::invalid_argument("v and eps must be positive");
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  if (W.n() != n) throw std::invalid_argument("potential dimension differs from n");
  const double omega = unit_ball_volume(n + 1);
  const double R0 = std::pow(v / omega, 1.0 / (n + 1));
  const double Rmax = 3.0 * R0 + 10.0 * eps;
  const double dr = std::min(eps / 8.0, Rmax / 2048.0);
  detail::RadialGrid G(n, Rmax, dr);
  auto start = [&](double radius, unsigned seed) {
    std::vector<double> z(G.size());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 0.02);
    for (std::size_t k = 0; k < z.size(); ++k) {
      double x = 1.0 / (1.0 + std::exp(6.0 * (G.r[k] - radius) / eps));
      z[k] = std::clamp(x + (seed ? U(rng) * x : 0.0), 0.0, 1.0);
    }
    return z;
  };
  auto R = detail::radial_descent(G, start(R0, 0), v, eps, W, opt);
  R.slow_regime = eps / R0 > 1.0;
  if (opt.restart_check) {
    auto R2 = detail::radial_descent(G, start(0.8 * R0 + 0.5 * eps, opt.seed), v, eps, W, opt);
    R.ambiguous = std::abs(R2.theta - R.theta) > 1e-4 * R.theta;
  }
  return R;
}

struct ThetaRow {
  double v, eps, theta, lambda, gap, theta_over_v;
};

struct ThetaTable {
  std::vector<ThetaRow> rows;
  bool decreasing = true;  // theta/v strictly decreasing in v at every eps

  std::string csv() const {
    std::ostringstream s;
    s << "v,eps,theta,lambda,equipartition_gap,theta_over_v\n" << std::setprecision(12);
    for (const auto& r : rows)
      s << r.v << ',' << r.eps << ',' << r.theta << ',' << r.lambda << ',' << r.gap << ',' << r.theta_over_v << '\n';
    return s.str();
  }
};

// Rows for every (v, eps); v_list is sorted ascending before the monotonicity check.
inline ThetaTable theta_profile_table(std::vector<double> v_list, const std::vector<double>& eps_list, int n,
                                      const Potential& W, const RadialOptions& opt = {}) {
  std::sort(v_list.begin(), v_list.end());
  ThetaTable T;
  for (double eps : eps_list) {
    double prev = 0.0;
    for (std::size_t i = 0; i < v_list.size(); ++i) {
      auto R = solve_theta(v_list[i], eps, n, W, opt);
      double q = R.theta / R.v;
      T.rows.push_back({R.v, eps, R.theta, R.lambda, R.equipartition_gap, q});
      if (i > 0 && !(q < prev * (1.0 - 1e-6))) T.decreasing = false;
      prev = q;
    }
  }
  return T;
}

// Sharp-interface value (n+1) omega_{n+1}^{1/(n+1)} v^{n/(n+1)}: perimeter of the ball of volume v.
inline double sharp_theta(double v, int n) {
  return (n + 1) * std::pow(unit_ball_volume(n + 1), 1.0 / (n + 1)) * std::pow(v, static_cast<double>(n) / (n + 1));
}

}  // namespace plateau
