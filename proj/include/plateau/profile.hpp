#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "plateau/potential.hpp"

namespace plateau {

enum class ProfileKind { eta, q, p, eta_truncated };

inline const char* to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::eta: return "eta";
    case ProfileKind::q: return "q";
    case ProfileKind::p: return "p";
    case ProfileKind::eta_truncated: return "eta_truncated";
  }
  return "?";
}

struct Profile1D {
  std::vector<double> t;
  std::vector<double> value;
  double spacing = 0.0;
  ProfileKind kind = ProfileKind::eta;
  std::optional<double> truncation_M;
  // parameter s0 with value(s0) = delta; the shifted profile is value(s + s0)
  std::optional<double> delta_shift;

  double t_min() const { return t.front(); }
  double t_max() const { return t.back(); }

  // Linear interpolation, constant extension outside the sampled range.
  double operator()(double s) const {
    if (s <= t.front()) return value.front();
    if (s >= t.back()) return value.back();
    double x = (s - t.front()) / spacing;
    std::size_t i = std::min(static_cast<std::size_t>(x), t.size() - 2);
    double a = x - static_cast<double>(i);
    return (1.0 - a) * value[i] + a * value[i + 1];
  }

  double shifted(double s) const { return (*this)(s + delta_shift.value_or(0.0)); }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "t,value\n" << std::setprecision(17);
    for (std::size_t i = 0; i < t.size(); ++i) out << t[i] << ',' << value[i] << '\n';
  }
};

inline double eta_closed_form(double t) { return 1.0 / (1.0 + std::exp(6.0 * t)); }
inline double q_closed_form(double t) { return 1.0 / (1.0 + 3.0 * std::exp(-6.0 * t)); }
inline double p_closed_form(double t) { return 1.0 / (1.0 + 3.0 * std::exp(6.0 * t)); }

namespace detail {

inline double profile_sign(ProfileKind k) { return k == ProfileKind::q ? 1.0 : -1.0; }

inline double profile_anchor(ProfileKind k) { return k == ProfileKind::eta ? 0.5 : 0.25; }

inline double rk4(const Potential& W, double y, double h, double sign) {
  auto f = [&](double x) { return sign * W.sqrtW(std::clamp(x, 0.0, 1.0)); };
  double k1 = f(y);
  double k2 = f(y + 0.5 * h * k1);
  double k3 = f(y + 0.5 * h * k2);
  double k4 = f(y + h * k3);
  return std::clamp(y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), 0.0, 1.0);
}

}  // namespace detail

// Integrates p' = -sqrt(W(p)) (eta, p) or q' = sqrt(W(q)) from the anchor at t = 0 in both
// directions with classical RK4. The sample grid contains t = 0 exactly.
inline Profile1D solve_profile(const Potential& W, ProfileKind kind, double t_min, double t_max,
                               double dt) {
  if (kind == ProfileKind::eta_truncated)
    throw std::invalid_argument("use build_truncated_profile for truncated profiles");
  if (!(t_min < 0.0 && 0.0 < t_max)) throw std::invalid_argument("need t_min < 0 < t_max");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (dt > 0.01 / 6.0 + 1e-15) throw std::invalid_argument("step size too large: dt > 0.01/6");
  const long nl = static_cast<long>(std::ceil(-t_min / dt - 1e-9));
  const long nr = static_cast<long>(std::ceil(t_max / dt - 1e-9));
  const double sign = detail::profile_sign(kind);
  Profile1D p;
  p.kind = kind;
  p.spacing = dt;
  p.t.resize(nl + nr + 1);
  p.value.resize(nl + nr + 1);
  p.value[nl] = detail::profile_anchor(kind);
  for (long i = 0; i <= nl + nr; ++i) p.t[i] = static_cast<double>(i - nl) * dt;
  for (long i = nl; i < nl + nr; ++i) p.value[i + 1] = detail::rk4(W, p.value[i], dt, sign);
  for (long i = nl; i > 0; --i) p.value[i - 1] = detail::rk4(W, p.value[i], -dt, sign);
  return p;
}

struct ProfileEnergy {
  double total = 0.0;
  double below = 0.0;  // energy on t < crossing
  double above = 0.0;  // energy on t > crossing
  double dirichlet = 0.0;
  double potential = 0.0;
  bool truncated = false;  // endpoints not within 1e-6 of a well
};

// Trapezoidal energy of a 1D profile, derivative by centered differences.
// With split_at = d, the energy is divided at the (interpolated) point where the profile crosses d.
inline ProfileEnergy profile_energy(const Potential& W, const Profile1D& p,
                                    std::optional<double> split_at = std::nullopt) {
  const std::size_t N = p.value.size();
  if (N < 3) throw std::invalid_argument("profile too short");
  ProfileEnergy e;
  auto near_well = [](double x) { return std::min(std::abs(x), std::abs(1.0 - x)) <= 1e-6; };
  e.truncated = !(near_well(p.value.front()) && near_well(p.value.back()));
  const double dt = p.spacing;
  std::vector<double> dens(N), grad2(N), pot(N);
  for (std::size_t i = 0; i < N; ++i) {
    double d;
    if (i == 0) d = (-3 * p.value[0] + 4 * p.value[1] - p.value[2]) / (2 * dt);
    else if (i == N - 1) d = (3 * p.value[N - 1] - 4 * p.value[N - 2] + p.value[N - 3]) / (2 * dt);
    else d = (p.value[i + 1] - p.value[i - 1]) / (2 * dt);
    grad2[i] = d * d;
    pot[i] = W.W(p.value[i]).value;
    dens[i] = grad2[i] + pot[i];
  }
  for (std::size_t i = 0; i + 1 < N; ++i) {
    e.dirichlet += 0.5 * dt * (grad2[i] + grad2[i + 1]);
    e.potential += 0.5 * dt * (pot[i] + pot[i + 1]);
  }
  e.total = e.dirichlet + e.potential;
  if (split_at) {
    double d = *split_at;
    std::optional<std::size_t> k;
    for (std::size_t i = 0; i + 1 < N; ++i) {
      double a = p.value[i] - d, b = p.value[i + 1] - d;
      if ((a >= 0 && b < 0) || (a <= 0 && b > 0) || a == 0.0) {
        k = i;
        break;
      }
    }
    if (!k) {
      // the profile never crosses the level: everything lies on one side
      bool all_above_level = p.value.front() > d;
      bool decreasing = p.value.front() >= p.value.back();
      if (all_above_level == decreasing) e.below = e.total; else e.above = e.total;
      return e;
    }
    std::size_t i = *k;
    double a = p.value[i] - d, b = p.value[i + 1] - d;
    double frac = (a == b) ? 0.0 : a / (a - b);
    double dm = dens[i] + frac * (dens[i + 1] - dens[i]);
    double below = 0.0;
    for (std::size_t j = 0; j < i; ++j) below += 0.5 * dt * (dens[j] + dens[j + 1]);
    below += 0.5 * frac * dt * (dens[i] + dm);
    e.below = below;
    e.above = e.total - below;
  }
  return e;
}

// Smoothstep weight 6x^5 - 15x^4 + 10x^3.
inline double quintic_blend(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}

// Truncated profile eta_M: 1 on t <= 0, 0 on t >= M, eta(t - M/2) in the middle, with quintic
// blending over a unit-length layer at both ends. delta_shift holds s0 with eta_M(s0) = delta.
inline Profile1D build_truncated_profile(const Potential& W, double M, double delta,
                                         double dt = 1e-3) {
  if (!(M >= 4.0)) throw std::invalid_argument("truncation length M too small (need M >= 4)");
  if (!(delta >= 0.5 && delta <= 1.0)) throw std::invalid_argument("delta must lie in [1/2,1]");
  const double b = 1.0;
  const double pad = 1.0;
  Profile1D eta = solve_profile(W, ProfileKind::eta, -M / 2 - pad - 1.0, M / 2 + pad + 1.0,
                                std::min(dt, 0.01 / 6.0));
  Profile1D p;
  p.kind = ProfileKind::eta_truncated;
  p.truncation_M = M;
  p.spacing = dt;
  const long lo = -static_cast<long>(std::ceil(pad / dt));
  const long hi = static_cast<long>(std::ceil((M + pad) / dt));
  for (long i = lo; i <= hi; ++i) {
    double s = static_cast<double>(i) * dt;
    double v;
    if (s <= 0.0) v = 1.0;
    else if (s >= M) v = 0.0;
    else {
      double e = eta(s - M / 2);
      if (s < b) v = 1.0 + (e - 1.0) * quintic_blend(s / b);
      else if (s > M - b) v = e * quintic_blend((M - s) / b);
      else v = e;
    }
    p.t.push_back(s);
    p.value.push_back(v);
  }
  // crossing of delta
  double s0 = 0.0;
  if (delta < 1.0) {
    double lo_s = 0.0, hi_s = M;
    for (int it = 0; it < 200; ++it) {
      double m = 0.5 * (lo_s + hi_s);
      (p(m) > delta ? lo_s : hi_s) = m;
    }
    s0 = 0.5 * (lo_s + hi_s);
  }
  p.delta_shift = s0;
  return p;
}

// q0 and p0 glue levels: Q0 = q^{-1}(delta0), infinite when delta0 = 1.
inline std::optional<double> Q0(const Potential& W, double delta0) {
  if (delta0 >= 1.0) return std::nullopt;
  if (W.is_default()) return std::log(3.0 * delta0 / (1.0 - delta0)) / 6.0;
  Profile1D q = solve_profile(W, ProfileKind::q, -20.0, 20.0, 1e-3);
  for (std::size_t i = 0; i + 1 < q.value.size(); ++i)
    if (q.value[i] <= delta0 && q.value[i + 1] > delta0)
      return q.t[i] + q.spacing * (delta0 - q.value[i]) / (q.value[i + 1] - q.value[i]);
  return std::nullopt;
}

// P0 = p^{-1}(delta0) = -Q0 by the reflection p(t) = q(-t).
inline std::optional<double> P0(const Potential& W, double delta0) {
  auto q = Q0(W, delta0);
  if (!q) return std::nullopt;
  return -*q;
}

// q0 = q on (-inf, Q0], delta0 beyond.
inline Profile1D q0_profile(const Potential& W, double delta0, double t_min, double t_max,
                            double dt) {
  Profile1D q = solve_profile(W, ProfileKind::q, t_min, t_max, dt);
  for (double& v : q.value) v = std::min(v, delta0);
  return q;
}

}  // namespace plateau
