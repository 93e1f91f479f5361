#pragma once

#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "plateau/grid.hpp"
#include "plateau/potential.hpp"

namespace plateau {

// Energies are the full Allen-Cahn energy AC = dirichlet + potential; reports halve them.
struct EnergyBreakdown {
  double eps = 0.0;
  double v = 0.0;      // target volume, when known
  double delta = 1.0;  // spanning level, when known
  double dirichlet = 0.0;
  double potential = 0.0;
  double total = 0.0;
  double mm_lower = 0.0;
  double volume = 0.0;
  double equipartition_gap = 0.0;
  double lambda_hat = 0.0;
  bool resolution_warning = false;  // eps < 2h

  static std::string csv_header() {
    return "eps,v,delta,dirichlet,potential,total,mm_lower,equipartition_gap,lambda_hat";
  }
  // One CSV row; energies are reported as AC/2.
  std::string csv_row() const {
    std::ostringstream s;
    s << std::setprecision(12) << eps << ',' << v << ',' << delta << ',' << 0.5 * dirichlet << ','
      << 0.5 * potential << ',' << 0.5 * total << ',' << 0.5 * mm_lower << ',' << equipartition_gap
      << ',' << lambda_hat;
    return s.str();
  }
};

namespace detail {

inline bool in_omega(const Mask* wire, std::size_t i) { return !wire || !(*wire)[i]; }

struct EnergySums {
  double dir = 0.0;  // sum of squared face differences
  double pot = 0.0;  // sum of W(u)
  double vol = 0.0;  // sum of V(u)
  double mm = 0.0;   // sum of sqrt(W(u_p)) |forward difference of u| per voxel
  std::size_t voxels = 0;
};

// One pass over Omega computing the raw sums and optionally the (unscaled) pieces of the
// gradient: lap[i] = sum over Omega neighbours (u_q - u_i), dw[i] = W'(u_i), dv[i] = V'(u_i).
inline EnergySums energy_pass(const ScalarField& u, const Potential& W, const Mask* wire,
                              std::vector<double>* lap = nullptr, std::vector<double>* dw = nullptr,
                              std::vector<double>* dv = nullptr, bool want_mm = true) {
  const Grid& g = u.grid;
  const std::size_t N = g.size();
  if (lap) lap->assign(N, 0.0);
  if (dw) dw->assign(N, 0.0);
  if (dv) dv->assign(N, 0.0);
  EnergySums s;
  const std::size_t st[3] = {g.stride(0), g.stride(1), g.stride(2)};
  for (int i = 0; i < g.shape[0]; ++i)
    for (int j = 0; j < g.shape[1]; ++j)
      for (int k = 0; k < g.shape[2]; ++k) {
        const std::size_t p = g.index(i, j, k);
        if (!in_omega(wire, p)) continue;
        ++s.voxels;
        const double up = u[p];
        auto w = W.W(up);
        s.pot += w.value;
        auto vv = W.V(up);
        s.vol += vv.value;
        if (dw) (*dw)[p] = w.deriv;
        if (dv) (*dv)[p] = vv.deriv;
        const int c[3] = {i, j, k};
        double gu2 = 0.0;
        for (int a = 0; a < g.dim; ++a) {
          if (c[a] + 1 >= g.shape[a]) continue;
          const std::size_t q = p + st[a];
          if (!in_omega(wire, q)) continue;
          const double du = u[q] - up;
          s.dir += du * du;
          if (lap) {
            (*lap)[p] += du;
            (*lap)[q] -= du;
          }
          gu2 += du * du;
        }
        if (want_mm) s.mm += std::sqrt(w.value * gu2);
      }
  return s;
}

}  // namespace detail

// Discrete Allen-Cahn energy on Omega = grid minus wire. Dirichlet part by forward differences on
// faces with both voxels in Omega (zero flux elsewhere), potential and volume by the midpoint rule.
inline EnergyBreakdown ac_energy(const ScalarField& u, double eps, const Potential& W,
                                 const Mask* wire = nullptr) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  const Grid& g = u.grid;
  auto s = detail::energy_pass(u, W, wire);
  const double hd = g.cell_measure();
  EnergyBreakdown e;
  e.eps = eps;
  e.dirichlet = eps * s.dir * std::pow(g.h, g.dim - 2);
  e.potential = s.pot * hd / eps;
  e.total = e.dirichlet + e.potential;
  e.volume = s.vol * hd;
  e.mm_lower = 2.0 * s.mm * g.face_measure();
  e.equipartition_gap = e.total > 0 ? (e.dirichlet - e.potential) / e.total : 0.0;
  e.resolution_warning = eps < 2.0 * g.h;
  return e;
}

inline double volume(const ScalarField& u, const Potential& W, const Mask* wire = nullptr) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (detail::in_omega(wire, i)) s += W.V(u[i]).value;
  return s * u.grid.cell_measure();
}

// Modica-Mortola lower bound 2 |D(Phi o u)|(Omega) with the discrete chain rule
// D(Phi o u) = sqrt(W(u_p)) D u on the forward-difference stencil of ac_energy, so that
// ac_energy >= mm_lower_bound holds voxel by voxel.
inline double mm_lower_bound(const ScalarField& u, const Potential& W, const Mask* wire = nullptr) {
  auto s = detail::energy_pass(u, W, wire);
  return 2.0 * s.mm * u.grid.face_measure();
}

// Exact gradient of ac_energy with respect to the voxel values (zero on wire voxels).
inline std::vector<double> ac_gradient(const ScalarField& u, double eps, const Potential& W,
                                       const Mask* wire = nullptr) {
  const Grid& g = u.grid;
  std::vector<double> lap, dw;
  detail::energy_pass(u, W, wire, &lap, &dw, nullptr, false);
  const double hd = g.cell_measure();
  const double a = 2.0 * eps * std::pow(g.h, g.dim - 2);
  std::vector<double> grad(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (detail::in_omega(wire, i)) grad[i] = -a * lap[i] + dw[i] * hd / eps;
  return grad;
}

inline std::vector<double> volume_gradient(const ScalarField& u, const Potential& W,
                                           const Mask* wire = nullptr) {
  const double hd = u.grid.cell_measure();
  std::vector<double> g(u.size(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i)
    if (detail::in_omega(wire, i)) g[i] = W.V(u[i]).deriv * hd;
  return g;
}

struct ZeroVolumeGradient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Least-squares multiplier <grad AC, grad V>/|grad V|^2, optionally restricted to `use` voxels.
inline double lagrange_estimate(const std::vector<double>& gac, const std::vector<double>& gv,
                                const std::vector<char>* use = nullptr) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < gac.size(); ++i) {
    if (use && !(*use)[i]) continue;
    num += gac[i] * gv[i];
    den += gv[i] * gv[i];
  }
  if (!(den > 0.0)) throw ZeroVolumeGradient("volume gradient vanishes (u identically 0 or 1)");
  return num / den;
}

inline double lagrange_estimate(const ScalarField& u, double eps, const Potential& W,
                                const Mask* wire = nullptr) {
  return lagrange_estimate(ac_gradient(u, eps, W, wire), volume_gradient(u, W, wire));
}

// Discrete Laplacian with zero flux across the wire frame and the grid boundary.
inline std::vector<double> laplacian(const ScalarField& u, const Mask* wire = nullptr) {
  const Grid& g = u.grid;
  std::vector<double> lap(g.size(), 0.0);
  const double ih2 = 1.0 / (g.h * g.h);
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (!detail::in_omega(wire, p)) continue;
    double s = 0.0;
    g.for_each_neighbor(p, [&](std::size_t q) {
      if (detail::in_omega(wire, q)) s += u[q] - u[p];
    });
    lap[p] = s * ih2;
  }
  return lap;
}

// Root mean square over Omega of (delta - u)(2 eps^2 Lap u - W'(u) + eps lambda V'(u)).
inline double el_outer_residual(const ScalarField& u, double eps, double lambda, double delta,
                                const Potential& W, const Mask* wire = nullptr,
                                const std::vector<char>* use = nullptr) {
  if (!std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite");
  auto lap = laplacian(u, wire);
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < u.size(); ++p) {
    if (!detail::in_omega(wire, p)) continue;
    if (use && !(*use)[p]) continue;
    double r = (delta - u[p]) *
               (2.0 * eps * eps * lap[p] - W.W(u[p]).deriv + eps * lambda * W.V(u[p]).deriv);
    s += r * r;
    ++n;
  }
  return n ? std::sqrt(s / static_cast<double>(n)) : 0.0;
}

struct SupportViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Inner variation  int ac(u) div X - 2 eps grad u . DX grad u - lambda int V(u) div X  with
// centered differences. X must vanish on the wire, next to it, and on the two outer grid layers.
inline double inner_variation_residual(const ScalarField& u, double eps, double lambda,
                                       const std::vector<Vec3>& X, const Potential& W,
                                       const Mask* wire = nullptr) {
  const Grid& g = u.grid;
  if (X.size() != g.size()) throw std::invalid_argument("vector field size mismatch");
  for (std::size_t p = 0; p < g.size(); ++p) {
    bool nonzero = X[p][0] != 0.0 || X[p][1] != 0.0 || X[p][2] != 0.0;
    if (!nonzero) continue;
    auto c = g.coords(p);
    for (int a = 0; a < g.dim; ++a)
      if (c[a] < 2 || c[a] > g.shape[a] - 3) throw SupportViolation("X not compactly supported in the grid");
    if (wire) {
      bool bad = (*wire)[p];
      g.for_each_neighbor(p, [&](std::size_t q) { bad = bad || (*wire)[q]; });
      if (bad) throw SupportViolation("X must vanish on and next to the wire frame");
    }
  }
  const double ih = 1.0 / g.h;
  auto cdiff = [&](auto&& f, std::size_t p, int a) {
    auto c = g.coords(p);
    const std::size_t s = g.stride(a);
    bool lo = c[a] > 0 && detail::in_omega(wire, p - s);
    bool hi = c[a] + 1 < g.shape[a] && detail::in_omega(wire, p + s);
    if (lo && hi) return 0.5 * (f(p + s) - f(p - s)) * ih;
    if (hi) return (f(p + s) - f(p)) * ih;
    if (lo) return (f(p) - f(p - s)) * ih;
    return 0.0;
  };
  double total = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (!detail::in_omega(wire, p)) continue;
    double gu[3] = {0, 0, 0};
    double DX[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    bool any = false;
    for (int a = 0; a < g.dim; ++a) {
      gu[a] = cdiff([&](std::size_t q) { return u[q]; }, p, a);
      for (int b = 0; b < g.dim; ++b) {
        DX[a][b] = cdiff([&](std::size_t q) { return X[q][a]; }, p, b);
        any = any || DX[a][b] != 0.0;
      }
    }
    if (!any) continue;
    double div = 0.0;
    for (int a = 0; a < g.dim; ++a) div += DX[a][a];
    double g2 = 0.0;
    for (int a = 0; a < g.dim; ++a) g2 += gu[a] * gu[a];
    double ac = eps * g2 + W.W(u[p]).value / eps;
    double quad = 0.0;
    for (int a = 0; a < g.dim; ++a)
      for (int b = 0; b < g.dim; ++b) quad += gu[a] * DX[a][b] * gu[b];
    total += ac * div - 2.0 * eps * quad - lambda * W.V(u[p]).value * div;
  }
  return total * g.cell_measure();
}

// ---------------------------------------------------------------------------------------------
// Level-set quadrature: marching squares (2D) and marching tetrahedra (3D), linear interpolation.

using LevelIntegrand = std::function<double(const Vec3& x, const Vec3& grad)>;

namespace detail {

inline double det3(const double m[3][3]) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

}  // namespace detail

inline double level_set_integral(const ScalarField& u, double level, const LevelIntegrand& f,
                                 const Mask* wire = nullptr) {
  const Grid& g = u.grid;
  const double h = g.h;
  double total = 0.0;
  if (g.dim == 2) {
    for (int i = 0; i + 1 < g.shape[0]; ++i)
      for (int j = 0; j + 1 < g.shape[1]; ++j) {
        std::size_t id[4] = {g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1), g.index(i, j + 1)};
        bool ok = true;
        for (auto q : id) ok = ok && detail::in_omega(wire, q);
        if (!ok) continue;
        double v[4];
        for (int c = 0; c < 4; ++c) v[c] = u[id[c]] - level;
        int mask = 0;
        for (int c = 0; c < 4; ++c) mask |= (v[c] >= 0 ? 1 : 0) << c;
        if (mask == 0 || mask == 15) continue;
        const double cx[4] = {0, 1, 1, 0}, cy[4] = {0, 0, 1, 1};
        std::vector<std::pair<double, double>> pts;
        for (int e = 0; e < 4; ++e) {
          int a = e, b = (e + 1) % 4;
          if ((v[a] >= 0) == (v[b] >= 0)) continue;
          double t = v[a] / (v[a] - v[b]);
          pts.push_back({cx[a] + t * (cx[b] - cx[a]), cy[a] + t * (cy[b] - cy[a])});
        }
        std::vector<std::array<int, 2>> segs;
        if (pts.size() == 2) segs.push_back({0, 1});
        else if (pts.size() == 4) {
          double center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
          // saddle: cut off the two corners whose sign differs from the cell center
          if ((center >= 0) == (v[0] >= 0)) segs = {{0, 1}, {2, 3}};
          else segs = {{3, 0}, {1, 2}};
        }
        for (auto& s : segs) {
          auto [x0, y0] = pts[s[0]];
          auto [x1, y1] = pts[s[1]];
          double len = std::hypot(x1 - x0, y1 - y0) * h;
          double mx = 0.5 * (x0 + x1), my = 0.5 * (y0 + y1);
          double u00 = v[0], u10 = v[1], u11 = v[2], u01 = v[3];
          Vec3 grad{((u10 - u00) * (1 - my) + (u11 - u01) * my) / h,
                    ((u01 - u00) * (1 - mx) + (u11 - u10) * mx) / h, 0.0};
          Vec3 x = g.center(i, j) + Vec3{mx * h, my * h, 0.0};
          total += len * f(x, grad);
        }
      }
    return total;
  }
  // 3D: six tetrahedra around the main diagonal of every cube
  static const int tets[6][4] = {{0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7},
                                 {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7}};
  for (int i = 0; i + 1 < g.shape[0]; ++i)
    for (int j = 0; j + 1 < g.shape[1]; ++j)
      for (int k = 0; k + 1 < g.shape[2]; ++k) {
        double v[8];
        Vec3 P[8];
        bool ok = true;
        bool pos = false, neg = false;
        for (int c = 0; c < 8; ++c) {
          int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
          std::size_t q = g.index(i + di, j + dj, k + dk);
          ok = ok && detail::in_omega(wire, q);
          v[c] = u[q] - level;
          (v[c] >= 0 ? pos : neg) = true;
          P[c] = Vec3{double(di), double(dj), double(dk)};
        }
        if (!ok || !pos || !neg) continue;
        Vec3 base = g.center(i, j, k);
        for (auto& T : tets) {
          double tv[4];
          Vec3 tp[4];
          for (int c = 0; c < 4; ++c) {
            tv[c] = v[T[c]];
            tp[c] = P[T[c]];
          }
          // gradient of the linear interpolant
          double E[3][3], rhs[3];
          for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) E[r][c] = (tp[r + 1][c] - tp[0][c]) * h;
            rhs[r] = tv[r + 1] - tv[0];
          }
          double D = detail::det3(E);
          Vec3 grad{0, 0, 0};
          for (int c = 0; c < 3; ++c) {
            double M[3][3];
            for (int r = 0; r < 3; ++r)
              for (int cc = 0; cc < 3; ++cc) M[r][cc] = cc == c ? rhs[r] : E[r][cc];
            grad[c] = detail::det3(M) / D;
          }
          std::vector<Vec3> pts;
          std::vector<int> in, out;
          for (int c = 0; c < 4; ++c) (tv[c] >= 0 ? in : out).push_back(c);
          if (in.empty() || out.empty()) continue;
          for (int a : in)
            for (int b : out) {
              double t = tv[a] / (tv[a] - tv[b]);
              pts.push_back(tp[a] + t * (tp[b] - tp[a]));
            }
          auto tri = [&](const Vec3& a, const Vec3& b, const Vec3& c) {
            double area = 0.5 * norm(detail::cross(b - a, c - a)) * h * h;
            Vec3 m = (1.0 / 3.0) * (a + b + c);
            total += area * f(base + h * m, grad);
          };
          if (pts.size() == 3) tri(pts[0], pts[1], pts[2]);
          else {
            // in = {a0,a1}, out = {b0,b1}: points a0b0, a0b1, a1b0, a1b1 form a quad
            tri(pts[0], pts[1], pts[3]);
            tri(pts[0], pts[3], pts[2]);
          }
        }
      }
  return total;
}

inline double level_set_measure(const ScalarField& u, double level, const Mask* wire = nullptr) {
  return level_set_integral(u, level, [](const Vec3&, const Vec3&) { return 1.0; }, wire);
}

// Difference of the flux integrals of |grad u| (X . grad u) over the level sets {u = delta + t}
// and {u = delta - t}. X defaults to the first coordinate direction.
inline double transmission_flux_gap(const ScalarField& u, double delta, double t,
                                    const Mask* wire = nullptr,
                                    std::function<Vec3(const Vec3&)> X = nullptr) {
  if (!(t > 0.0)) throw std::invalid_argument("t must be positive");
  if (delta < 1.0 && !(t < std::min(delta - 0.5, 1.0 - delta)))
    throw std::invalid_argument("t must be below min(delta - 1/2, 1 - delta)");
  if (!X) X = [](const Vec3&) { return Vec3{1, 0, 0}; };
  auto integrand = [&](const Vec3& x, const Vec3& gr) { return norm(gr) * dot(X(x), gr); };
  double up = delta + t <= 1.0 ? level_set_integral(u, delta + t, integrand, wire) : 0.0;
  double dn = level_set_integral(u, delta - t, integrand, wire);
  return up - dn;
}

}  // namespace plateau
