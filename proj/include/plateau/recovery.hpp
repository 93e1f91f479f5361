#pragma once

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "plateau/energy.hpp"
#include "plateau/geometry.hpp"
#include "plateau/grid.hpp"
#include "plateau/potential.hpp"
#include "plateau/profile.hpp"

namespace plateau {

struct FeatureSeparationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Smallest distance between voxel centers of F in different features; features are the face
// components of the one-voxel dilation of F, so diagonal staircases count as one feature.
// Infinite for a single feature.
inline double feature_separation(const Mask& F) {
  int n = 0;
  auto lab = label_components(dilate(F, 1), &n);
  for (std::size_t i = 0; i < F.size(); ++i)
    if (!F[i]) lab[i] = 0;
  if (n < 2) return std::numeric_limits<double>::infinity();
  const Grid& g = F.grid;
  double best = std::numeric_limits<double>::infinity();
  for (int c = 1; c <= n; ++c) {
    Mask comp(g);
    for (std::size_t i = 0; i < g.size(); ++i) comp[i] = lab[i] == c;
    auto d = squared_distance_to(comp);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (lab[i] > 0 && lab[i] != c) best = std::min(best, std::sqrt(d[i]) * g.h);
  }
  return best;
}

// u = eta_M shifted so that u = delta on the zero level of sd_F, F = K u E. Wire voxels are 0.
inline ScalarField build_recovery(const SharpInterfaceData& data, double eps, double M, double delta,
                                  const Potential& W, const Mask* wire = nullptr) {
  const Grid& g = data.K_mask.grid;
  if (!data.E_mask.grid.same_as(g)) throw std::invalid_argument("K and E grids differ");
  if (!(eps >= 2.0 * g.h)) throw std::invalid_argument("recovery needs eps >= 2h");
  Mask F = mask_or(data.K_mask, data.E_mask);
  if (wire)
    for (std::size_t i = 0; i < g.size(); ++i)
      if ((*wire)[i]) F[i] = 0;
  if (count(F) == 0) throw std::invalid_argument("recovery: K and E are both empty");
  const double sep = feature_separation(F);
  if (!(M * eps < 0.5 * sep))
    throw FeatureSeparationError("M*eps = " + std::to_string(M * eps) +
                                 " is not below half the feature separation " + std::to_string(sep));
  auto prof = build_truncated_profile(W, M, delta, 1e-4);
  auto sd = signed_distance(F);
  ScalarField u(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (wire && (*wire)[i]) continue;
    u[i] = std::clamp(prof.shifted(sd[i] / eps), 0.0, 1.0);
  }
  // pin the superlevel set to F exactly against interpolation round-off
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (F[i]) u[i] = std::max(u[i], delta);
    else if (u[i] >= delta) u[i] = std::nextafter(delta, 0.0);
  }
  return u;
}

// Sharp-interface measures of (K, E). The perimeter of E is the marching measure of the zero level
// of sd_E (through the centers of the boundary voxels). K outside E is measured by marching on its
// indicator (the acceptance measure) and by face counting.
struct SharpMeasures {
  double perimeter_E = 0.0;
  double k_outside_marching = 0.0;
  double k_outside_faces = 0.0;
};

inline SharpMeasures sharp_measures(const SharpInterfaceData& data, const Mask* wire = nullptr) {
  const Grid& g = data.K_mask.grid;
  SharpMeasures m;
  if (count(data.E_mask) > 0) {
    auto sd = signed_distance(data.E_mask);
    ScalarField e(g);
    for (std::size_t i = 0; i < g.size(); ++i) e[i] = -sd[i] / g.h;
    m.perimeter_E = level_set_measure(e, -1e-9, wire);
  }
  // K voxels that are neither in E nor face-adjacent to it
  Mask dE = dilate(data.E_mask, 1);
  Mask Ko(g);
  for (std::size_t i = 0; i < g.size(); ++i) Ko[i] = data.K_mask[i] && !dE[i] && !(wire && (*wire)[i]);
  if (count(Ko) > 0) {
    ScalarField k(g);
    for (std::size_t i = 0; i < g.size(); ++i) k[i] = Ko[i];
    // both sides of a thin set are crossed by the level set
    m.k_outside_marching = 0.5 * level_set_measure(k, 0.5, wire);
    std::size_t faces = 0;
    g.for_each_face([&](std::size_t a, std::size_t b, int) {
      if (Ko[a] != Ko[b] && !(wire && ((*wire)[a] || (*wire)[b]))) ++faces;
    });
    m.k_outside_faces = 0.5 * static_cast<double>(faces) * g.face_measure();
  }
  return m;
}

// Sharp target P(E) + 2 Phi(delta) |K outside E|.
inline double recovery_target(const SharpMeasures& m, double delta, const Potential& W) {
  return m.perimeter_E + 2.0 * W.Phi(delta) * m.k_outside_marching;
}

struct RecoveryRow {
  double eps = 0.0;
  double energy = 0.0;  // AC/2
  double target = 0.0;
  double gap = 0.0;     // |energy - target| / target
  double target_faces = 0.0;
};

inline std::vector<RecoveryRow> recovery_report(const SharpInterfaceData& data,
                                                const std::vector<double>& eps_list, double M,
                                                double delta, const Potential& W,
                                                const Mask* wire = nullptr) {
  auto m = sharp_measures(data, wire);
  const double target = recovery_target(m, delta, W);
  const double target_faces = m.perimeter_E + 2.0 * W.Phi(delta) * m.k_outside_faces;
  std::vector<RecoveryRow> rows;
  for (double eps : eps_list) {
    auto u = build_recovery(data, eps, M, delta, W, wire);
    RecoveryRow r;
    r.eps = eps;
    r.energy = 0.5 * ac_energy(u, eps, W, wire).total;
    r.target = target;
    r.target_faces = target_faces;
    r.gap = std::abs(r.energy - target) / target;
    rows.push_back(r);
  }
  return rows;
}

inline std::string recovery_csv(const std::vector<RecoveryRow>& rows) {
  std::ostringstream s;
  s << "eps,energy,target,gap,target_faces\n" << std::setprecision(12);
  for (const auto& r : rows) s << r.eps << ',' << r.energy << ',' << r.target << ',' << r.gap << ',' << r.target_faces << '\n';
  return s.str();
}

// ---------------------------------------------------------------------------------------------
// Fixed sharp-interface configurations.

// Straight segment K of length L on a grid row, abutting two wire boxes, h = 1/N.
struct SegmentSetup {
  Grid grid;
  WireFrame wire;
  SharpInterfaceData data;
  double length = 0.0;
};

inline SegmentSetup segment_setup(int N = 256, double L = 1.0) {
  const double h = 1.0 / N;
  const int nx = 2 * N + static_cast<int>(std::ceil(L * N)), ny = N;
  SegmentSetup s;
  s.grid = Grid::make2d(nx + (nx % 2), ny, h);
  const double x0 = 0.5 * s.grid.shape[0] * h - 0.5 * L;
  const double yc = (ny / 2) * h;
  const double pad = 0.4;
  s.wire = WireFrame(s.grid, {Box{{x0 - pad, yc - pad, 0}, {x0 - 0.5 * h, yc + pad, 0}},
                              Box{{x0 + L + 0.5 * h, yc - pad, 0}, {x0 + L + pad, yc + pad, 0}}});
  s.data = {Mask(s.grid), Mask(s.grid)};
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    auto x = s.grid.center(i);
    if (std::abs(x[1] - yc) < 0.5 * h && x[0] > x0 - 0.5 * h && x[0] < x0 + L + 0.5 * h && !s.wire.mask[i])
      s.data.K_mask[i] = 1;
  }
  s.length = L;
  return s;
}

// Disk E of radius r with K = its boundary voxels.
inline SharpInterfaceData disk_setup(const Grid& g, const Vec3& c, double r) {
  SharpInterfaceData d{Mask(g), voxelize({Ball{c, r}}, g)};
  d.K_mask = boundary_voxels(d.E_mask);
  return d;
}

}  // namespace plateau
