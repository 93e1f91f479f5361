#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "plateau/recovery.hpp"
#include "plateau/solver.hpp"

using namespace plateau;

namespace {

const Potential W1(1);

// Volume fixing by a diffeomorphism: w_s(x) = u(f_s^{-1}(x)) with f_s the normal stretch
// f_s(x) = (x_1, c_2 + (1 + s b(x_1)) (x_2 - c_2)), b a smooth bump of half-width rho around c_1.
// The volume is affine in s; s is found by bisection.
double bump(double r) { return r < 1.0 ? std::pow(1.0 - r * r, 3) : 0.0; }

ScalarField flow_push(const ScalarField& u, double s, const Vec3& c, double rho) {
  const Grid& g = u.grid;
  ScalarField w = u;
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec3 x = g.center(i);
    double b = bump(std::abs(x[0] - c[0]) / rho);
    if (b == 0.0) continue;
    double y = c[1] + (x[1] - c[1]) / (1.0 + s * b);
    double fy = std::clamp((y - g.origin[1]) / g.h, 0.0, g.shape[1] - 1.000001);
    auto ij = g.coords(i);
    int j0 = static_cast<int>(fy);
    double a = fy - j0;
    w[i] = (1 - a) * u.at(ij[0], j0) + a * u.at(ij[0], j0 + 1);
  }
  return w;
}

ScalarField flow_volume_fix(const ScalarField& u, double target, const Vec3& c, double rho,
                            const Potential& W, const Mask* wire) {
  double lo = -0.5, hi = 0.5;
  for (int it = 0; it < 60; ++it) {
    double m = 0.5 * (lo + hi);
    (volume(flow_push(u, m, c, rho), W, wire) < target ? lo : hi) = m;
  }
  return flow_push(u, 0.5 * (lo + hi), c, rho);
}

}  // namespace

TEST(Recovery, SegmentEnergyIsTwiceLength) {
  auto s = segment_setup(256, 1.0);
  const double eps = 8.0 / 256;
  auto u = build_recovery(s.data, eps, 10.0, 1.0, W1, &s.wire.mask);
  double e = 0.5 * ac_energy(u, eps, W1, &s.wire.mask).total;
  EXPECT_NEAR(e, 2.0, 0.05 * 2.0);
  auto m = sharp_measures(s.data, &s.wire.mask);
  EXPECT_NEAR(m.k_outside_marching, 1.0, 0.01);
  EXPECT_NEAR(m.k_outside_faces, 1.0, 0.01);
}

TEST(Recovery, HalfLevelHalvesTheTarget) {
  auto s = segment_setup(256, 1.0);
  const double eps = 8.0 / 256;
  auto u1 = build_recovery(s.data, eps, 10.0, 1.0, W1, &s.wire.mask);
  auto u5 = build_recovery(s.data, eps, 10.0, 0.5, W1, &s.wire.mask);
  double e1 = 0.5 * ac_energy(u1, eps, W1, &s.wire.mask).total;
  double e5 = 0.5 * ac_energy(u5, eps, W1, &s.wire.mask).total;
  EXPECT_NEAR(W1.Phi(0.5), 0.5, 1e-15);
  EXPECT_NEAR(e5, 1.0, 0.05);
  EXPECT_LT(e5, e1);
}

TEST(Recovery, SuperlevelSetEqualsSharpSet) {
  auto s = segment_setup(128, 1.0);
  for (double delta : {1.0, 0.9, 0.5}) {
    auto u = build_recovery(s.data, 4.0 / 128, 6.0, delta, W1, &s.wire.mask);
    auto S = superlevel_set(u, delta, &s.wire.mask);
    for (std::size_t i = 0; i < S.size(); ++i) ASSERT_EQ(S[i], s.data.K_mask[i]) << delta;
  }
  auto g = Grid::make2d(96, 96, 1.0 / 96);
  auto d = disk_setup(g, {0.5, 0.5, 0}, 0.2);
  auto u = build_recovery(d, 4.0 / 96, 4.0, 0.8, W1);
  auto S = superlevel_set(u, 0.8);
  for (std::size_t i = 0; i < S.size(); ++i) ASSERT_EQ(S[i], d.E_mask[i]);
}

TEST(Recovery, DiskEnergyMatchesMarchingPerimeter) {
  const int n = 512;
  const double r = 0.4;
  auto g = Grid::make2d(n, n, 1.0 / n);
  auto d = disk_setup(g, {0.5, 0.5, 0}, r);
  EXPECT_EQ(d.check(), "");
  auto m = sharp_measures(d);
  EXPECT_EQ(m.k_outside_marching, 0.0);
  // the marching measure of a digital circle carries a staircase excess of about 5%
  EXPECT_GT(m.perimeter_E, 2 * std::numbers::pi * r);
  EXPECT_LT(m.perimeter_E, 1.06 * 2 * std::numbers::pi * r);
  const double eps = 2.0 / n;
  auto u = build_recovery(d, eps, 4.0, 1.0, W1);
  double e = 0.5 * ac_energy(u, eps, W1).total;
  EXPECT_NEAR(e, m.perimeter_E, 0.05 * m.perimeter_E);
  // the transition layer sits near the M eps / 2 offset of E, so against the continuum perimeter
  // the gap shrinks with eps
  auto rows = recovery_report(d, {8.0 / n, 4.0 / n, 2.0 / n}, 4.0, 1.0, W1);
  double prev = 1e300;
  for (const auto& row : rows) {
    double gap = std::abs(row.energy / (2 * std::numbers::pi * r) - 1.0);
    EXPECT_LT(gap, prev);
    prev = gap;
  }
}

TEST(Recovery, Errors) {
  auto g = Grid::make2d(64, 64, 1.0 / 64);
  SharpInterfaceData empty{Mask(g), Mask(g)};
  EXPECT_THROW(build_recovery(empty, 4.0 / 64, 6.0, 1.0, W1), std::invalid_argument);
  SharpInterfaceData two{Mask(g), voxelize({Ball{{0.25, 0.5, 0}, 0.1}, Ball{{0.75, 0.5, 0}, 0.1}}, g)};
  // separation about 0.3; M eps = 0.25 too large, 0.125 fine
  EXPECT_THROW(build_recovery(two, 4.0 / 64, 4.0, 1.0, W1), FeatureSeparationError);
  EXPECT_NO_THROW(build_recovery(two, 2.0 / 64, 4.0, 1.0, W1));
  EXPECT_THROW(build_recovery(two, 1.0 / 64, 4.0, 1.0, W1), std::invalid_argument);
}

TEST(Recovery, ReportTrendAndCsv) {
  auto s = segment_setup(256, 1.0);
  const double h = 1.0 / 256;
  auto rows = recovery_report(s.data, {16 * h, 8 * h, 4 * h}, 10.0, 1.0, W1, &s.wire.mask);
  ASSERT_EQ(rows.size(), 3u);
  // a straight layer has no curvature error: the gap is the grid floor, largest at eps = 4h
  for (const auto& r : rows) EXPECT_LT(r.gap, 0.02);
  EXPECT_LT(rows[1].gap, rows[2].gap);
  auto csv = recovery_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "eps,energy,target,gap,target_faces");
}

TEST(Recovery, ClampShiftRestoresVolume) {
  auto s = segment_setup(128, 1.0);
  const double eps = 6.0 / 128;
  auto u = build_recovery(s.data, eps, 8.0, 1.0, W1, &s.wire.mask);
  const double v0 = volume(u, W1, &s.wire.mask);
  for (double rel : {-0.05, 0.05}) {
    auto w = volume_fix(u, v0 * (1 + rel), W1, &s.wire.mask);
    EXPECT_NEAR(volume(w, W1, &s.wire.mask), v0 * (1 + rel), 1e-9 * v0);
  }
}

TEST(Recovery, FlowVolumeFixChangesEnergyProportionally) {
  auto s = segment_setup(128, 1.0);
  const double eps = 6.0 / 128;
  const Mask* wire = &s.wire.mask;
  auto u = build_recovery(s.data, eps, 8.0, 1.0, W1, wire);
  const double v0 = volume(u, W1, wire);
  const double e0 = ac_energy(u, eps, W1, wire).total;
  const Vec3 c = s.grid.center(s.grid.shape[0] / 2, s.grid.shape[1] / 2);
  for (double rel : {-0.05, -0.01, 0.01, 0.05}) {
    auto w = flow_volume_fix(u, v0 * (1 + rel), c, 0.45, W1, wire);
    EXPECT_NEAR(volume(w, W1, wire), v0 * (1 + rel), 1e-6 * v0);
    double e = ac_energy(w, eps, W1, wire).total;
    EXPECT_LE(std::abs(e - e0) / e0, 10.0 * std::abs(rel)) << rel;
  }
}
