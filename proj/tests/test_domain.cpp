#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <cstring>
#include <numbers>
#include <random>

#include "plateau/geometry.hpp"
#include "plateau/grid.hpp"

using namespace plateau;

namespace {

std::string tmp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "plateau_test_domain";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

// All-pairs brute force of the signed distance convention.
double brute_signed_distance(const Mask& m, std::size_t i) {
  const Grid& g = m.grid;
  double best = 1e300;
  for (std::size_t j = 0; j < g.size(); ++j)
    if (m[j] != m[i]) best = std::min(best, norm(g.center(i) - g.center(j)));
  if (m[i]) return -(best - g.h);
  best = 1e300;
  for (std::size_t j = 0; j < g.size(); ++j)
    if (m[j]) best = std::min(best, norm(g.center(i) - g.center(j)));
  return best;
}

}  // namespace

TEST(Grid, ValidationAndIndexing) {
  EXPECT_THROW(Grid::make2d(7, 8, 1.0), std::invalid_argument);
  EXPECT_THROW(Grid::make2d(8, 8, 0.0), std::invalid_argument);
  auto g = Grid::make3d(8, 9, 10, 0.5, {1, 2, 3});
  EXPECT_EQ(g.size(), 720u);
  auto idx = g.index(3, 4, 5);
  auto c = g.coords(idx);
  EXPECT_EQ(c[0], 3);
  EXPECT_EQ(c[1], 4);
  EXPECT_EQ(c[2], 5);
  auto x = g.center(idx);
  EXPECT_DOUBLE_EQ(x[0], 2.5);
  EXPECT_DOUBLE_EQ(x[1], 4.0);
  EXPECT_DOUBLE_EQ(x[2], 5.5);
  int faces = 0;
  g.for_each_face([&](std::size_t, std::size_t, int) { ++faces; });
  EXPECT_EQ(faces, 7 * 9 * 10 + 8 * 8 * 10 + 8 * 9 * 9);
}

TEST(SignedDistance, SingleVoxel) {
  auto g = Grid::make2d(9, 9, 0.1);
  Mask m(g);
  m.at(4, 4) = 1;
  auto sd = signed_distance(m);
  EXPECT_NEAR(sd.at(5, 4), 0.1, 1e-15);
  EXPECT_NEAR(sd.at(5, 5), 0.1 * std::sqrt(2.0), 1e-15);
  EXPECT_LE(sd.at(4, 4), 0.0);
  EXPECT_LE(std::abs(sd.at(4, 4)), 0.05);
}

TEST(SignedDistance, FilledSquareCenter) {
  auto g = Grid::make2d(11, 11, 0.25);
  Mask m(g);
  for (int i = 3; i < 8; ++i)
    for (int j = 3; j < 8; ++j) m.at(i, j) = 1;
  auto sd = signed_distance(m);
  EXPECT_NEAR(sd.at(5, 5), -2 * 0.25, 1e-14);
  EXPECT_NEAR(sd.at(5, 5), brute_signed_distance(m, g.index(5, 5)), 1e-14);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (m[i]) {
      EXPECT_LE(sd[i], 0.0);
    }
  }
}

TEST(SignedDistance, MatchesBruteForceOnRandomMasks) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Grid g = trial % 2 ? Grid::make2d(12, 10, 0.3) : Grid::make3d(8, 9, 8, 0.2);
    Mask m(g);
    std::bernoulli_distribution coin(0.1 + 0.04 * trial);
    for (auto& v : m.values) v = coin(rng);
    if (count(m) == 0) m[0] = 1;
    if (count(m) == g.size()) m[0] = 0;
    auto sd = signed_distance(m);
    for (std::size_t i = 0; i < g.size(); ++i) ASSERT_NEAR(sd[i], brute_signed_distance(m, i), 1e-12);
  }
}

TEST(SignedDistance, EikonalOnDisk) {
  const int n = 96;
  const double h = 1.0 / n;
  auto g = Grid::make2d(n, n, h);
  auto m = voxelize({Ball{{0.5, 0.5, 0}, 0.2}}, g);
  auto sd = signed_distance(m);
  int checked = 0;
  for (int i = 1; i < n - 1; ++i)
    for (int j = 1; j < n - 1; ++j) {
      double r = norm(g.center(i, j) - Vec3{0.5, 0.5, 0});
      // outside the mask, where the distance has no cut locus
      if (r < 0.2 + 4 * h) continue;
      double gx = (sd.at(i + 1, j) - sd.at(i - 1, j)) / (2 * h);
      double gy = (sd.at(i, j + 1) - sd.at(i, j - 1)) / (2 * h);
      EXPECT_NEAR(std::hypot(gx, gy), 1.0, 0.1) << i << "," << j;
      ++checked;
    }
  EXPECT_GT(checked, 1000);
}

TEST(SignedDistance, RejectsEmptyAndFull) {
  auto g = Grid::make2d(8, 8, 1.0);
  Mask m(g);
  EXPECT_THROW(signed_distance(m), std::invalid_argument);
  for (auto& v : m.values) v = 1;
  EXPECT_THROW(signed_distance(m), std::invalid_argument);
}

TEST(SuperlevelSet, ConstantsAndRamp) {
  auto g = Grid::make2d(10, 8, 0.1);
  Mask wire(g);
  wire.at(4, 4) = 1;
  ScalarField u(g, 0.6);
  auto s = superlevel_set(u, 0.5, &wire);
  EXPECT_EQ(count(s), g.size() - 1);
  EXPECT_EQ(s.at(4, 4), 0);
  ScalarField w(g, 0.4);
  EXPECT_EQ(count(superlevel_set(w, 0.5)), 0u);
  // ramp u = i/9: the column i with u exactly 0.5 does not exist, i >= 5 has u >= 5/9
  ScalarField ramp(g);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 8; ++j) ramp.at(i, j) = i / 8.0;
  auto r = superlevel_set(ramp, 0.5);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 8; ++j) EXPECT_EQ(r.at(i, j), i >= 4 ? 1 : 0);
}

TEST(FieldIO, RoundTripIsBitIdentical) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(0, 1);
  auto g = Grid::make3d(9, 8, 10, 0.125, {-1, 0.5, 2});
  ScalarField u(g);
  for (auto& v : u.values) v = U(rng);
  u[0] = 0.0;
  u[1] = 1.0;
  auto p = tmp_path("roundtrip.json");
  dump_field(u, p);
  auto w = load_field(p);
  ASSERT_TRUE(w.grid.same_as(g));
  for (std::size_t i = 0; i < g.size(); ++i)
    ASSERT_EQ(std::memcmp(&u.values[i], &w.values[i], sizeof(double)), 0);
}

TEST(FieldIO, ShapeMismatchAndRange) {
  auto g = Grid::make2d(8, 8, 0.5);
  ScalarField u(g, 0.25);
  auto p = tmp_path("mismatch.json");
  dump_field(u, p);
  {
    std::ofstream raw(payload_path(p), std::ios::binary | std::ios::app);
    double extra = 0.5;
    raw.write(reinterpret_cast<const char*>(&extra), 8);
  }
  try {
    load_field(p);
    FAIL() << "expected a shape mismatch";
  } catch (const FieldIOError& e) {
    EXPECT_NE(std::string(e.what()).find("shape mismatch"), std::string::npos);
  }
  auto q = tmp_path("range.json");
  u[5] = 1.5;
  dump_field(u, q);
  EXPECT_THROW(load_field(q), FieldIOError);
  std::ofstream(tmp_path("bad.json")) << "{\"dim\": 2,";
  EXPECT_THROW(load_field(tmp_path("bad.json")), FieldIOError);
}

TEST(Resample, ReproducesLinearFunctions) {
  auto a = Grid::make2d(16, 16, 1.0 / 16);
  auto b = Grid::make2d(32, 32, 1.0 / 32, 1.0 / 64, 1.0 / 64);
  ScalarField u(a);
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto x = a.center(i);
    u[i] = 0.2 + 0.3 * x[0] + 0.4 * x[1];
  }
  auto w = resample(u, b);
  for (std::size_t i = 0; i < b.size(); ++i) {
    auto x = b.center(i);
    // interior points only: outside the source centers the value is clamped
    if (x[0] < a.center(0, 0)[0] || x[1] < a.center(0, 0)[1] || x[0] > a.center(15, 15)[0] ||
        x[1] > a.center(15, 15)[1])
      continue;
    EXPECT_NEAR(w[i], 0.2 + 0.3 * x[0] + 0.4 * x[1], 1e-12);
  }
}

TEST(WireFrame, PaddingAndComponents) {
  auto g = Grid::make2d(40, 40, 0.05);
  WireFrame W(g, {Ball{{0.5, 0.5, 0}, 0.15}, Ball{{1.5, 1.5, 0}, 0.15}});
  EXPECT_EQ(W.component_count, 2);
  EXPECT_GT(W.diameter(), std::sqrt(2.0) * 1.0);
  EXPECT_LT(W.diameter(), std::sqrt(2.0) * 1.0 + 0.3 + 1e-9);
  EXPECT_THROW(WireFrame(g, {Ball{{0.05, 1.0, 0}, 0.1}}), std::invalid_argument);
  EXPECT_THROW(WireFrame(g, {Ball{{-5, -5, 0}, 0.1}}), std::invalid_argument);
}

TEST(Tube, StraightLoopGeometry) {
  auto g = Grid::make2d(64, 64, 1.0 / 64);
  auto loop = circle_loop({0.5, 0.5, 0}, 0.3, 256);
  auto T = build_tube(g, loop, 2.5 / 64, 32, nullptr);
  EXPECT_NEAR(T.length, 2 * std::numbers::pi * 0.3, 1e-3);
  EXPECT_EQ(T.slices.size(), 32u);
  for (const auto& s : T.slices) {
    EXPECT_FALSE(s.section.empty());
    EXPECT_FALSE(s.plus.empty());
    EXPECT_FALSE(s.minus.empty());
  }
  for (std::size_t l = 0; l < T.voxels.size(); ++l) {
    double r = norm(g.center(T.voxels[l]) - Vec3{0.5, 0.5, 0});
    EXPECT_LE(std::abs(r - 0.3), 2.5 / 64 + 1e-3);
  }
  Polyline open = loop;
  open.pop_back();
  EXPECT_THROW(build_tube(g, open, 0.05, 8, nullptr), std::invalid_argument);
  EXPECT_THROW(build_tube(g, circle_loop({0.5, 0.5, 0}, 0.49, 128), 0.05, 8, nullptr), SpanningGeometryError);
  Mask wire = voxelize({Ball{{0.8, 0.5, 0}, 0.05}}, g);
  EXPECT_THROW(build_tube(g, loop, 0.04, 8, &wire), SpanningGeometryError);
}

TEST(SharpInterface, Invariants) {
  auto g = Grid::make2d(20, 20, 0.05);
  SharpInterfaceData d{Mask(g), Mask(g)};
  for (int i = 5; i < 15; ++i)
    for (int j = 5; j < 15; ++j) d.E_mask.at(i, j) = 1;
  d.K_mask = boundary_voxels(d.E_mask);
  EXPECT_EQ(d.check(), "");
  d.K_mask.at(10, 10) = 1;
  EXPECT_NE(d.check(), "");
}
