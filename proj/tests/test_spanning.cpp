#include <gtest/gtest.h>

#include <deque>
#include <map>
#include <random>
#include <set>

#include "plateau/spanning.hpp"

using namespace plateau;

namespace {

Mask disk_mask(const Grid& g, double ci, double cj, double r) {
  Mask m(g);
  for (int i = 0; i < g.shape[0]; ++i)
    for (int j = 0; j < g.shape[1]; ++j)
      if ((i - ci) * (i - ci) + (j - cj) * (j - cj) <= r * r) m.at(i, j) = 1;
  return m;
}

// Reference flood fill on a 2D (i,j) array, breadth first, labels by first voxel in
// row-major scan order.
std::vector<int> oracle_labels(const Mask& U, const Mask& S, int* parts) {
  const int nx = U.grid.shape[0], ny = U.grid.shape[1];
  std::vector<int> lab(nx * ny, 0);
  auto free = [&](int i, int j) { return U.at(i, j) && !S.at(i, j); };
  int next = 0;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      if (!free(i, j) || lab[i * ny + j]) continue;
      ++next;
      std::deque<std::pair<int, int>> q{{i, j}};
      lab[i * ny + j] = next;
      while (!q.empty()) {
        auto [a, b] = q.front();
        q.pop_front();
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          int x = a + di[k], y = b + dj[k];
          if (x < 0 || y < 0 || x >= nx || y >= ny || !free(x, y) || lab[x * ny + y]) continue;
          lab[x * ny + y] = next;
          q.push_back({x, y});
        }
      }
    }
  *parts = next;
  return lab;
}

std::vector<char> oracle_ubep(const Mask& U, const Mask& S) {
  const int nx = U.grid.shape[0], ny = U.grid.shape[1];
  int parts;
  auto lab = oracle_labels(U, S, &parts);
  std::vector<char> out(nx * ny, 0);
  for (int i = 1; i + 1 < nx; ++i)
    for (int j = 1; j + 1 < ny; ++j) {
      if (!S.at(i, j) || !U.at(i, j)) continue;
      if (!U.at(i + 1, j) || !U.at(i - 1, j) || !U.at(i, j + 1) || !U.at(i, j - 1)) continue;
      std::set<int> seen;
      for (int l : {lab[(i + 1) * ny + j], lab[(i - 1) * ny + j], lab[i * ny + j + 1], lab[i * ny + j - 1]})
        if (l > 0) seen.insert(l);
      out[i * ny + j] = seen.size() >= 2;
    }
  return out;
}

// Independent slice test: BFS over tube voxels held in a std::set.
bool oracle_slice_passes(const Grid& g, const TubeGeometry& T, const SliceGeometry& sl, const Mask& S) {
  std::set<std::size_t> open(T.voxels.begin(), T.voxels.end());
  for (auto l : sl.section) open.erase(T.voxels[l]);
  for (auto v : T.voxels)
    if (S[v]) open.erase(v);
  std::set<std::size_t> minus;
  for (auto l : sl.minus) minus.insert(T.voxels[l]);
  std::set<std::size_t> seen;
  std::deque<std::size_t> q;
  for (auto l : sl.plus)
    if (open.count(T.voxels[l])) {
      q.push_back(T.voxels[l]);
      seen.insert(T.voxels[l]);
    }
  while (!q.empty()) {
    auto p = q.front();
    q.pop_front();
    if (minus.count(p)) return false;
    g.for_each_neighbor(p, [&](std::size_t r) {
      if (open.count(r) && !seen.count(r)) {
        seen.insert(r);
        q.push_back(r);
      }
    });
  }
  return true;
}

// Rounded rectangle in the x-z plane at height y0.
Polyline xz_loop(double cx, double y0, double cz, double hx, double hz, double rc) {
  auto p = rounded_rect_loop({cx, cz, 0}, hx, hz, rc, 400);
  for (auto& x : p) x = {x[0], y0, x[1]};
  return p;
}

struct SlabTube {
  Grid g = Grid::make3d(20, 9, 40, 1.0);
  SpanningClass sc;
  SpanningGeometry G;
  SlabTube() {
    sc.add(xz_loop(9.5, 4.0, 19.5, 5.0, 15.0, 3.0), 1.5);
    G = realize(sc, g, nullptr);
  }
};

SpanningGeometry circle_tube(const Grid& g, double r_tube = 2.0) {
  SpanningClass sc;
  double c = 0.5 * (g.shape[0] - 1) * g.h;
  sc.add(circle_loop({c, c, 0}, 0.3 * g.shape[0] * g.h, 256), r_tube * g.h);
  return realize(sc, g, nullptr);
}

}  // namespace

TEST(EssentialPartition, DiskExamples) {
  auto g = Grid::make2d(13, 13, 1.0);
  Mask U = disk_mask(g, 6, 6, 5.5);
  Mask diam(g), half(g), none(g);
  for (int i = 0; i < 13; ++i) diam.at(i, 6) = U.at(i, 6);
  for (int i = 0; i <= 6; ++i) half.at(i, 6) = U.at(i, 6);
  EXPECT_EQ(essential_partition(U, diam).part_count, 2);
  EXPECT_EQ(essential_partition(U, none).part_count, 1);
  EXPECT_EQ(essential_partition(U, half).part_count, 1);
  EXPECT_THROW(essential_partition(none, none), std::invalid_argument);
}

TEST(Ubep, DiskExamples) {
  auto g = Grid::make2d(13, 13, 1.0);
  Mask U = disk_mask(g, 6, 6, 5.5);
  Mask diam(g), half(g), none(g);
  for (int i = 0; i < 13; ++i) diam.at(i, 6) = U.at(i, 6);
  for (int i = 0; i <= 6; ++i) half.at(i, 6) = U.at(i, 6);
  Mask b = ubep(U, diam);
  // the row spans i = 1..11; its two end voxels touch the outside of U
  EXPECT_EQ(count(b), 9u);
  for (int i = 2; i <= 10; ++i) EXPECT_EQ(b.at(i, 6), 1);
  EXPECT_EQ(b.at(1, 6), 0);
  EXPECT_EQ(b.at(11, 6), 0);
  EXPECT_EQ(count(ubep(U, half)), 0u);
  EXPECT_EQ(count(ubep(U, none)), 0u);
}

TEST(EssentialDisconnection, MidlineExamples) {
  auto g = Grid::make2d(12, 12, 1.0);
  Mask G(g, 1), K(g);
  EXPECT_FALSE(essentially_disconnects(G, K));
  for (int j = 0; j < 12; ++j) K.at(6, j) = 1;
  EXPECT_TRUE(essentially_disconnects(G, K));
  K.at(6, 5) = 0;
  EXPECT_FALSE(essentially_disconnects(G, K));
}

TEST(EssentialPartition, AgreesWithOracleOnRandomInstances) {
  std::mt19937 rng(2024);
  auto g = Grid::make2d(16, 16, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::uniform_real_distribution<double> P(0.0, 1.0);
    double pu = 0.5 + 0.5 * P(rng), ps = 0.4 * P(rng);
    Mask U(g), S(g);
    for (auto& v : U.values) v = P(rng) < pu;
    for (auto& v : S.values) v = P(rng) < ps;
    if (count(U) == 0) U[0] = 1;
    int parts;
    auto lab = oracle_labels(U, S, &parts);
    auto E = essential_partition(U, S);
    ASSERT_EQ(E.part_count, parts);
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) ASSERT_EQ(E.labels[g.index(i, j)], lab[i * 16 + j]);
    auto b = ubep(U, S);
    auto ob = oracle_ubep(U, S);
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) {
        ASSERT_EQ(b.at(i, j), ob[i * 16 + j]);
        if (b.at(i, j)) {
          ASSERT_TRUE(S.at(i, j));
        }
      }
    ASSERT_EQ(count(ubep(U, Mask(g))), 0u);
  }
}

TEST(IsSpanning, PatchAcrossSlabTube) {
  SlabTube t;
  ASSERT_EQ(t.G.tubes.size(), 1u);
  const auto& T = t.G.tubes[0];
  Mask patch = voxelize({DiskPatch{{14.5, 4.0, 19.5}, {0, 0, 1}, 3.0}}, t.g);
  auto r = is_spanning(patch, t.G);
  EXPECT_TRUE(r.all());
  // a slice lying inside the patch itself removes only one layer and cannot pass
  for (std::size_t s = 0; s < T.slices.size(); ++s) {
    const auto& sl = T.slices[s];
    bool inside = std::any_of(sl.section.begin(), sl.section.end(), [&](auto l) { return patch[T.voxels[l]] != 0; });
    bool pass = oracle_slice_passes(t.g, T, sl, patch);
    EXPECT_EQ(pass, !inside) << s;
  }
  EXPECT_GE(r.loops[0].slices_passed, 31);
}

TEST(IsSpanning, EmptySetFailsEverySlice) {
  SlabTube t;
  auto r = is_spanning(Mask(t.g), t.G);
  EXPECT_FALSE(r.all());
  EXPECT_EQ(r.loops[0].slices_passed, 0);
  EXPECT_EQ(r.loops[0].failing_slices.size(), 32u);
}

TEST(IsSpanning, HalfPatchFails) {
  SlabTube t;
  const auto& T = t.G.tubes[0];
  Mask patch = voxelize({DiskPatch{{14.5, 4.0, 19.5}, {0, 0, 1}, 3.0}}, t.g);
  for (std::size_t i = 0; i < patch.size(); ++i)
    if (t.g.center(i)[0] < 14.5) patch[i] = 0;
  ASSERT_GT(count(patch), 0u);
  auto r = is_spanning(patch, t.G);
  EXPECT_FALSE(r.all());
  for (std::size_t s = 0; s < T.slices.size(); ++s) {
    bool pass = std::find(r.loops[0].failing_slices.begin(), r.loops[0].failing_slices.end(),
                          static_cast<int>(s)) == r.loops[0].failing_slices.end();
    EXPECT_EQ(pass, oracle_slice_passes(t.g, T, T.slices[s], patch));
  }
}

TEST(IsSpanning, TubeTouchingWireIsRejected) {
  SlabTube t;
  Mask wire = voxelize({Ball{{14.5, 4.0, 19.5}, 1.0}}, t.g);
  EXPECT_THROW(realize(t.sc, t.g, &wire), SpanningGeometryError);
}

TEST(IsSpanning, MonotoneUnderInclusion) {
  auto g = Grid::make2d(40, 40, 1.0);
  auto G = circle_tube(g);
  const auto& T = G.tubes[0];
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> P(0.0, 1.0);
  int spanning_seen = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Mask S1(g);
    // a radial bar through the tube with random holes, plus scattered noise
    double ang = 2 * std::numbers::pi * P(rng);
    double hole = 0.3 * P(rng);
    for (auto v : T.voxels) {
      Vec3 x = g.center(v) - Vec3{19.5, 19.5, 0};
      double a = std::atan2(x[1], x[0]);
      double d = std::abs(std::remainder(a - ang, 2 * std::numbers::pi)) * norm(x);
      if (d < 1.0 && P(rng) >= hole) S1[v] = 1;
      if (P(rng) < 0.05) S1[v] = 1;
    }
    Mask S2 = S1;
    for (auto v : T.voxels)
      if (P(rng) < 0.1) S2[v] = 1;
    auto r1 = is_spanning(S1, G), r2 = is_spanning(S2, G);
    if (r1.all()) {
      ++spanning_seen;
      EXPECT_TRUE(r2.all());
    }
    EXPECT_GE(r2.loops[0].slices_passed, r1.loops[0].slices_passed);
    for (const auto& sl : T.slices) {
      bool fast = !detail::slice_connected(T, sl, [&] {
        std::vector<char> b(T.voxels.size());
        for (std::size_t l = 0; l < T.voxels.size(); ++l) b[l] = S1[T.voxels[l]];
        return b;
      }(), *std::make_unique<detail::SliceScratch>(T.voxels.size()));
      ASSERT_EQ(fast, oracle_slice_passes(g, T, sl, S1));
    }
  }
  EXPECT_GT(spanning_seen, 20);
}

TEST(SpanningProjection, RepairsZeroFieldOnStraightTube) {
  SlabTube t;
  ScalarField u(t.g, 0.0);
  ProjectionReport rep;
  std::vector<char> pins(t.g.size(), 0);
  auto w = spanning_projection(u, t.G, 0.9, {0.7}, nullptr, &rep, &pins);
  EXPECT_TRUE(is_spanning(superlevel_set(w, 0.7), t.G).all());
  EXPECT_EQ(rep.rounds, 1);
  std::size_t max_section = 0;
  for (const auto& sl : t.G.tubes[0].slices) max_section = std::max(max_section, sl.section.size());
  EXPECT_GT(rep.raised_voxels, 0u);
  EXPECT_LE(rep.raised_voxels, max_section);
  std::size_t pinned = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_GE(w[i], u[i]);
    pinned += pins[i];
    if (w[i] > 0) {
      EXPECT_TRUE(pins[i]);
      EXPECT_DOUBLE_EQ(w[i], 0.9);
    }
  }
  EXPECT_EQ(pinned, rep.raised_voxels);
  Potential W(2);
  double dv = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) dv += W.V(w[i]).value - W.V(u[i]).value;
  EXPECT_LE(dv, 32.0 * max_section * t.g.cell_measure() * W.V(1.0).value);
}

TEST(SpanningProjection, MonotoneAndIdempotent) {
  auto g = Grid::make2d(40, 40, 1.0);
  auto G = circle_tube(g);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> P(0.0, 0.8);
  for (int trial = 0; trial < 20; ++trial) {
    ScalarField u(g);
    for (auto& v : u.values) v = P(rng);
    ProjectionReport rep;
    auto w = spanning_projection(u, G, 0.95, {0.6, 0.8}, nullptr, &rep);
    for (std::size_t i = 0; i < u.size(); ++i) ASSERT_GE(w[i], u[i]);
    ProjectionReport rep2;
    auto w2 = spanning_projection(w, G, 0.95, {0.6, 0.8}, nullptr, &rep2);
    EXPECT_EQ(rep2.rounds, 0);
    EXPECT_EQ(w2.values, w.values);
  }
  EXPECT_THROW(spanning_projection(ScalarField(g), G, 0.9, {0.95}, nullptr), std::invalid_argument);
  EXPECT_THROW(spanning_projection(ScalarField(g), G, 0.9, {0.5}, nullptr), std::invalid_argument);
}
