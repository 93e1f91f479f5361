#pragma once

#include <algorithm>
#include <array>
#include <cstdlib>
#include <vector>

#include "plateau/geometry.hpp"
#include "plateau/grid.hpp"

namespace plateau {

// 2D binary skeleton (Zhang-Suen thinning); pixels on the grid border are never set.
inline Mask skeletonize(const Mask& m) {
  const Grid& g = m.grid;
  if (g.dim != 2) throw std::invalid_argument("skeletonize supports 2D grids only");
  const int nx = g.shape[0], ny = g.shape[1];
  Mask s = m;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1) s.at(i, j) = 0;
  // neighbours P2..P9 clockwise from north (north = +j)
  const int di[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  const int dj[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  bool changed = true;
  std::vector<std::size_t> del;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      del.clear();
      for (int i = 1; i < nx - 1; ++i)
        for (int j = 1; j < ny - 1; ++j) {
          if (!s.at(i, j)) continue;
          int p[8];
          for (int k = 0; k < 8; ++k) p[k] = s.at(i + di[k], j + dj[k]);
          int B = 0, A = 0;
          for (int k = 0; k < 8; ++k) {
            B += p[k];
            if (!p[k] && p[(k + 1) % 8]) ++A;
          }
          if (B < 2 || B > 6 || A != 1) continue;
          // P2, P4, P6, P8 = p[0], p[2], p[4], p[6]
          if (pass == 0) {
            if (p[0] && p[2] && p[4]) continue;
            if (p[2] && p[4] && p[6]) continue;
          } else {
            if (p[0] && p[2] && p[6]) continue;
            if (p[0] && p[4] && p[6]) continue;
          }
          del.push_back(g.index(i, j));
        }
      for (auto q : del) s[q] = 0;
      changed = changed || !del.empty();
    }
  }
  return s;
}

namespace detail {

// Number of 8-connected groups of set skeleton pixels on the square ring of radius r about (i, j).
inline int ring_branches(const Mask& skel, int i, int j, int r) {
  std::vector<std::array<int, 2>> ring;
  for (int a = -r; a <= r; ++a)
    for (int b = -r; b <= r; ++b)
      if (std::max(std::abs(a), std::abs(b)) == r && skel.grid.contains(i + a, j + b, 0) && skel.at(i + a, j + b))
        ring.push_back({a, b});
  std::vector<int> parent(ring.size());
  for (std::size_t k = 0; k < ring.size(); ++k) parent[k] = static_cast<int>(k);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t x = 0; x < ring.size(); ++x)
    for (std::size_t y = x + 1; y < ring.size(); ++y)
      if (std::abs(ring[x][0] - ring[y][0]) <= 1 && std::abs(ring[x][1] - ring[y][1]) <= 1)
        parent[find(static_cast<int>(x))] = find(static_cast<int>(y));
  int groups = 0;
  for (std::size_t k = 0; k < ring.size(); ++k) groups += find(static_cast<int>(k)) == static_cast<int>(k);
  return groups;
}

}  // namespace detail

// Skeleton pixels where at least three branches meet: three separate groups on the 3x3 ring, or
// on the 5x5 ring (a thinned Y often meets in a pixel cluster whose 3x3 rings see two groups).
inline std::vector<std::size_t> skeleton_junctions(const Mask& skel) {
  const Grid& g = skel.grid;
  const int nx = g.shape[0], ny = g.shape[1];
  std::vector<std::size_t> out;
  for (int i = 1; i < nx - 1; ++i)
    for (int j = 1; j < ny - 1; ++j) {
      if (!skel.at(i, j)) continue;
      if (detail::ring_branches(skel, i, j, 1) >= 3 || detail::ring_branches(skel, i, j, 2) >= 3)
        out.push_back(g.index(i, j));
    }
  return out;
}

struct TopologyReport {
  bool connected = false;
  bool touches_all = false;
  bool junction = false;
  int components = 0;
  std::size_t junction_count = 0;
};

// Components of m under the full 3^d - 1 neighbourhood (8 in 2D, 26 in 3D), the adjacency dual
// to the face adjacency used for the complement by the spanning checks.
inline int count_components_full(const Mask& m) {
  const Grid& g = m.grid;
  std::vector<char> seen(g.size(), 0);
  std::vector<std::size_t> stack;
  const int kr = g.dim == 3 ? 1 : 0;
  int n = 0;
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (!m[s] || seen[s]) continue;
    ++n;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      auto p = stack.back();
      stack.pop_back();
      auto c = g.coords(p);
      for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
          for (int d = -kr; d <= kr; ++d) {
            int i = c[0] + a, j = c[1] + b, k = c[2] + d;
            if (!g.contains(i, j, k)) continue;
            auto q = g.index(i, j, k);
            if (m[q] && !seen[q]) {
              seen[q] = 1;
              stack.push_back(q);
            }
          }
    }
  }
  return n;
}

// Topology of S against the wire frame: connectivity (full neighbourhood), contact with every wire
// component and, in 2D, a triple junction in the skeleton. A component counts as touched when a
// voxel of S lies within touch_distance of it; face adjacency when touch_distance <= h.
inline TopologyReport film_topology(const Mask& S, const WireFrame& W, double touch_distance = 0.0) {
  TopologyReport r;
  const Grid& g = S.grid;
  r.components = count_components_full(S);
  r.connected = r.components == 1;
  r.touches_all = true;
  for (int l = 1; l <= W.component_count; ++l) {
    Mask comp(g);
    for (std::size_t i = 0; i < g.size(); ++i) comp[i] = W.component_labels[i] == l;
    auto d = squared_distance_to(comp);
    const double lim = std::max(touch_distance, g.h) / g.h;
    bool hit = false;
    for (std::size_t i = 0; i < g.size() && !hit; ++i) hit = S[i] && d[i] <= lim * lim + 1e-9;
    r.touches_all = r.touches_all && hit;
  }
  if (g.dim == 2) {
    auto junctions = skeleton_junctions(skeletonize(S));
    r.junction_count = junctions.size();
    r.junction = !junctions.empty();
  }
  return r;
}

}  // namespace plateau
