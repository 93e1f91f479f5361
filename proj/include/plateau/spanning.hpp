#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "plateau/geometry.hpp"
#include "plateau/grid.hpp"
#include "plateau/potential.hpp"

namespace plateau {

struct EssentialPartition {
  Mask region;
  std::vector<int> labels;  // 0 outside U minus S, k >= 1 for part k
  int part_count = 0;
  std::vector<std::size_t> part_sizes;  // index k-1
};

// Face-connected components of U minus S, labelled in order of their smallest voxel.
inline EssentialPartition essential_partition(const Mask& U, const Mask& S) {
  if (count(U) == 0) throw std::invalid_argument("essential_partition: empty region");
  Mask free(U.grid);
  for (std::size_t i = 0; i < U.size(); ++i) free[i] = (U[i] && !S[i]) ? 1 : 0;
  EssentialPartition P;
  P.region = U;
  P.labels = label_components(free, &P.part_count);
  P.part_sizes.assign(P.part_count, 0);
  for (int l : P.labels)
    if (l > 0) ++P.part_sizes[l - 1];
  return P;
}

// Voxels of S inside the interior of U that touch two different parts.
inline Mask ubep(const Mask& U, const Mask& S) {
  auto P = essential_partition(U, S);
  const Grid& g = U.grid;
  Mask out(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!S[i] || !U[i]) continue;
    // interior of U: all face neighbors present and in U
    auto c = g.coords(i);
    bool interior = true;
    for (int a = 0; a < g.dim; ++a)
      if (c[a] == 0 || c[a] == g.shape[a] - 1) interior = false;
    if (!interior) continue;
    int first = 0;
    bool two = false;
    g.for_each_neighbor(i, [&](std::size_t q) {
      if (!U[q]) interior = false;
      int l = P.labels[q];
      if (l == 0) return;
      if (first == 0) first = l;
      else if (l != first) two = true;
    });
    if (interior && two) out[i] = 1;
  }
  return out;
}

inline bool essentially_disconnects(const Mask& G, const Mask& K) {
  auto P = essential_partition(G, K);
  int positive = 0;
  for (auto s : P.part_sizes) positive += s > 0 ? 1 : 0;
  return positive >= 2;
}

// ---------------------------------------------------------------------------------------------

struct LoopSpanResult {
  bool pass = false;
  int slices_passed = 0;
  std::vector<int> failing_slices;
};

struct SpanResult {
  std::vector<LoopSpanResult> loops;
  bool all() const {
    return std::all_of(loops.begin(), loops.end(), [](const LoopSpanResult& l) { return l.pass; });
  }
  int failing_loops() const {
    int c = 0;
    for (auto& l : loops) c += l.pass ? 0 : 1;
    return c;
  }
};

namespace detail {

struct SliceScratch {
  std::vector<int> visit;
  std::vector<char> cut, target;
  std::vector<std::int32_t> stack;
  int stamp = 0;
  explicit SliceScratch(std::size_t n) : visit(n, 0), cut(n, 0), target(n, 0) {}
};

// True when some component of T minus (S union section) touches both sides of the slice.
inline bool slice_connected(const TubeGeometry& T, const SliceGeometry& sl,
                            const std::vector<char>& blocked, SliceScratch& w) {
  const int stamp = ++w.stamp;
  for (auto l : sl.section) w.cut[l] = 1;
  for (auto l : sl.minus) w.target[l] = 1;
  bool found = false;
  for (auto l : sl.plus) {
    if (found) break;
    if (blocked[l] || w.cut[l] || w.visit[l] == stamp) continue;
    w.visit[l] = stamp;
    w.stack.assign(1, static_cast<std::int32_t>(l));
    while (!w.stack.empty()) {
      auto p = w.stack.back();
      w.stack.pop_back();
      if (w.target[p]) {
        found = true;
        break;
      }
      for (int k = 0; k < 6; ++k) {
        int q = T.adj[p][k];
        if (q < 0 || blocked[q] || w.cut[q] || w.visit[q] == stamp) continue;
        w.visit[q] = stamp;
        w.stack.push_back(q);
      }
    }
  }
  for (auto l : sl.section) w.cut[l] = 0;
  for (auto l : sl.minus) w.target[l] = 0;
  return found;
}

}  // namespace detail

// Tube-slice spanning test of the voxel set S against every loop.
inline LoopSpanResult check_loop(const Mask& S, const TubeGeometry& T, double pass_fraction) {
  std::vector<char> blocked(T.voxels.size());
  for (std::size_t l = 0; l < T.voxels.size(); ++l) blocked[l] = S[T.voxels[l]] ? 1 : 0;
  detail::SliceScratch w(T.voxels.size());
  LoopSpanResult r;
  for (std::size_t s = 0; s < T.slices.size(); ++s) {
    bool conn = detail::slice_connected(T, T.slices[s], blocked, w);
    if (!conn) ++r.slices_passed;
    else r.failing_slices.push_back(static_cast<int>(s));
  }
  double need = pass_fraction * static_cast<double>(T.slices.size());
  r.pass = static_cast<double>(r.slices_passed) >= need - 1e-9;
  return r;
}

inline SpanResult is_spanning(const Mask& S, const SpanningGeometry& G) {
  SpanResult r;
  for (const auto& T : G.tubes) r.loops.push_back(check_loop(S, T, G.pass_fraction));
  return r;
}

// ---------------------------------------------------------------------------------------------

struct RepairFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProjectionReport {
  int rounds = 0;            // repair rounds performed
  int repaired_loops = 0;    // total loop repairs
  std::size_t raised_voxels = 0;
};

// Restores spanning of {u >= t} for every t in levels by raising u to max(u, delta) on one normal
// section per failing loop (through the max-u voxel of its tube). Repaired voxels are added to
// `pins` when given. Output is pointwise >= input.
inline ScalarField spanning_projection(const ScalarField& u, const SpanningGeometry& G, double delta,
                                       const std::vector<double>& levels, const Mask* wire,
                                       ProjectionReport* report = nullptr,
                                       std::vector<char>* pins = nullptr, int max_rounds = 3) {
  for (double t : levels)
    if (!(t > 0.5 && t <= delta))
      throw std::invalid_argument("check level must lie in (1/2, delta]");
  ScalarField out = u;
  ProjectionReport rep;
  for (int round = 0;; ++round) {
    std::set<std::size_t> failing;
    for (double t : levels) {
      Mask S = superlevel_set(out, t, wire);
      for (std::size_t l = 0; l < G.tubes.size(); ++l)
        if (!check_loop(S, G.tubes[l], G.pass_fraction).pass) failing.insert(l);
    }
    if (failing.empty()) break;
    if (round >= max_rounds)
      throw RepairFailed("spanning repair failed after " + std::to_string(max_rounds) +
                         " rounds (" + std::to_string(failing.size()) + " loops still failing)");
    ++rep.rounds;
    for (auto l : failing) {
      const auto& T = G.tubes[l];
      std::size_t best = 0;
      for (std::size_t k = 1; k < T.voxels.size(); ++k)
        if (out[T.voxels[k]] > out[T.voxels[best]]) best = k;
      // after a first failed attempt, cut at a slice parameter instead of the max voxel
      double s = round == 0 ? T.param[best] : T.slices[(round * 7 + l) % T.slices.size()].param;
      SliceGeometry sec = T.section_at(G.grid, s);
      for (auto q : sec.section) {
        std::size_t v = T.voxels[q];
        if (out[v] < delta) {
          out[v] = delta;
          ++rep.raised_voxels;
        }
        if (pins) (*pins)[v] = 1;
      }
      ++rep.repaired_loops;
    }
  }
  if (report) *report = rep;
  return out;
}

}  // namespace plateau
