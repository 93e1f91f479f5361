#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "plateau/grid.hpp"

namespace plateau {

// ---------------------------------------------------------------------------------------------
// Exact Euclidean distance transform (lower envelope of parabolas, one pass per axis).

namespace detail {

constexpr double kFar = 1e20;

// 1D squared distance transform of sampled function f (Felzenszwalb-Huttenlocher).
inline void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  const double inf = std::numeric_limits<double>::infinity();
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace detail

// Squared distance, in voxel units, from each voxel center to the nearest voxel with m = 1.
inline std::vector<double> squared_distance_to(const Mask& m) {
  const Grid& g = m.grid;
  std::vector<double> d(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) d[i] = m[i] ? 0.0 : detail::kFar;
  std::vector<double> f, out;
  std::vector<int> v;
  std::vector<double> z;
  for (int axis = 0; axis < g.dim; ++axis) {
    const int n = g.shape[axis];
    const std::size_t s = g.stride(axis);
    f.resize(n);
    out.resize(n);
    for (std::size_t base = 0; base < g.size(); ++base) {
      auto c = g.coords(base);
      if (c[axis] != 0) continue;
      for (int q = 0; q < n; ++q) f[q] = d[base + q * s];
      detail::edt_1d(f.data(), out.data(), n, v, z);
      for (int q = 0; q < n; ++q) d[base + q * s] = out[q];
    }
  }
  return d;
}

// Signed distance on voxel centers, negative inside. Outside voxels: distance to the nearest
// mask center. Mask voxels: -(d_in - h) where d_in is the distance to the nearest non-mask center,
// so boundary voxels of the mask sit at 0 and the zero level runs through their centers.
inline Field<double> signed_distance(const Mask& mask) {
  const Grid& g = mask.grid;
  std::size_t c = count(mask);
  if (c == 0) throw std::invalid_argument("signed_distance: empty mask");
  if (c == g.size()) throw std::invalid_argument("signed_distance: full mask");
  auto dout = squared_distance_to(mask);
  auto din = squared_distance_to(mask_not(mask));
  Field<double> sd(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (mask[i]) sd[i] = -(std::sqrt(din[i]) - 1.0) * g.h;
    else sd[i] = std::sqrt(dout[i]) * g.h;
  }
  return sd;
}

// ---------------------------------------------------------------------------------------------
// Analytic primitives.

inline double segment_distance(const Vec3& x, const Vec3& a, const Vec3& b, double* param = nullptr) {
  Vec3 ab = b - a;
  double L2 = dot(ab, ab);
  double t = L2 > 0 ? std::clamp(dot(x - a, ab) / L2, 0.0, 1.0) : 0.0;
  if (param) *param = t;
  return norm(x - (a + t * ab));
}

struct Ball {
  Vec3 center;
  double radius;
};
struct Capsule {
  Vec3 a, b;
  double radius;
};
struct Box {
  Vec3 lo, hi;
};
// Digital segment: voxel centers within the naive-line slab of the segment (face-separating).
struct Segment {
  Vec3 a, b;
};
// Planar disk patch in 3D, digitized as a naive plane.
struct DiskPatch {
  Vec3 center, normal;
  double radius;
};

using Shape = std::variant<Ball, Capsule, Box, Segment, DiskPatch>;

inline bool shape_contains(const Shape& s, const Vec3& x, const Grid& g) {
  const double h = g.h;
  return std::visit(
      [&](const auto& p) -> bool {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return norm(x - p.center) <= p.radius;
        } else if constexpr (std::is_same_v<T, Capsule>) {
          return segment_distance(x, p.a, p.b) <= p.radius;
        } else if constexpr (std::is_same_v<T, Box>) {
          for (int a = 0; a < g.dim; ++a)
            if (x[a] < p.lo[a] || x[a] > p.hi[a]) return false;
          return true;
        } else if constexpr (std::is_same_v<T, Segment>) {
          Vec3 d = p.b - p.a;
          double L = norm(d);
          if (L == 0) return false;
          Vec3 t = (1.0 / L) * d;
          double s = dot(x - p.a, t);
          if (s < -1e-12 * h || s > L + 1e-12 * h) return false;
          // in-plane normal (2D)
          Vec3 n{-t[1], t[0], 0.0};
          double w = std::max(std::abs(n[0]), std::abs(n[1])) * h;
          double off = dot(x - p.a, n);
          return off >= -0.5 * w && off < 0.5 * w;
        } else {
          double nn = norm(p.normal);
          Vec3 n = (1.0 / nn) * p.normal;
          double w = std::max({std::abs(n[0]), std::abs(n[1]), std::abs(n[2])}) * h;
          double off = dot(x - p.center, n);
          if (!(off >= -0.5 * w && off < 0.5 * w)) return false;
          Vec3 inplane = (x - p.center) - off * n;
          return norm(inplane) <= p.radius;
        }
      },
      s);
}

inline Mask voxelize(const std::vector<Shape>& shapes, const Grid& g) {
  Mask m(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec3 x = g.center(i);
    for (const auto& s : shapes)
      if (shape_contains(s, x, g)) {
        m[i] = 1;
        break;
      }
  }
  return m;
}

// Face-connected component labels (0 = background), numbered in order of the smallest voxel.
inline std::vector<int> label_components(const Mask& m, int* count_out = nullptr) {
  std::vector<int> lab(m.size(), 0);
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i] || lab[i]) continue;
    ++next;
    lab[i] = next;
    stack.push_back(i);
    while (!stack.empty()) {
      std::size_t p = stack.back();
      stack.pop_back();
      m.grid.for_each_neighbor(p, [&](std::size_t q) {
        if (m[q] && !lab[q]) {
          lab[q] = next;
          stack.push_back(q);
        }
      });
    }
  }
  if (count_out) *count_out = next;
  return lab;
}

// ---------------------------------------------------------------------------------------------

struct WireFrame {
  Mask mask;
  std::vector<Shape> shapes;
  std::vector<int> component_labels;
  int component_count = 0;

  WireFrame() = default;
  WireFrame(const Grid& g, std::vector<Shape> s) : mask(voxelize(s, g)), shapes(std::move(s)) {
    finish();
  }
  explicit WireFrame(Mask m) : mask(std::move(m)) { finish(); }

  const Grid& grid() const { return mask.grid; }

  // Largest distance between two wire voxel centers.
  double diameter() const {
    const Grid& g = mask.grid;
    std::vector<Vec3> pts;
    // extreme voxels of every grid line along axis 0 suffice for the diameter
    for (int j = 0; j < g.shape[1]; ++j)
      for (int k = 0; k < g.shape[2]; ++k) {
        int lo = -1, hi = -1;
        for (int i = 0; i < g.shape[0]; ++i)
          if (mask.at(i, j, k)) {
            if (lo < 0) lo = i;
            hi = i;
          }
        if (lo >= 0) {
          pts.push_back(g.center(lo, j, k));
          if (hi != lo) pts.push_back(g.center(hi, j, k));
        }
      }
    double d = 0.0;
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b) d = std::max(d, norm(pts[a] - pts[b]));
    return d;
  }

 private:
  void finish() {
    if (count(mask) == 0) throw std::invalid_argument("wire frame is empty");
    const Grid& g = mask.grid;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!mask[i]) continue;
      auto c = g.coords(i);
      for (int a = 0; a < g.dim; ++a)
        if (c[a] < 3 || c[a] > g.shape[a] - 4)
          throw std::invalid_argument("wire frame must keep a padding of 3 voxels from the grid boundary");
    }
    component_labels = label_components(mask, &component_count);
  }
};

// ---------------------------------------------------------------------------------------------
// Loops, tubes and slices.

using Polyline = std::vector<Vec3>;

inline Polyline circle_loop(const Vec3& c, double r, int samples, Vec3 normal = {0, 0, 1}) {
  Vec3 n = (1.0 / norm(normal)) * normal;
  Vec3 a = std::abs(n[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  a = a - dot(a, n) * n;
  a = (1.0 / norm(a)) * a;
  Vec3 b{n[1] * a[2] - n[2] * a[1], n[2] * a[0] - n[0] * a[2], n[0] * a[1] - n[1] * a[0]};
  Polyline p;
  for (int i = 0; i <= samples; ++i) {
    double t = 2.0 * std::numbers::pi * (i % samples) / samples;
    p.push_back(c + r * std::cos(t) * a + r * std::sin(t) * b);
  }
  return p;
}

// Rectangle with rounded corners in the xy-plane, counterclockwise.
inline Polyline rounded_rect_loop(const Vec3& c, double hx, double hy, double rc, int samples) {
  rc = std::min({rc, hx, hy});
  double sx = hx - rc, sy = hy - rc;
  double per = 4 * (sx + sy) + 2 * std::numbers::pi * rc;
  Polyline p;
  auto at = [&](double s) -> Vec3 {
    // walk: right edge up, top-right arc, top edge left, ...
    const double pi = std::numbers::pi;
    double segs[8] = {2 * sy, pi * rc / 2, 2 * sx, pi * rc / 2, 2 * sy, pi * rc / 2, 2 * sx, pi * rc / 2};
    int k = 0;
    while (k < 7 && s > segs[k]) s -= segs[k++];
    double f = segs[k] > 0 ? s / segs[k] : 0.0;
    switch (k) {
      case 0: return c + Vec3{hx, -sy + 2 * sy * f, 0};
      case 1: { double t = f * pi / 2; return c + Vec3{sx + rc * std::cos(t), sy + rc * std::sin(t), 0}; }
      case 2: return c + Vec3{sx - 2 * sx * f, hy, 0};
      case 3: { double t = pi / 2 + f * pi / 2; return c + Vec3{-sx + rc * std::cos(t), sy + rc * std::sin(t), 0}; }
      case 4: return c + Vec3{-hx, sy - 2 * sy * f, 0};
      case 5: { double t = pi + f * pi / 2; return c + Vec3{-sx + rc * std::cos(t), -sy + rc * std::sin(t), 0}; }
      case 6: return c + Vec3{-sx + 2 * sx * f, -hy, 0};
      default: { double t = 1.5 * pi + f * pi / 2; return c + Vec3{sx + rc * std::cos(t), -sy + rc * std::sin(t), 0}; }
    }
  };
  for (int i = 0; i < samples; ++i) p.push_back(at(per * i / samples));
  p.push_back(p.front());
  return p;
}

struct SpanningClass {
  std::vector<Polyline> loops;
  std::vector<double> tube_radius;
  int slices_per_loop = 32;
  double slice_pass_fraction = 0.9;

  void add(Polyline p, double r) {
    loops.push_back(std::move(p));
    tube_radius.push_back(r);
  }
};

struct SliceGeometry {
  double param = 0.0;
  std::vector<std::uint32_t> section;  // local tube indices
  std::vector<std::uint32_t> plus, minus;
};

// Voxel realization of one loop: tube voxels, local adjacency and the slice family.
struct TubeGeometry {
  std::vector<std::size_t> voxels;              // global indices, increasing
  std::vector<double> param;                    // arclength of the nearest loop point
  std::vector<std::array<std::int32_t, 6>> adj;  // local face neighbors, -1 padded
  std::vector<SliceGeometry> slices;
  double length = 0.0;
  double radius = 0.0;
  Polyline loop;
  std::vector<double> cum;  // cumulative arclength at loop vertices

  Vec3 point_at(double s, Vec3* tangent = nullptr) const {
    s = std::fmod(s, length);
    if (s < 0) s += length;
    std::size_t k = std::upper_bound(cum.begin(), cum.end(), s) - cum.begin();
    k = std::clamp<std::size_t>(k, 1, cum.size() - 1) - 1;
    Vec3 d = loop[k + 1] - loop[k];
    double L = norm(d);
    double f = L > 0 ? (s - cum[k]) / L : 0.0;
    if (tangent) *tangent = (1.0 / L) * d;
    return loop[k] + f * d;
  }

  // Normal digital section of the tube at arclength s, with its two adjacent sides.
  SliceGeometry section_at(const Grid& g, double s) const {
    SliceGeometry sl;
    sl.param = s;
    Vec3 t;
    Vec3 c = point_at(s, &t);
    double w = std::max({std::abs(t[0]), std::abs(t[1]), std::abs(t[2])}) * g.h;
    std::vector<char> in(voxels.size(), 0);
    for (std::size_t l = 0; l < voxels.size(); ++l) {
      Vec3 x = g.center(voxels[l]);
      Vec3 r = x - c;
      double off = dot(r, t);
      if (!(off >= -0.5 * w && off < 0.5 * w)) continue;
      if (norm(r - off * t) > radius + g.h) continue;
      in[l] = 1;
      sl.section.push_back(static_cast<std::uint32_t>(l));
    }
    std::vector<char> seen(voxels.size(), 0);
    for (auto l : sl.section)
      for (int k = 0; k < 6; ++k) {
        int q = adj[l][k];
        if (q < 0 || in[q] || seen[q]) continue;
        seen[q] = 1;
        Vec3 r = g.center(voxels[q]) - c;
        if (norm(r) > radius + 3.0 * g.h) continue;
        (dot(r, t) > 0 ? sl.plus : sl.minus).push_back(static_cast<std::uint32_t>(q));
      }
    return sl;
  }
};

struct SpanningGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline TubeGeometry build_tube(const Grid& g, const Polyline& loop, double radius, int slices,
                               const Mask* wire) {
  if (loop.size() < 4) throw std::invalid_argument("loop needs at least 3 distinct vertices");
  if (norm(loop.front() - loop.back()) > 1e-9)
    throw std::invalid_argument("loop polyline must be closed (first vertex == last vertex)");
  TubeGeometry T;
  T.loop = loop;
  T.radius = radius;
  T.cum.assign(loop.size(), 0.0);
  for (std::size_t k = 1; k < loop.size(); ++k) T.cum[k] = T.cum[k - 1] + norm(loop[k] - loop[k - 1]);
  T.length = T.cum.back();
  Vec3 lo = loop[0], hi = loop[0];
  for (auto& p : loop)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  std::array<int, 3> ilo{0, 0, 0}, ihi{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) {
    ilo[a] = std::max(0, static_cast<int>(std::floor((lo[a] - radius - g.origin[a]) / g.h)) - 1);
    ihi[a] = std::min(g.shape[a] - 1, static_cast<int>(std::ceil((hi[a] + radius - g.origin[a]) / g.h)) + 1);
  }
  std::vector<std::pair<std::size_t, double>> vox;
  for (int i = ilo[0]; i <= ihi[0]; ++i)
    for (int j = ilo[1]; j <= ihi[1]; ++j)
      for (int k = ilo[2]; k <= ihi[2]; ++k) {
        Vec3 x = g.center(i, j, k);
        double best = std::numeric_limits<double>::infinity(), bs = 0.0;
        for (std::size_t s = 0; s + 1 < loop.size(); ++s) {
          double f;
          double d = segment_distance(x, loop[s], loop[s + 1], &f);
          if (d < best) {
            best = d;
            bs = T.cum[s] + f * (T.cum[s + 1] - T.cum[s]);
          }
        }
        if (best <= radius) vox.push_back({g.index(i, j, k), bs});
      }
  std::sort(vox.begin(), vox.end());
  for (auto& [idx, s] : vox) {
    auto c = g.coords(idx);
    for (int a = 0; a < g.dim; ++a)
      if (c[a] == 0 || c[a] == g.shape[a] - 1)
        throw SpanningGeometryError("tube leaves the grid");
    if (wire && (*wire)[idx]) throw SpanningGeometryError("tube intersects the wire frame");
    T.voxels.push_back(idx);
    T.param.push_back(s);
  }
  if (T.voxels.empty()) throw SpanningGeometryError("tube contains no voxels (radius below h/2?)");
  T.adj.assign(T.voxels.size(), {-1, -1, -1, -1, -1, -1});
  for (std::size_t l = 0; l < T.voxels.size(); ++l) {
    int k = 0;
    g.for_each_neighbor(T.voxels[l], [&](std::size_t q) {
      auto it = std::lower_bound(T.voxels.begin(), T.voxels.end(), q);
      if (it != T.voxels.end() && *it == q) T.adj[l][k++] = static_cast<std::int32_t>(it - T.voxels.begin());
    });
  }
  for (int s = 0; s < slices; ++s) T.slices.push_back(T.section_at(g, T.length * s / slices));
  return T;
}

// Clearance of each tube from the wire frame, in units of length (distance from tube voxels
// to the nearest wire voxel center).
inline double tube_clearance(const TubeGeometry& T, const std::vector<double>& wire_sqdist, double h) {
  double m = std::numeric_limits<double>::infinity();
  for (auto v : T.voxels) m = std::min(m, std::sqrt(wire_sqdist[v]) * h);
  return m;
}

struct SpanningGeometry {
  std::vector<TubeGeometry> tubes;
  double pass_fraction = 0.9;
  Grid grid;
};

inline SpanningGeometry realize(const SpanningClass& sc, const Grid& g, const Mask* wire) {
  if (sc.loops.size() != sc.tube_radius.size()) throw std::invalid_argument("one tube radius per loop required");
  if (sc.slices_per_loop < 1) throw std::invalid_argument("slices_per_loop must be positive");
  SpanningGeometry G;
  G.grid = g;
  G.pass_fraction = sc.slice_pass_fraction;
  for (std::size_t l = 0; l < sc.loops.size(); ++l)
    G.tubes.push_back(build_tube(g, sc.loops[l], sc.tube_radius[l], sc.slices_per_loop, wire));
  return G;
}

// ---------------------------------------------------------------------------------------------

// Sharp interface data (K, E): K a codimension-one voxel set, E an open region.
struct SharpInterfaceData {
  Mask K_mask;
  Mask E_mask;

  // Discrete invariants: boundary(E) within dilation(K,1) and K disjoint from interior(E).
  // Returns an empty string when both hold.
  std::string check() const {
    Mask bE = boundary_voxels(E_mask);
    Mask dK = dilate(K_mask, 1);
    for (std::size_t i = 0; i < bE.size(); ++i)
      if (bE[i] && !dK[i] && count(K_mask) > 0)
        return "boundary of E not contained in the dilation of K";
    for (std::size_t i = 0; i < E_mask.size(); ++i)
      if (K_mask[i] && E_mask[i] && !bE[i]) return "K meets the interior of E";
    return {};
  }
};

}  // namespace plateau
