#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "plateau/geometry.hpp"
#include "plateau/grid.hpp"
#include "plateau/recovery.hpp"
#include "plateau/solver.hpp"

namespace plateau {

// Concentric circle loops around c with radii r0, r0 + step, ..., <= r1.
inline void add_ring_loops(SpanningClass& sc, const Vec3& c, double r0, double r1, double step,
                           double tube_radius, double h) {
  for (double r = r0; r <= r1 + 1e-12; r += step) {
    int samples = std::max(64, static_cast<int>(std::ceil(2 * std::numbers::pi * r / (0.25 * h))));
    sc.add(circle_loop(c, r, samples), tube_radius);
  }
}

// Three disks of radius rho on the circle of radius R about the origin (one at the top).
struct TripleDisk {
  double R = 0.5;
  double rho = 0.1;
  int n = 256;
  double collar = 0.03;  // gap between a disk and its innermost loop
  std::vector<Vec3> centers() const {
    std::vector<Vec3> c;
    for (int k = 0; k < 3; ++k) {
      double a = std::numbers::pi / 2 + 2 * std::numbers::pi * k / 3;
      c.push_back({R * std::cos(a), R * std::sin(a), 0});
    }
    return c;
  }
  Grid grid() const {
    const double L = 4 * R;
    const double h = L / n;
    // vertically centered on the triangle's bounding box
    const double ymid = 0.5 * (R + (-0.5 * R));
    return Grid::make2d(n, n, h, -2 * R, ymid - 2 * R);
  }
  double steiner_length() const { return 3 * (R - rho); }
  Problem problem() const {
    Grid g = grid();
    std::vector<Shape> shapes;
    for (auto& c : centers()) shapes.push_back(Ball{c, rho});
    SpanningClass sc;
    const double h = g.h;
    const double tube = 1.5 * h;
    for (auto& c : centers()) add_ring_loops(sc, c, rho + collar, 1.1 * R, 2.5 * h, tube, h);
    return make_problem(g, std::move(shapes), sc, Potential(1));
  }
  // Steiner tree K (arms from the center to each disk) with a band E of total area ~ area.
  SharpInterfaceData steiner_data(const Grid& g, double area) const {
    std::vector<Shape> arms, band;
    const double w = 0.5 * area / steiner_length();
    for (auto& c : centers()) {
      Vec3 d = (1.0 / norm(c)) * c;
      Vec3 tip = c - rho * d;
      arms.push_back(Segment{{0, 0, 0}, tip});
      if (w > 0) band.push_back(Capsule{{0, 0, 0}, tip, w});
    }
    SharpInterfaceData D{voxelize(arms, g), band.empty() ? Mask(g) : voxelize(band, g)};
    return D;
  }
};

// Two disks of radius rho at (+-a, 0) on [-2, 2] x [-1.1, 1.1].
struct TwoDisk {
  double a = 0.9;
  double rho = 0.1;
  double h = 0.01;
  double collar = 0.03;
  Grid grid() const {
    int nx = static_cast<int>(std::lround(4.0 / h)), ny = static_cast<int>(std::lround(2.2 / h));
    return Grid::make2d(nx, ny, h, -2.0 + 0.5 * h, -1.1 + 0.5 * h);
  }
  double gap() const { return 2 * (a - rho); }
  Problem problem() const {
    Grid g = grid();
    SpanningClass sc;
    const double tube = 1.5 * h;
    for (double s : {-1.0, 1.0}) add_ring_loops(sc, {s * a, 0, 0}, rho + collar, a - 0.1, 2.5 * h, tube, h);
    return make_problem(g, {Ball{{-a, 0, 0}, rho}, Ball{{a, 0, 0}, rho}}, sc, Potential(1));
  }
};

// Inner disk of radius a inside a ring wall a' = b; loops are the circles in between.
struct Annulus {
  double a = 0.2;
  double b = 0.8;
  int n = 192;
  Grid grid() const {
    const double L = 2 * (b + 0.15);
    const double h = L / n;
    return Grid::make2d(n, n, h, -0.5 * L + 0.5 * h, -0.5 * L + 0.5 * h);
  }
  Problem problem() const {
    Grid g = grid();
    Mask wire = voxelize({Ball{{0, 0, 0}, a}}, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto x = g.center(i);
      double r = std::hypot(x[0], x[1]);
      if (r >= b && r <= b + 0.1) wire[i] = 1;
    }
    Problem P;
    P.wire = WireFrame(std::move(wire));
    SpanningClass sc;
    add_ring_loops(sc, {0, 0, 0}, a + 0.05, b - 0.05, 2.5 * g.h, 1.5 * g.h, g.h);
    P.span = realize(sc, g, &P.wire.mask);
    P.W = Potential(1);
    return P;
  }
};

}  // namespace plateau
