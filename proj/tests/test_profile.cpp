#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "plateau/profile.hpp"

using namespace plateau;

namespace {
double sup_error(const Profile1D& p, double (*f)(double), double lo, double hi) {
  double e = 0.0;
  for (std::size_t i = 0; i < p.t.size(); ++i)
    if (p.t[i] >= lo - 1e-12 && p.t[i] <= hi + 1e-12) e = std::max(e, std::abs(p.value[i] - f(p.t[i])));
  return e;
}
}  // namespace

TEST(Profile, EtaMatchesLogistic) {
  Potential W(1);
  auto p = solve_profile(W, ProfileKind::eta, -5, 5, 1e-3);
  EXPECT_DOUBLE_EQ(p(0.0), 0.5);
  EXPECT_LE(sup_error(p, eta_closed_form, -5, 5), 1e-7);
  // 1/(1+e^6) evaluated independently at 30 digits
  EXPECT_NEAR(p(1.0), 0.00247262315663477433405990737225, 1e-9);
}

TEST(Profile, QAndPMatchClosedForms) {
  Potential W(1);
  auto q = solve_profile(W, ProfileKind::q, -5, 5, 1e-3);
  EXPECT_DOUBLE_EQ(q(0.0), 0.25);
  EXPECT_LE(sup_error(q, q_closed_form, -5, 5), 1e-7);
  auto p = solve_profile(W, ProfileKind::p, -5, 5, 1e-3);
  EXPECT_DOUBLE_EQ(p(0.0), 0.25);
  EXPECT_LE(sup_error(p, p_closed_form, -5, 5), 1e-7);
}

TEST(Profile, Errors) {
  Potential W(1);
  EXPECT_THROW(solve_profile(W, ProfileKind::eta, -5, 5, 0.01), std::invalid_argument);
  EXPECT_THROW(solve_profile(W, ProfileKind::eta, 1, 5, 1e-3), std::invalid_argument);
  EXPECT_THROW(build_truncated_profile(W, 3.0, 1.0), std::invalid_argument);
}

TEST(Profile, MonotoneAndBounded) {
  Potential W(1);
  for (auto kind : {ProfileKind::eta, ProfileKind::q, ProfileKind::p}) {
    auto p = solve_profile(W, kind, -6, 6, 1e-3);
    double s = kind == ProfileKind::q ? 1.0 : -1.0;
    for (std::size_t i = 0; i + 1 < p.value.size(); ++i) {
      EXPECT_GE(p.value[i], 0.0);
      EXPECT_LE(p.value[i], 1.0);
      EXPECT_GE(s * (p.value[i + 1] - p.value[i]), 0.0);
    }
  }
}

TEST(Profile, OdeResidual) {
  Potential W(1);
  for (auto kind : {ProfileKind::eta, ProfileKind::q, ProfileKind::p}) {
    auto p = solve_profile(W, kind, -5, 5, 1e-3);
    double s = kind == ProfileKind::q ? 1.0 : -1.0;
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < p.value.size(); ++i) {
      double d = (p.value[i + 1] - p.value[i - 1]) / (2 * p.spacing);
      worst = std::max(worst, std::abs(d - s * W.sqrtW(p.value[i])));
    }
    EXPECT_LE(worst, 1e-5);
  }
}

TEST(Profile, EnergyOfFullEtaIsTwo) {
  Potential W(1);
  auto p = solve_profile(W, ProfileKind::eta, -10, 10, 1e-3);
  auto e = profile_energy(W, p);
  EXPECT_FALSE(e.truncated);
  EXPECT_NEAR(e.total, 2.0, 1e-4);
  EXPECT_NEAR(e.dirichlet, e.potential, 1e-4);
  EXPECT_NEAR(e.total, 2.0 * std::abs(W.Phi(p.value.back()) - W.Phi(p.value.front())), 1e-4);
}

TEST(Profile, ConstantProfileHasZeroEnergy) {
  Potential W(1);
  Profile1D c;
  c.spacing = 0.01;
  for (int i = 0; i < 100; ++i) {
    c.t.push_back(i * 0.01);
    c.value.push_back(0.0);
  }
  EXPECT_EQ(profile_energy(W, c).total, 0.0);
}

TEST(Profile, SplitAtHalf) {
  Potential W(1);
  auto p = solve_profile(W, ProfileKind::eta, -10, 10, 1e-3);
  auto e = profile_energy(W, p, 0.5);
  // 2 * int sqrt(W) over [0,1/2] and [1/2,1] by quadrature
  double lower = 2.0 * integrate([&](double t) { return W.sqrtW(t); }, 0.0, 0.5);
  double upper = 2.0 * integrate([&](double t) { return W.sqrtW(t); }, 0.5, 1.0);
  EXPECT_NEAR(e.below, upper, 1e-4);
  EXPECT_NEAR(e.above, lower, 1e-4);
  EXPECT_NEAR(e.below, 1.0, 1e-4);
  EXPECT_NEAR(e.above, 1.0, 1e-4);
}

TEST(Profile, TruncatedProfileShape) {
  Potential W(1);
  for (double M : {4.0, 10.0}) {
    auto p = build_truncated_profile(W, M, 1.0);
    for (std::size_t i = 0; i < p.t.size(); ++i) {
      if (p.t[i] <= 0) {
        EXPECT_EQ(p.value[i], 1.0);
      }
      if (p.t[i] >= M) {
        EXPECT_EQ(p.value[i], 0.0);
      }
      if (i + 1 < p.t.size()) {
        EXPECT_LE(p.value[i + 1], p.value[i]);
      }
    }
    // C1: no derivative jumps at the blend junctions
    double dt = p.spacing;
    for (double s : {1.0, M - 1.0}) {
      double dl = (p(s) - p(s - dt)) / dt, dr = (p(s + dt) - p(s)) / dt;
      EXPECT_NEAR(dl, dr, 1e-3);
    }
  }
}

TEST(Profile, TruncatedEnergies) {
  Potential W(1);
  // fine sampling so that the quadrature error stays below the truncation error
  auto e10 = profile_energy(W, build_truncated_profile(W, 10.0, 1.0, 1e-4));
  EXPECT_LE(std::abs(e10.total - 2.0), 0.05);
  auto e4 = profile_energy(W, build_truncated_profile(W, 4.0, 1.0, 1e-4));
  EXPECT_LE(std::abs(e4.total - 2.0), 0.3);
  EXPECT_GT(std::abs(e4.total - 2.0), std::abs(e10.total - 2.0));

  auto half = build_truncated_profile(W, 10.0, 0.5);
  EXPECT_NEAR(half.shifted(0.0), 0.5, 1e-9);
  auto split = profile_energy(W, half, 0.5);
  EXPECT_NEAR(split.below, 1.0, 0.05);
  EXPECT_NEAR(split.above, 1.0, 0.05);

  // one-sided energies for delta = 0.9: 2(1 - Phi) before the crossing, 2 Phi after it
  auto p9 = build_truncated_profile(W, 10.0, 0.9);
  auto s9 = profile_energy(W, p9, 0.9);
  EXPECT_NEAR(s9.above, 2.0 * W.Phi(0.9), 0.02);
  EXPECT_NEAR(s9.below, 2.0 * (1.0 - W.Phi(0.9)), 0.02);
}

TEST(Profile, GlueLevels) {
  Potential W(1);
  EXPECT_FALSE(Q0(W, 1.0).has_value());
  auto q0 = Q0(W, 0.9);
  ASSERT_TRUE(q0.has_value());
  EXPECT_NEAR(q_closed_form(*q0), 0.9, 1e-12);
  EXPECT_GT(*q0, 0.0);
  EXPECT_NEAR(*P0(W, 0.9), -*q0, 1e-15);
  auto prof = q0_profile(W, 0.8, -5, 5, 1e-3);
  for (double v : prof.value) EXPECT_LE(v, 0.8);
}

TEST(Profile, CsvExport) {
  Potential W(1);
  auto p = solve_profile(W, ProfileKind::eta, -1, 1, 1e-3);
  auto path = std::filesystem::temp_directory_path() / "plateau_profile.csv";
  p.write_csv(path.string());
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,value");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, p.t.size());
  std::filesystem::remove(path);
}
