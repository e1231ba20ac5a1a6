#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "liouville/errors.hpp"
#include "liouville/oracle_disk.hpp"

using namespace liouville;

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST(DiskOracle, SolutionValues) {
  auto s = DiskState::from_rho(-0.5, 2 * kPi);
  EXPECT_NEAR(s.gamma, 1.0, 1e-15);
  EXPECT_NEAR(disk_solution(s, {0, 0}), 2 * std::log(2.0), 1e-15);
  EXPECT_NEAR(disk_solution(s, {0.6, 0.8}), 0.0, 1e-15);
  EXPECT_NEAR(disk_solution(s, {0.3, 0.4}), 2 * std::log(2 / 1.5), 1e-14);
  EXPECT_EQ(disk_solution(DiskState::from_rho(-0.5, 0), {0.2, 0}), 0.0);
  EXPECT_THROW(disk_solution(s, {1.1, 0}), InvalidInput);
  EXPECT_THROW(DiskState::from_rho(-0.5, 4 * kPi), InvalidInput);
}

TEST(DiskOracle, Density) {
  auto s0 = DiskState::from_rho(-0.5, 0);
  EXPECT_NEAR(disk_density(s0, {0.25, 0}), 0.5 / kPi * 4, 1e-14);
  EXPECT_NEAR(disk_density(s0, {0.25, 0}), 0.63662, 1e-5);
  EXPECT_THROW(disk_density(s0, {0, 0}), InvalidInput);
  for (double g : {0.0, 1.0, 10.0, 1000.0}) {
    EXPECT_NEAR(disk_density_mass_quadrature(DiskState::from_gamma(-0.5, g)), 1.0, 1e-6);
    EXPECT_NEAR(disk_density_mass_quadrature(DiskState::from_gamma(-0.75, g)), 1.0, 1e-6);
  }
  EXPECT_LT(disk_density(DiskState::from_gamma(-0.5, 1e8), {0.5, 0}), 1e-6);
}

TEST(DiskOracle, Energy) {
  // gamma = 1: (2 log 2 - 1) / rho
  EXPECT_NEAR(disk_energy(DiskState::from_rho(-0.5, 2 * kPi)), (2 * std::log(2.0) - 1) / (2 * kPi), 1e-15);
  // rho = 0: (1/2) int omega0 psi with psi = (1 - r^(2+2 beta)) / (4 pi (1+beta))
  EXPECT_NEAR(disk_energy(DiskState::from_rho(-0.5, 0)), 1 / (8 * kPi), 1e-15);
  EXPECT_NEAR(disk_energy(DiskState::from_rho(-0.75, 0)), 1 / (4 * kPi), 1e-15);
  EXPECT_GT(disk_energy(DiskState::from_rho(-0.5, 0.99 * 4 * kPi)),
            disk_energy(DiskState::from_rho(-0.5, 0.5 * 4 * kPi)));
  // the small-gamma series joins the closed form continuously
  for (double beta : {-0.8, -0.5}) {
    double lo = disk_energy(DiskState::from_gamma(beta, 1e-3 * (1 - 1e-9)));
    double hi = disk_energy(DiskState::from_gamma(beta, 1e-3 * (1 + 1e-9)));
    EXPECT_NEAR(lo, hi, 1e-11 * hi);
    EXPECT_LT(lo, hi);
  }
}

// E = int |grad w|^2 / (2 rho^2) by radial quadrature.
TEST(DiskOracle, EnergyMatchesDirichletQuadrature) {
  for (double beta : {-0.75, -0.5, -0.25})
    for (double g : {0.01, 1.0, 30.0, 500.0}) {
      auto s = DiskState::from_gamma(beta, g);
      EXPECT_NEAR(disk_dirichlet_quadrature(s) / (2 * s.rho * s.rho), disk_energy(s), 1e-6);
    }
}

TEST(DiskOracle, D0) {
  EXPECT_NEAR(disk_D0(-0.5), -2 * kPi, 1e-14);
  EXPECT_NEAR(disk_D0(-0.75), -4 * kPi, 1e-14);
  EXPECT_NEAR(disk_D0(-1e-12), -kPi, 1e-9);
  EXPECT_NEAR(disk_Dbeta(-0.5), -8 * kPi * kPi, 1e-12);
}

TEST(DiskOracle, MassAndHeights) {
  auto h = disk_mass_and_heights(DiskState::from_gamma(-0.5, 1.0));
  EXPECT_NEAR(h.I_w, std::log(4 * kPi), 1e-14);
  EXPECT_NEAR(h.I_w, 2.53102, 1e-5);
  for (double g : {1.0, 10.0, 100.0}) {
    auto s = DiskState::from_gamma(-0.5, g);
    auto k = disk_mass_and_heights(s);
    // w -> 2 log((1+g)/g) - 4 (1+beta) log|x| away from the sink
    EXPECT_NEAR(k.I_w - k.c, 2 * std::log(1 + 1 / g), 1e-12);
    // lambda is the maximum of w - I_w, attained at the sink
    EXPECT_NEAR(k.lambda, disk_solution(s, {0, 0}) - k.I_w, 1e-12);
    // far field: w - I_w + c -> 8 pi (1+beta) G(x,0) = -4 (1+beta) log|x|
    double r = 0.5;
    double far = disk_solution(s, {r, 0}) - k.I_w + k.c;
    EXPECT_NEAR(far, -4 * 0.5 * std::log(r), 2 / (g * r));
  }
  for (double g : {10.0, 1e3, 1e6}) {
    auto s = DiskState::from_gamma(-0.5, g);
    double v = (s.rho - 4 * kPi) * std::exp(disk_mass_and_heights(s).c);
    EXPECT_NEAR(v, -8 * kPi * kPi * g * g / ((1 + g) * (1 + g)), 1e-9 * 8 * kPi * kPi);
  }
}

TEST(DiskOracle, ImCkRatioClosedForm) {
  for (double beta : {-0.75, -0.5, -0.3})
    for (double g : {10.0, 100.0}) {
      auto s = DiskState::from_gamma(beta, g);
      double crit = 8 * kPi * (1 + beta);
      double ratio = (s.rho - crit) * std::exp(disk_mass_and_heights(s).c) / disk_Dbeta(beta);
      EXPECT_NEAR(ratio, g * g / ((1 + g) * (1 + g)), 1e-12);
    }
  auto r10 = DiskState::from_gamma(-0.5, 10);
  EXPECT_NEAR((r10.rho - 4 * kPi) * std::exp(disk_mass_and_heights(r10).c) / disk_Dbeta(-0.5), 0.8264, 1e-4);
}

TEST(DiskOracle, ThermodynamicClosedForms) {
  auto s = DiskState::from_rho(-0.5, 2 * kPi);
  EXPECT_NEAR(disk_free_energy(s) + disk_entropy(s) + s.rho * disk_energy(s), 0.0, 1e-14);
  EXPECT_NEAR(disk_free_energy(DiskState::from_gamma(-0.5, 1e-9)), -std::log(2 * kPi), 1e-8);
  EXPECT_NEAR(disk_mu_squared(DiskState::from_gamma(-0.5, 1)), 0.5, 1e-15);
  // E = -dJ/drho
  double rho = 5.0, h = 1e-5;
  double dJ = (disk_free_energy(DiskState::from_rho(-0.5, rho + h)) -
               disk_free_energy(DiskState::from_rho(-0.5, rho - h))) / (2 * h);
  EXPECT_NEAR(-dJ, disk_energy(DiskState::from_rho(-0.5, rho)), 1e-8);
}

// Radial finite differences of the closed form against
// w'' + w'/r + rho H e^w / int H e^w = 0.
TEST(DiskOracle, SolvesThePde) {
  auto s = DiskState::from_rho(-0.6, 4.0);
  double mass = std::exp(disk_mass_and_heights(s).I_w);
  std::vector<double> res;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    double worst = 0;
    for (double r : {0.2, 0.5, 0.8}) {
      auto w = [&](double t) { return disk_solution(s, {t, 0}); };
      double lap = (w(r + h) - 2 * w(r) + w(r - h)) / (h * h) + (w(r + h) - w(r - h)) / (2 * h * r);
      double src = s.rho * std::pow(r, 2 * s.beta) * std::exp(w(r)) / mass;
      worst = std::max(worst, std::abs(lap + src));
    }
    res.push_back(worst);
  }
  EXPECT_LT(res[2], res[0]);
  EXPECT_LT(res[2], 1e-3);
}
