#include "liouville/oracle_disk.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "liouville/errors.hpp"

namespace liouville {

namespace {

constexpr double kPi = std::numbers::pi;

void check_beta(double beta) {
  if (!(beta > -1 && beta < 0)) throw InvalidInput("beta must lie in (-1, 0)");
}

}  // namespace

DiskState DiskState::from_rho(double beta, double rho) {
  check_beta(beta);
  double crit = 8 * kPi * (1 + beta);
  if (!(rho >= 0 && rho < crit)) throw InvalidInput("disk oracle needs 0 <= rho < 8 pi (1+beta)");
  return {beta, rho, rho / (crit - rho)};
}

DiskState DiskState::from_gamma(double beta, double gamma) {
  check_beta(beta);
  if (!(gamma >= 0)) throw InvalidInput("gamma must be >= 0");
  return {beta, 8 * kPi * (1 + beta) * gamma / (1 + gamma), gamma};
}

double disk_solution(const DiskState& s, const Point2& x) {
  double r = x.norm();
  if (r > 1 + 1e-12) throw InvalidInput("disk_solution: |x| > 1");
  double a = 2 * (1 + s.beta);
  return 2 * (std::log1p(s.gamma) - std::log1p(s.gamma * std::pow(std::min(r, 1.0), a)));
}

double disk_density(const DiskState& s, const Point2& x) {
  double r = x.norm();
  if (r == 0) throw InvalidInput("disk_density: unbounded at the sink");
  if (r > 1 + 1e-12) throw InvalidInput("disk_density: |x| > 1");
  double t = 1 + s.gamma * std::pow(r, 2 * (1 + s.beta));
  return (1 + s.beta) / kPi * (1 + s.gamma) * std::pow(r, 2 * s.beta) / (t * t);
}

double disk_energy(const DiskState& s) {
  // E = (1/2) int omega G[omega] = int |grad w|^2 / (2 rho^2)
  //   = ((1 + 1/g) log(1+g) - 1) / rho
  const double g = s.gamma;
  const double base = 8 * kPi * (1 + s.beta);
  if (g < 1e-3) {
    // ((1 + 1/g) log(1+g) - 1) / g = sum_k (-1)^(k+1) g^(k-1) / (k (k+1))
    double n = 0, p = 1;
    for (int k = 1; k <= 8; ++k) {
      n += ((k % 2) ? 1 : -1) * p / (k * (k + 1.0));
      p *= g;
    }
    return n * (1 + g) / base;
  }
  return ((1 + 1 / g) * std::log1p(g) - 1) / s.rho;
}

double disk_D0(double beta) {
  check_beta(beta);
  return -kPi / (1 + beta);
}

DiskHeights disk_mass_and_heights(const DiskState& s) {
  if (!(s.rho > 0)) throw InvalidInput("disk_mass_and_heights: rho must be > 0");
  const double b1 = 1 + s.beta;
  DiskHeights h;
  h.I_w = std::log(kPi * (1 + s.gamma) / b1);
  h.lambda = std::log(b1 * (1 + s.gamma) / kPi);
  h.c = std::log(kPi * s.gamma * s.gamma / (b1 * (1 + s.gamma)));
  return h;
}

double disk_free_energy(const DiskState& s) {
  if (s.rho == 0) return -std::log(kPi / (1 + s.beta));
  return s.rho * disk_energy(s) - disk_mass_and_heights(s).I_w;
}

double disk_entropy(const DiskState& s) {
  if (s.rho == 0) return std::log(kPi / (1 + s.beta));
  return disk_mass_and_heights(s).I_w - 2 * s.rho * disk_energy(s);
}

double disk_mu_squared(const DiskState& s) {
  double b1 = 1 + s.beta;
  return 8 * b1 * b1 * s.gamma / ((1 + s.gamma) * (1 + s.gamma));
}

double disk_Dbeta(double beta) { return 8 * kPi * (1 + beta) * disk_D0(beta); }

double disk_density_mass_quadrature(const DiskState& s) {
  // r^(2 beta) r dr = ds / (2 (1+beta)) with s = r^(2+2 beta)
  const double b1 = 1 + s.beta;
  auto f = [&](double u) {
    double t = 1 + s.gamma * u;
    return (1 + s.gamma) / (t * t);
  };
  double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, 1e-13);
  return 2 * kPi * (b1 / kPi) * v / (2 * b1);
}

double disk_dirichlet_quadrature(const DiskState& s) {
  // |w'(r)| = 4 b1 g r^(2 b1 - 1) / (1 + g r^(2 b1)); in s = r^(2 b1):
  // 2 pi r |w'|^2 dr = 2 pi * 16 b1^2 g^2 s / (1 + g s)^2 * ds / (2 b1)
  const double b1 = 1 + s.beta;
  auto f = [&](double u) {
    double t = 1 + s.gamma * u;
    return u / (t * t);
  };
  double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, 1e-13);
  return 2 * kPi * 16 * b1 * b1 * s.gamma * s.gamma * v / (2 * b1);
}

}  // namespace liouville
