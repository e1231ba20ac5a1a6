#pragma once

#include <string>
#include <vector>

#include "liouville/solver.hpp"

namespace liouville {

// J_rho(w) = (1/2rho) int |grad w|^2 - log int H e^w.  Refused at rho = 0.
double free_energy_value(const Solution& sol);

// S(omega) = -int omega (log omega - log H) for omega = H e^w / int H e^w,
// evaluated as log int H e^w - int omega w.
double entropy_value(const Solution& sol);

// E = int |grad w|^2 / (2 rho^2); at rho = 0 the quadratic form
// (1/2) int omega_0 G[omega_0] with omega_0 = H / int H.
double energy_value(const Solution& sol);

// E(omega) = (1/2) int omega G[omega] for the density of a node field v.
double energy_of_density(const Problem& problem, const Vec& v);

// F_rho(omega) = int omega log(omega/H) - rho E(omega) with omega the density of v.
double free_energy_functional(const Problem& problem, double rho, const Vec& v);
// J_rho(w) for any node field w.
double dual_functional(const Problem& problem, double rho, const Vec& w);

// The two pairings of the dual variational principle:
//   (a) omega = density of v, w = rho G[omega]:   F(omega) - J(w) >= 0
//   (b) w given, omega = H e^w / int H e^w:       J(w) - F(omega) >= 0
// with equality exactly at solutions.
struct DualityPair {
  double F = 0;
  double J = 0;
  double gap = 0;  // F - J for (a), J - F for (b)
};
DualityPair duality_pair_a(const Problem& problem, double rho, const Vec& v);
DualityPair duality_pair_b(const Problem& problem, double rho, const Vec& w);

struct ThermoSample {
  double rho = 0;
  double mu = 0;
  double E = 0;
  double J = 0;  // free energy f(rho) on minimal branches
  double S = 0;
  double height = 0;  // max of w
};

struct ThermoCurve {
  std::vector<ThermoSample> samples;
  std::string branch_ref;
  std::vector<std::string> flagged;       // invariant violations
  std::vector<double> legendre_residual;  // empty unless checked
};

// Samples of a branch with the checks S + rho E + J = 0 (1e-6 relative)
// and, on increasing-rho branches below 8 pi (1+beta), the Legendre
// relation S(E_i) = inf_rho {-f(rho) - rho E_i} with f interpolated by
// cubic Hermite pieces (f' = -E).
ThermoCurve build_thermo_curve(const Branch& branch, const std::string& branch_ref = "");

// Legendre residuals |inf_rho {-f(rho) - rho E_i} - S_i| over the samples,
// which must have strictly increasing rho.
std::vector<double> legendre_residuals(const std::vector<ThermoSample>& samples);

struct ConvexityInterval {
  double E_lo = 0;
  double E_hi = 0;
  int sign = 0;   // sign of S''(E)
  int points = 0; // interior samples in the interval
};

struct ConvexityScan {
  std::vector<ConvexityInterval> intervals;
  std::vector<std::string> notes;
};

// Three-point second differences of S against E on windows where E is
// strictly monotone; maximal runs of constant strict sign.
ConvexityScan convexity_scan(const ThermoCurve& curve);

}  // namespace liouville
