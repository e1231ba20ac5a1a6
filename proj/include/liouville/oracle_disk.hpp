#pragma once

#include "liouville/mesh.hpp"

namespace liouville {

// Centred unit disk with the sink at the origin: the radial solution
// w = 2 log((1+g)/(1+g |x|^(2(1+beta)))), g = rho/(8 pi (1+beta) - rho).
struct DiskState {
  double beta;
  double rho;
  double gamma;

  static DiskState from_rho(double beta, double rho);
  static DiskState from_gamma(double beta, double gamma);
};

double disk_solution(const DiskState& s, const Point2& x);
double disk_density(const DiskState& s, const Point2& x);
// Energy (1/2) int omega G[omega]; the rho -> 0 limit is 1/(16 pi (1+beta)).
double disk_energy(const DiskState& s);
double disk_D0(double beta);

struct DiskHeights {
  double I_w;     // log int H e^w
  double lambda;  // max (w - I_w)
  double c;       // far-field constant: w - I_w = 8 pi (1+beta) G(x,0) - c + ...
};
DiskHeights disk_mass_and_heights(const DiskState& s);

// J_rho(w_rho) = rho E - I_w, and entropy S = I_w - 2 rho E.
double disk_free_energy(const DiskState& s);
double disk_entropy(const DiskState& s);
// Gelfand scaling: mu^2 = rho / int H e^w = 8 (1+beta)^2 g / (1+g)^2.
double disk_mu_squared(const DiskState& s);
// D_beta for the centred disk, 8 pi (1+beta) D0 = -8 pi^2.
double disk_Dbeta(double beta);

// Radial quadratures of the closed forms (s = r^(2+2beta) substitution,
// adaptive Gauss-Kronrod): int omega and int |grad w|^2.
double disk_density_mass_quadrature(const DiskState& s);
double disk_dirichlet_quadrature(const DiskState& s);

}  // namespace liouville
