#pragma once

#include <limits>
#include <string>
#include <vector>

#include "liouville/solver.hpp"

namespace liouville {

// Standard bubble centred at `center`:
// U(x) = lambda - 2 log(1 + rho h e^lambda |x-center|^(2(1+beta)) / (8 (1+beta)^2)).
double bubble_profile(double lambda, double beta, double h_at_sink, double rho, const Point2& x,
                      const Point2& center = {0, 0});

struct BlowupOptions {
  double threshold = 5;  // fits need max_value above this
  double annulus_inner = 0.3;
  double annulus_outer = 0.6;  // fractions of dist(q0, boundary)
};

struct BlowupFit {
  double lambda = 0;        // (w - I_w)(q0)
  double epsilon = 0;       // exp(-lambda / (2(1+beta)))
  double c = 0;             // w - I_w ~ 8 pi (1+beta) G(x,q0) - c away from q0
  double fit_residual = 0;  // RMS of the constant fit over the annulus
  int annulus_nodes = 0;
};

// Refused below the threshold; InvalidInput when the annulus holds no
// mesh node.
BlowupFit fit_blowup(const Solution& sol, const BlowupOptions& options = {});

// Per-point values of an expansion law along the blow-up part of a branch.
struct LawCheck {
  std::vector<int> indices;  // branch indices above the threshold
  std::vector<double> lambda;
  std::vector<double> values;  // residuals (est-muk) or ratios (im-ck)
  // Empirical exponent r in |deviation| ~ exp(-r lambda) by least squares;
  // NaN with fewer than two points.
  double rate = std::numeric_limits<double>::quiet_NaN();
  double threshold = 0;
  std::vector<std::string> notes;
};

// residual = I_w - lambda - 2 log(rho h0(q0) / (8 (1+beta)^2)) - 8 pi (1+beta) R(q0,q0).
LawCheck check_est_muk(const Branch& branch, const BlowupOptions& options = {});

// ratio = (rho - 8 pi (1+beta)) e^c / D_beta, expected to tend to one.
// Refused when D_beta is numerically zero.
LawCheck check_im_ck(const Branch& branch, double D_beta, const BlowupOptions& options = {});

// J_{8 pi (1+beta)} of the glued test function: the rescaled bubble plus
// 8 pi (1+beta) R(x,q0) inside B_tau(q0), 8 pi (1+beta) G(x,q0) outside,
// with bubble parameter eps.  The domain must be star-shaped about q0.
double test_function_energy(const DomainGeometry& domain, const SinkConfig& sinks, double eps, double tau);

// -1 - log(pi/(1+beta)) - gamma(q0), the eps -> 0 limit.
double test_function_limit(const DomainGeometry& domain, const SinkConfig& sinks);

}  // namespace liouville
