#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "liouville/domain.hpp"
#include "liouville/weights.hpp"

namespace liouville {

// Regularized limits of the form
//   lim_{r->0} [ int_{Omega \ U B_{r_j}(p_j)} g  -  sum_j c_j pi/(1+alpha_j) r_j^(-2(1+alpha_j)) ]
// evaluated on a decreasing list of radii and extrapolated to r = 0.
struct TruncatedLimit {
  double value = 0;                 // last Richardson extrapolant
  double extrapolation_error = 0;   // spread of the last two extrapolants
  double direct = 0;                // the r = 0 limit evaluated in closed form below the radii
  std::vector<double> radii;        // radii actually used (after any rescaling)
  std::vector<double> samples;      // truncated values at those radii
};

// D_0 with the prefactor c_* = h0(q0) exp(8 pi (1+beta) R(q0,q0)) and the
// radius r0 = c0^(1/(2(1+beta))) r, c0 = c_* / (8 (1+beta)^2).
// radius_scale multiplies r0 (a change of radius convention).
TruncatedLimit compute_D0_truncation(const DomainGeometry& domain, const SinkConfig& sinks,
                                     const std::vector<double>& r_list, double radius_scale = 1.0);

// int_Omega |x-q0|^-(4+2b)(e^Phi* - 1) - int_{Omega^c} |x-q0|^-(4+2b).
// Only defined for beta < -1/2.  Equals D_0 / c_*.
double compute_D0_alternative(const DomainGeometry& domain, const SinkConfig& sinks);

// rho_at h0(q0) e^{G*(q0)} (int_{Omega \ B_tau} e^Phi - pi/(1+beta) tau^(-2(1+beta))), tau -> 0,
// with tau running over r_list directly.
TruncatedLimit compute_Dbeta(const DomainGeometry& domain, const SinkConfig& sinks, double rho_at,
                             const std::vector<double>& r_list);

// Smooth positive factor h of the nonlinearity, given through log h.
using LogField = std::function<double(const Point2&)>;

struct WeightedPoint {
  Point2 p;
  double alpha = 0;
};

// G*_j(x) = 8 pi (1+a_j) R(x,p_j) + sum_{l != j} 8 pi (1+a_l) G(x,p_l).
double g_star(const DomainGeometry& domain, const std::vector<WeightedPoint>& points, int j,
              const Point2& x);

// sum over j with alpha_j maximal of  Lap log h(p_j) h(p_j)^(1/(1+aM)) e^(G*_j(p_j)/(1+aM)).
double compute_L_Omega(const DomainGeometry& domain, const LogField& log_h,
                       const std::vector<WeightedPoint>& points);

// Multi-point limit with h = h_field * H.  A blow-up point at q0 carries
// alpha = beta, any other point alpha = 0 with r_j = r (8 c_j)^(1/2).
// delta_scale shrinks or widens the cutoff disks around the points; the
// limit does not depend on it.
TruncatedLimit compute_D_Omega(const DomainGeometry& domain, const SinkConfig& sinks, const LogField& log_h_field,
                               const std::vector<Point2>& blowup_points, const std::vector<double>& r_list,
                               double delta_scale = 1.0);

struct FStar {
  double value = 0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  double det = 0;
};

// f* over the regular points x_j, h = h_field * H (H = 1 without sinks),
// singular blow-up set {q0} when sinks are given.
FStar f_star_and_hessian(const DomainGeometry& domain, const SinkConfig* sinks, const LogField& log_h_field,
                         const std::vector<Point2>& regular_points);

// Newton iteration on grad f* = 0 from the given points.
struct CriticalPoints {
  std::vector<Point2> points;
  FStar at;
  int iterations = 0;
  bool converged = false;
};
CriticalPoints refine_f_star_critical_point(const DomainGeometry& domain, const SinkConfig* sinks,
                                            const LogField& log_h_field, std::vector<Point2> start,
                                            double tol = 1e-9, int max_iters = 40);

enum class Kind { FirstKind, SecondKind, Inconclusive };
std::string to_string(Kind k);

struct KindVerdict {
  double D0_truncation = 0;
  double extrapolation_error = 0;
  std::optional<double> D0_alternative;  // D_0 / c_*
  std::optional<double> agreement_gap;   // |D0_truncation / c_* - D0_alternative| / |D0_alternative|
  double c_star = 0;
  double tolerance = 0;
  Kind verdict = Kind::Inconclusive;
  double critical_rho = 0;
  double beta = 0;
  std::string notes;
};

// tol_D = max(2 extrapolation_error, 1e-2 |D0| + 1e-6).
Kind kind_from_D0(double D0, double tol_D);

KindVerdict classify_domain(const DomainGeometry& domain, const SinkConfig& sinks, const std::vector<double>& r_list);

}  // namespace liouville
