#include "liouville/asymptotics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "liouville/errors.hpp"

namespace liouville {

namespace {

constexpr double kPi = std::numbers::pi;
using GK21 = boost::math::quadrature::gauss_kronrod<double, 21>;

// Least-squares slope r of log|dev| = a - r lambda.
double decay_rate(const std::vector<double>& lambda, const std::vector<double>& dev) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < lambda.size(); ++i)
    if (dev[i] != 0 && std::isfinite(dev[i])) x.push_back(lambda[i]), y.push_back(std::log(std::abs(dev[i])));
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size(), my /= x.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxx > 0 ? -sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

// Blow-up points of a branch with their fits; the rest go to notes.
std::vector<std::pair<int, BlowupFit>> fits(const Branch& branch, const BlowupOptions& o, LawCheck& out) {
  std::vector<std::pair<int, BlowupFit>> r;
  out.threshold = o.threshold;
  for (std::size_t i = 0; i < branch.points.size(); ++i) {
    const Solution& s = branch.points[i];
    if (!s.converged || !s.problem) throw Refused("point " + std::to_string(i) + " is not converged");
    if (!(s.max_value > o.threshold)) {
      out.notes.push_back("point " + std::to_string(i) + " below the blow-up threshold; skipped");
      continue;
    }
    r.push_back({static_cast<int>(i), fit_blowup(s, o)});
  }
  return r;
}

}  // namespace

double bubble_profile(double lambda, double beta, double h, double rho, const Point2& x, const Point2& center) {
  const double b1 = 1 + beta;
  const double r2 = (x - center).squaredNorm();
  // |x|^(2 b1) = (|x|^2)^b1; exp(lambda) folded into the log for large lambda
  const double t = std::log(rho * h / (8 * b1 * b1)) + lambda + b1 * std::log(r2);
  const double log1p_e = t > 30 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  return lambda - 2 * log1p_e;
}

BlowupFit fit_blowup(const Solution& sol, const BlowupOptions& o) {
  if (!sol.converged || !sol.problem) throw Refused("fit_blowup: solution is not converged");
  if (!(sol.max_value > o.threshold)) {
    std::ostringstream m;
    m << "fit_blowup: max value " << sol.max_value << " is below the blow-up threshold " << o.threshold;
    throw Refused(m.str());
  }
  const Problem& p = *sol.problem;
  const Point2 q0 = p.sinks().q0;
  const double b1 = 1 + p.beta();
  const double lm = p.log_mass(sol.values);
  BlowupFit f;
  f.lambda = sol.sink_value() - lm;
  f.epsilon = std::exp(-f.lambda / (2 * b1));
  const double d = p.domain().distance_to_boundary(q0);
  const Mesh& m = p.mesh();
  std::vector<double> dev;
  for (int i = 0; i < m.num_nodes(); ++i) {
    double r = (m.nodes[i] - q0).norm();
    if (r < o.annulus_inner * d || r > o.annulus_outer * d) continue;
    double G = green(p.domain(), m.nodes[i], q0).value;
    dev.push_back(sol.values[i] - lm - 8 * kPi * b1 * G);
  }
  if (dev.empty()) throw InvalidInput("fit_blowup: no mesh node in the fitting annulus");
  double mean = 0;
  for (double v : dev) mean += v;
  mean /= dev.size();
  double ss = 0;
  for (double v : dev) ss += (v - mean) * (v - mean);
  f.c = -mean;
  f.fit_residual = std::sqrt(ss / dev.size());
  f.annulus_nodes = static_cast<int>(dev.size());
  return f;
}

LawCheck check_est_muk(const Branch& branch, const BlowupOptions& o) {
  LawCheck out;
  for (auto& [i, f] : fits(branch, o, out)) {
    const Solution& s = branch.points[i];
    const Problem& p = *s.problem;
    const double b1 = 1 + p.beta();
    const double I_w = p.log_mass(s.values);
    const double G_star = 8 * kPi * b1 * p.field().robin_at_sink();
    const double res = I_w - f.lambda - 2 * (std::log(s.rho / (8 * b1 * b1)) + p.field().log_h0_at_sink()) - G_star;
    out.indices.push_back(i);
    out.lambda.push_back(f.lambda);
    out.values.push_back(res);
  }
  out.rate = decay_rate(out.lambda, out.values);
  return out;
}

LawCheck check_im_ck(const Branch& branch, double D_beta, const BlowupOptions& o) {
  if (!(std::abs(D_beta) > 1e-10)) throw Refused("check_im_ck: D_beta vanishes (borderline case, no leading term)");
  LawCheck out;
  std::vector<double> dev;
  int sign = 0;
  for (auto& [i, f] : fits(branch, o, out)) {
    const Solution& s = branch.points[i];
    const double crit = s.problem->critical_rho();
    const double ratio = (s.rho - crit) * std::exp(f.c) / D_beta;
    out.indices.push_back(i);
    out.lambda.push_back(f.lambda);
    out.values.push_back(ratio);
    dev.push_back(ratio - 1);
    int sg = s.rho > crit ? 1 : (s.rho < crit ? -1 : 0);
    if (sign != 0 && sg != sign) out.notes.push_back("sign of rho - 8 pi (1+beta) changes at point " + std::to_string(i));
    sign = sg;
  }
  if (sign != 0 && sign != (D_beta > 0 ? 1 : -1))
    out.notes.push_back("sign of rho - 8 pi (1+beta) differs from the sign of D_beta");
  out.rate = decay_rate(out.lambda, dev);
  return out;
}

double test_function_limit(const DomainGeometry& domain, const SinkConfig& sinks) {
  WeightField field(domain, sinks);
  return -1 - std::log(kPi / (1 + sinks.beta)) - gamma_at_sink(field);
}

double test_function_energy(const DomainGeometry& domain, const SinkConfig& sinks, double eps, double tau) {
  if (!(eps > 0) || !(tau > 0)) throw InvalidInput("test_function_energy: eps and tau must be positive");
  const Point2 q0 = sinks.q0;
  if (!domain.contains(q0) || !(tau < domain.distance_to_boundary(q0)))
    throw InvalidInput("test_function_energy: B_tau(q0) must lie strictly inside the domain");
  WeightField field(domain, sinks);
  const double b1 = 1 + sinks.beta;
  const double k = 8 * kPi * b1;
  const double c_beta = std::exp(field.log_h0_at_sink()) / (8 * b1 * b1);
  const double a = std::pow(eps, 2 * b1);
  constexpr int n_theta = 128;
  const double dtheta = 2 * kPi / n_theta;

  // Dirichlet energy.  The bubble part in B_tau is radial with closed form;
  // the cross term with grad R vanishes (w_eps is constant on the circle and
  // R harmonic); the R part and the exterior part are circle integrals.
  double dirichlet = 16 * kPi * b1 * (std::log1p(c_beta / a) - c_beta / (a + c_beta));
  double mass_in = 0, mass_out = 0;
  for (int i = 0; i < n_theta; ++i) {
    const Point2 e(std::cos(i * dtheta), std::sin(i * dtheta));
    const Point2 x = q0 + tau * e;
    const double R = domain.regular_part(x, q0);
    const double dR = domain.regular_part_gradient(x, q0).dot(e);
    const double u = -4 * b1 * std::log(tau) + k * R, du = -4 * b1 / tau + k * dR;
    dirichlet += (k * k * R * dR - u * du) * tau * dtheta;

    // inside, z = a + c_beta (r/tau)^(2 b1), t = log z
    auto inner = [&](double t) {
      const double z = std::exp(t);
      const double s = (z - a) / c_beta;
      const double r = tau * std::pow(std::max(s, 0.0), 1 / (2 * b1));
      const Point2 y = q0 + r * e;
      const double K = std::exp(field.log_h0(y) + k * domain.regular_part(y, q0));
      return K * (a + c_beta) * (a + c_beta) / (c_beta * z);
    };
    mass_in += std::pow(tau, -2 * b1) / (2 * b1) * GK21::integrate(inner, std::log(a), std::log(a + c_beta), 12, 1e-12) * dtheta;

    // outside, t = log r up to the boundary
    const double R_exit = domain.ray_exit(q0, e);
    auto outer = [&](double t) {
      const double r = std::exp(t);
      const Point2 y = q0 + r * e;
      const double lw = field.log_weight(y) + k * green(domain, y, q0).value;
      return std::exp(lw) * r * r;
    };
    mass_out += GK21::integrate(outer, std::log(tau), std::log(R_exit), 12, 1e-12) * dtheta;
  }
  return dirichlet / (2 * k) - std::log(mass_in + mass_out);
}

}  // namespace liouville
