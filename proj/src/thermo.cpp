#include "liouville/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "liouville/errors.hpp"
#include "liouville/parallel.hpp"

namespace liouville {

namespace {

void require_converged(const Solution& sol, const char* what) {
  if (!sol.converged || !sol.problem) throw Refused(std::string(what) + ": solution is not converged");
}

double dirichlet(const Problem& p, const Vec& w_dofs) { return w_dofs.dot(p.space().stiffness() * w_dofs); }

// G[omega] on dofs for the point density d: A z = P' d.
Vec green_of_density(const Problem& p, const Vec& d) {
  Vec b = p.point_map().transpose() * d;
  return p.space().laplace_solver().solve(b);
}

}  // namespace

double free_energy_value(const Solution& sol) {
  require_converged(sol, "free_energy_value");
  if (!(sol.rho > 0)) throw Refused("free_energy_value: J_rho needs rho > 0 (1/(2 rho) is undefined at 0)");
  return dual_functional(*sol.problem, sol.rho, sol.values);
}

double entropy_value(const Solution& sol) {
  require_converged(sol, "entropy_value");
  const Problem& p = *sol.problem;
  double lm = 0;
  Vec d = p.density(sol.values, &lm);
  return lm - p.density_integral(d, sol.values);
}

double energy_value(const Solution& sol) {
  require_converged(sol, "energy_value");
  const Problem& p = *sol.problem;
  if (sol.rho == 0) return energy_of_density(p, Vec::Zero(p.mesh().num_nodes()));
  if (!(sol.rho > 0)) throw InvalidInput("energy_value: rho must be >= 0");
  return dirichlet(p, p.space().to_dofs(sol.values)) / (2 * sol.rho * sol.rho);
}

double energy_of_density(const Problem& p, const Vec& v) {
  Vec d = p.density(v);
  Vec b = p.point_map().transpose() * d;
  return 0.5 * b.dot(p.space().laplace_solver().solve(b));
}

double free_energy_functional(const Problem& p, double rho, const Vec& v) {
  double lm = 0;
  Vec d = p.density(v, &lm);
  // log(omega / H) = v - log int H e^v at the points
  double ent = p.density_integral(d, v) - lm;
  return ent - rho * energy_of_density(p, v);
}

double dual_functional(const Problem& p, double rho, const Vec& w) {
  if (!(rho > 0)) throw InvalidInput("J_rho needs rho > 0");
  return dirichlet(p, p.space().to_dofs(w)) / (2 * rho) - p.log_mass(w);
}

DualityPair duality_pair_a(const Problem& p, double rho, const Vec& v) {
  if (!(rho > 0)) throw InvalidInput("duality pairing needs rho > 0");
  Vec w = p.space().to_nodes(rho * green_of_density(p, p.density(v)));
  DualityPair out;
  out.F = free_energy_functional(p, rho, v);
  out.J = dual_functional(p, rho, w);
  out.gap = out.F - out.J;
  return out;
}

DualityPair duality_pair_b(const Problem& p, double rho, const Vec& w) {
  if (!(rho > 0)) throw InvalidInput("duality pairing needs rho > 0");
  DualityPair out;
  out.F = free_energy_functional(p, rho, w);
  out.J = dual_functional(p, rho, w);
  out.gap = out.J - out.F;
  return out;
}

std::vector<double> legendre_residuals(const std::vector<ThermoSample>& s) {
  const std::size_t n = s.size();
  for (std::size_t i = 1; i < n; ++i)
    if (!(s[i].rho > s[i - 1].rho)) throw InvalidInput("legendre_residuals: rho must be strictly increasing");
  // cubic Hermite f with f' = -E on each piece
  auto f_at = [&](std::size_t k, double rho) {
    const double a = s[k].rho, b = s[k + 1].rho, h = b - a, t = (rho - a) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * s[k].J + (t3 - 2 * t2 + t) * h * (-s[k].E) + (-2 * t3 + 3 * t2) * s[k + 1].J +
           (t3 - t2) * h * (-s[k + 1].E);
  };
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    double best = -s[i].J - s[i].rho * s[i].E;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      auto g = [&](double rho) { return -f_at(k, rho) - rho * s[i].E; };
      const double a = s[k].rho, b = s[k + 1].rho;
      constexpr int m = 64;
      int arg = 0;
      double gmin = INFINITY;
      for (int j = 0; j <= m; ++j) {
        double v = g(a + (b - a) * j / m);
        if (v < gmin) gmin = v, arg = j;
      }
      // golden section on the bracket around the sampled minimum
      double lo = a + (b - a) * std::max(arg - 1, 0) / m, hi = a + (b - a) * std::min(arg + 1, m) / m;
      const double r = 0.5 * (std::sqrt(5.0) - 1);
      double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo), g1 = g(x1), g2 = g(x2);
      for (int it = 0; it < 60; ++it) {
        if (g1 < g2) {
          hi = x2, x2 = x1, g2 = g1, x1 = hi - r * (hi - lo), g1 = g(x1);
        } else {
          lo = x1, x1 = x2, g1 = g2, x2 = lo + r * (hi - lo), g2 = g(x2);
        }
      }
      best = std::min({best, gmin, g1, g2});
    }
    out.push_back(std::abs(best - s[i].S));
  }
  return out;
}

ThermoCurve build_thermo_curve(const Branch& branch, const std::string& branch_ref) {
  if (branch.points.empty()) throw InvalidInput("build_thermo_curve: empty branch");
  ThermoCurve curve;
  curve.branch_ref = branch_ref;
  const std::size_t n = branch.points.size();
  for (std::size_t i = 0; i < n; ++i)
    if (!branch.points[i].converged || !branch.points[i].problem)
      throw Refused("build_thermo_curve: point " + std::to_string(i) + " is not converged");
  curve.samples.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const Solution& sol = branch.points[i];
    const Problem& p = *sol.problem;
    ThermoSample& t = curve.samples[i];
    t.rho = sol.rho;
    t.E = energy_value(sol);
    t.S = entropy_value(sol);
    // J at rho = 0 is the limit -log int H (the Dirichlet term is rho E -> 0)
    t.J = sol.rho > 0 ? free_energy_value(sol) : -p.log_mass(sol.values);
    t.mu = std::sqrt(sol.rho * std::exp(-sol.log_mass));
    t.height = sol.max_value;
  });
  const double critical = branch.points.back().problem->critical_rho();
  for (std::size_t i = 0; i < n; ++i) {
    const ThermoSample& t = curve.samples[i];
    const double scale = std::max({1.0, std::abs(t.S), std::abs(t.rho * t.E), std::abs(t.J)});
    const double id = t.S + t.rho * t.E + t.J;
    if (std::abs(id) > 1e-6 * scale) {
      std::ostringstream m;
      m << "sample " << i << " (rho " << t.rho << "): S + rho E + J = " << id;
      curve.flagged.push_back(m.str());
    }
  }
  const auto& s = curve.samples;
  bool increasing = true, subcritical = true;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0) increasing = increasing && s[i].rho > s[i - 1].rho;
    subcritical = subcritical && s[i].rho < critical;
  }
  if (increasing && subcritical) {
    for (std::size_t i = 1; i < s.size(); ++i)
      if (!(s[i].E > s[i - 1].E))
        curve.flagged.push_back("sample " + std::to_string(i) + ": E does not increase with rho below 8 pi (1+beta)");
    if (s.size() >= 2) {
      curve.legendre_residual = legendre_residuals(s);
      for (std::size_t i = 0; i < s.size(); ++i)
        if (curve.legendre_residual[i] > 1e-5)
          curve.flagged.push_back("sample " + std::to_string(i) + ": Legendre residual " +
                                  std::to_string(curve.legendre_residual[i]));
    }
  }
  return curve;
}

ConvexityScan convexity_scan(const ThermoCurve& curve) {
  const auto& s = curve.samples;
  if (s.size() < 4) throw InvalidInput("convexity_scan: needs at least four samples");
  ConvexityScan out;
  // windows of strictly monotone E; the turning sample ends one window and
  // starts the next
  std::vector<std::pair<std::size_t, std::size_t>> windows;
  std::size_t start = 0;
  auto dir = [&](std::size_t i) {
    double d = s[i + 1].E - s[i].E;
    return d > 0 ? 1 : (d < 0 ? -1 : 0);
  };
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (dir(i) == 0) {
      out.notes.push_back("E repeats between samples " + std::to_string(i) + " and " + std::to_string(i + 1));
      if (i > start) windows.push_back({start, i});
      start = i + 1;
      continue;
    }
    if (i + 2 < s.size() && dir(i + 1) != dir(i)) {
      if (dir(i + 1) != 0) out.notes.push_back("E is not monotone at sample " + std::to_string(i + 1) + "; window split");
      windows.push_back({start, i + 1});
      start = i + 1;
    }
  }
  if (start + 1 < s.size()) windows.push_back({start, s.size() - 1});

  for (auto [a, b] : windows) {
    if (b - a < 2) {
      out.notes.push_back("window of samples " + std::to_string(a) + ".." + std::to_string(b) +
                          " has fewer than three points; skipped");
      continue;
    }
    ConvexityInterval cur;
    for (std::size_t i = a + 1; i < b; ++i) {
      double sl = (s[i].S - s[i - 1].S) / (s[i].E - s[i - 1].E);
      double sr = (s[i + 1].S - s[i].S) / (s[i + 1].E - s[i].E);
      double span = s[i + 1].E - s[i - 1].E;
      int sign = 0;
      if (std::abs(sr - sl) > 1e-12 * (1 + std::abs(sl) + std::abs(sr))) sign = (sr - sl) / span > 0 ? 1 : -1;
      if (sign != 0 && cur.points > 0 && sign == cur.sign) {
        cur.E_lo = std::min(cur.E_lo, s[i].E);
        cur.E_hi = std::max(cur.E_hi, s[i].E);
        ++cur.points;
        continue;
      }
      if (cur.points > 0) out.intervals.push_back(cur);
      cur = ConvexityInterval{};
      if (sign != 0) cur = {s[i].E, s[i].E, sign, 1};
    }
    if (cur.points > 0) out.intervals.push_back(cur);
  }
  return out;
}

}  // namespace liouville
