#include "liouville/solver.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/SparseLU>

#include "liouville/linalg.hpp"

namespace liouville {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

void fill_diagnostics(Solution& s) {
  const Mesh& m = s.problem->mesh();
  int best = 0;
  for (int i = 1; i < m.num_nodes(); ++i)
    if (s.values[i] > s.values[best]) best = i;
  s.max_value = s.values[best];
  s.max_location = m.nodes[best];
}

}  // namespace

Problem::Problem(DomainGeometry domain, SinkConfig sinks, SolverOptions options)
    : options_(std::move(options)), field_(domain, std::move(sinks)) {
  if (domain.kind() == DomainGeometry::Kind::AnalyticDisk) {
    const Disk& d = domain.disk();
    space_ = std::make_shared<P1Space>(
        make_disk_mesh(d.center, d.radius, options_.level, field_.sinks().q0, options_.mesh));
  } else {
    space_ = std::make_shared<P1Space>(domain.mesh());
  }
  quad_ = build_mass_quadrature(*space_, field_, options_.quadrature);

  const Mesh& mesh = space_->mesh();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * quad_.size());
  for (int k = 0; k < quad_.size(); ++k) {
    const auto& tr = mesh.triangles[quad_.tri[k]];
    for (int i = 0; i < 3; ++i) {
      int d = space_->dof(tr[i]);
      if (d >= 0 && quad_.bary[k][i] != 0) trip.emplace_back(k, d, quad_.bary[k][i]);
    }
  }
  P_.resize(quad_.size(), space_->num_dofs());
  P_.setFromTriplets(trip.begin(), trip.end());
  W_ = Eigen::Map<const Vec>(quad_.weight.data(), quad_.size());

  sink_ = Vec::Zero(space_->num_dofs());
  const Point2& q0 = field_.sinks().q0;
  int node = mesh.find_node(q0, 1e-12);
  if (node >= 0) {
    if (space_->dof(node) >= 0) sink_[space_->dof(node)] = 1;
  } else {
    MeshLocator loc(mesh);
    Eigen::Vector3d bary;
    int t = loc.locate(q0, &bary);
    if (t < 0) throw InvalidInput("q0 is outside the mesh");
    for (int i = 0; i < 3; ++i) {
      int d = space_->dof(mesh.triangles[t][i]);
      if (d >= 0) sink_[d] += bary[i];
    }
  }
}

double Problem::critical_rho() const { return 8 * kPi * (1 + beta()); }

double Problem::value_at_sink(const Vec& f) const { return sink_.dot(space_->to_dofs(f)); }

Vec Problem::density(const Vec& f, double* log_mass) const {
  Vec u = P_ * space_->to_dofs(f);
  double shift = u.size() ? u.maxCoeff() : 0.0;
  Vec e = (W_.array() * (u.array() - shift).exp()).matrix();
  double s = e.sum();
  if (!(s > 0)) throw Error("density: vanishing mass");
  if (log_mass) *log_mass = shift + std::log(s);
  return e / s;
}

double Problem::log_mass(const Vec& f) const {
  double lm;
  density(f, &lm);
  return lm;
}

double Problem::density_integral(const Vec& d, const Vec& f) const {
  return d.dot(P_ * space_->to_dofs(f));
}

ProblemPtr make_problem(const DomainGeometry& domain, const SinkConfig& sinks,
                        const SolverOptions& options) {
  return std::make_shared<const Problem>(domain, sinks, options);
}

namespace {

// Residual, normalized load and point density for the mean field form.
struct MeanFieldEval {
  Vec F, b, d;
  double log_mass;
};

MeanFieldEval eval_mean_field(const Problem& p, const Vec& x, double rho) {
  MeanFieldEval e;
  Vec u = p.point_map() * x;
  double shift = u.size() ? u.maxCoeff() : 0.0;
  Vec ex = (p.point_weights().array() * (u.array() - shift).exp()).matrix();
  double s = ex.sum();
  e.log_mass = shift + std::log(s);
  e.d = ex / s;
  e.b = p.point_map().transpose() * e.d;
  e.F = p.space().stiffness() * x - rho * e.b;
  return e;
}

struct GelfandEval {
  Vec F, b, g;  // g = H e^u at the points (weights included)
};

GelfandEval eval_gelfand(const Problem& p, const Vec& x, double nu) {
  GelfandEval e;
  Vec u = p.point_map() * x;
  e.g = (p.point_weights().array() * u.array().exp()).matrix();
  e.b = p.point_map().transpose() * e.g;
  e.F = p.space().stiffness() * x - nu * e.b;
  return e;
}

double dual_norm(const Problem& p, const Vec& F) {
  Vec y = p.space().laplace_solver().solve(F);
  return std::sqrt(std::max(0.0, F.dot(y)));
}

SpMat weighted_mass(const Problem& p, const Vec& w) {
  const SpMat& P = p.point_map();
  SpMat M = P.transpose() * w.asDiagonal() * P;
  return M;
}

Solution finish(const ProblemPtr& p, Form form, double rho, double mu, const Vec& x,
                double res, int iters) {
  Solution s;
  s.form = form;
  s.rho = rho;
  s.mu = mu;
  s.values = p->space().to_nodes(x);
  s.log_mass = p->log_mass(s.values);
  s.residual_norm = res;
  s.iterations = iters;
  s.converged = true;
  s.problem = p;
  fill_diagnostics(s);
  return s;
}

}  // namespace

double mean_field_residual(const Problem& p, const Vec& w, double rho) {
  return dual_norm(p, eval_mean_field(p, p.space().to_dofs(w), rho).F);
}

double gelfand_residual(const Problem& p, const Vec& u, double mu) {
  return dual_norm(p, eval_gelfand(p, p.space().to_dofs(u), mu * mu).F);
}

Solution solve_mean_field(const ProblemPtr& p, double rho, const std::optional<Vec>& guess) {
  if (!(rho >= 0)) throw InvalidInput("rho must be >= 0");
  if (rho >= p->critical_rho() && !guess)
    throw Refused("rho >= 8 pi (1+beta) = " + fmt(p->critical_rho()) +
                  " needs an explicit initial guess");
  const SolverOptions& o = p->options();
  const SpMat& A = p->space().stiffness();
  Vec x = Vec::Zero(p->space().num_dofs());
  if (guess) {
    if (guess->size() != p->mesh().num_nodes()) throw InvalidInput("guess has the wrong size");
    x = p->space().to_dofs(*guess);
  }
  if (rho == 0) {
    x.setZero();
    return finish(p, Form::MeanField, 0, 0, x, 0, 0);
  }

  auto e = eval_mean_field(*p, x, rho);
  double res = dual_norm(*p, e.F);
  for (int it = 0; it < o.max_iters; ++it) {
    if (res < o.tol) return finish(p, Form::MeanField, rho, std::sqrt(rho * std::exp(-e.log_mass)), x, res, it);
    // J = A - rho P' diag(d) P + rho b b'
    SpMat K = A - rho * weighted_mass(*p, e.d);
    Vec dx = solve_rank_one(K, e.b, rho, -e.F);
    double t = 1;
    bool ok = false;
    for (int k = 0; k <= o.max_backtracks; ++k, t *= 0.5) {
      Vec xt = x + t * dx;
      auto et = eval_mean_field(*p, xt, rho);
      double rt = dual_norm(*p, et.F);
      if (std::isfinite(rt) && rt < (1 - 1e-4 * t) * res) {
        x = std::move(xt);
        e = std::move(et);
        res = rt;
        ok = true;
        break;
      }
    }
    if (!ok) {
      if (res < 100 * o.tol)
        return finish(p, Form::MeanField, rho, std::sqrt(rho * std::exp(-e.log_mass)), x, res, it);
      throw SolveFailure("mean field Newton stalled at rho = " + fmt(rho) + ", residual " + fmt(res),
                         p->space().to_nodes(x), res);
    }
  }
  if (res < o.tol) return finish(p, Form::MeanField, rho, std::sqrt(rho * std::exp(-e.log_mass)), x, res, o.max_iters);
  throw SolveFailure("mean field Newton did not converge in " + std::to_string(o.max_iters) +
                         " iterations (rho = " + fmt(rho) + ", residual " + fmt(res) + ")",
                     p->space().to_nodes(x), res);
}

Solution solve_mean_field(const DomainGeometry& domain, const SinkConfig& sinks, double rho,
                          const std::optional<Vec>& guess, const SolverOptions& options) {
  return solve_mean_field(make_problem(domain, sinks, options), rho, guess);
}

Solution solve_gelfand(const ProblemPtr& p, double mu, const std::optional<Vec>& guess) {
  if (!(mu >= 0)) throw InvalidInput("mu must be >= 0");
  const SolverOptions& o = p->options();
  const SpMat& A = p->space().stiffness();
  const double nu = mu * mu;
  Vec x = Vec::Zero(p->space().num_dofs());
  if (guess) {
    if (guess->size() != p->mesh().num_nodes()) throw InvalidInput("guess has the wrong size");
    x = p->space().to_dofs(*guess);
  }
  auto done = [&](double res, int it) {
    Solution s = finish(p, Form::Gelfand, 0, mu, x, res, it);
    s.rho = nu * std::exp(s.log_mass);
    return s;
  };
  if (mu == 0) {
    x.setZero();
    return done(0, 0);
  }
  auto e = eval_gelfand(*p, x, nu);
  double res = dual_norm(*p, e.F);
  for (int it = 0; it < o.max_iters; ++it) {
    if (res < o.tol) return done(res, it);
    SpMat K = A - nu * weighted_mass(*p, e.g);
    Vec dx = solve_symmetric(K, -e.F);
    double t = 1;
    bool ok = false;
    for (int k = 0; k <= o.max_backtracks; ++k, t *= 0.5) {
      Vec xt = x + t * dx;
      auto et = eval_gelfand(*p, xt, nu);
      double rt = dual_norm(*p, et.F);
      if (std::isfinite(rt) && rt < (1 - 1e-4 * t) * res) {
        x = std::move(xt);
        e = std::move(et);
        res = rt;
        ok = true;
        break;
      }
    }
    if (!ok) {
      if (res < 100 * o.tol) return done(res, it);
      throw SolveFailure("Gelfand Newton stalled at mu = " + fmt(mu) + ", residual " + fmt(res),
                         p->space().to_nodes(x), res);
    }
  }
  if (res < o.tol) return done(res, o.max_iters);
  throw SolveFailure("Gelfand Newton did not converge (mu = " + fmt(mu) + ", residual " + fmt(res) + ")",
                     p->space().to_nodes(x), res);
}

Solution to_gelfand(const Solution& s) {
  Solution g = s;
  g.form = Form::Gelfand;
  g.mu = std::sqrt(s.rho * std::exp(-s.log_mass));
  g.residual_norm = gelfand_residual(*s.problem, s.values, g.mu);
  return g;
}

Branch continue_in_rho(const ProblemPtr& p, const std::vector<double>& grid) {
  Branch br;
  br.parameter_kind = ParameterKind::Rho;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0 && grid[i] < p->critical_rho()) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      br.failure = BranchFailure{static_cast<int>(i), "rho grid must be increasing inside [0, 8 pi (1+beta))"};
      return br;
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double rho = grid[i];
    std::optional<Vec> guess;
    const auto& pts = br.points;
    if (pts.size() >= 2) {
      const Solution& a = pts[pts.size() - 2];
      const Solution& b = pts.back();
      double t = (rho - b.rho) / (b.rho - a.rho);
      guess = b.values + t * (b.values - a.values);
    } else if (pts.size() == 1) {
      guess = pts.back().values;
    }
    try {
      try {
        br.points.push_back(solve_mean_field(p, rho, guess));
      } catch (const NoConvergence&) {
        if (pts.empty()) throw;
        // retry from the plain previous point, then through a midpoint
        br.step_log.push_back("rho = " + fmt(rho) + ": extrapolated guess failed, retrying");
        Vec g = br.points.back().values;
        double mid = 0.5 * (br.points.back().rho + rho);
        Solution m = solve_mean_field(p, mid, g);
        br.points.push_back(solve_mean_field(p, rho, m.values));
      }
    } catch (const Error& err) {
      br.failure = BranchFailure{static_cast<int>(i), err.what()};
      return br;
    }
    const Solution& s = br.points.back();
    br.step_log.push_back("rho = " + fmt(rho) + ": " + std::to_string(s.iterations) +
                          " Newton steps, residual " + fmt(s.residual_norm));
  }
  return br;
}

namespace {

// Newton on F(u, nu) = (A u - nu b(u), c'u - s).
struct AmplitudeResult {
  Vec x;
  double nu;
  double res;
  int iters;
};

AmplitudeResult amplitude_newton(const Problem& p, double s, Vec x, double nu) {
  const SolverOptions& o = p.options();
  const SpMat& A = p.space().stiffness();
  const Vec& c = p.sink_functional();
  auto norm = [&](const Vec& F, double g) { return std::hypot(dual_norm(p, F), g); };
  auto e = eval_gelfand(p, x, nu);
  double g = c.dot(x) - s;
  double res = norm(e.F, g);
  for (int it = 0; it < o.max_iters; ++it) {
    if (res < o.tol) return {x, nu, res, it};
    SpMat K = A - nu * weighted_mass(p, e.g);
    // [K  -b; c' 0] (dx, dnu) = (-F, -g)
    auto [dx, dnu] = solve_bordered(K, -e.b, c, -e.F, -g);
    double t = 1;
    bool ok = false;
    for (int k = 0; k <= o.max_backtracks; ++k, t *= 0.5) {
      Vec xt = x + t * dx;
      double nt = nu + t * dnu;
      auto et = eval_gelfand(p, xt, nt);
      double gt = c.dot(xt) - s;
      double rt = norm(et.F, gt);
      if (std::isfinite(rt) && rt < (1 - 1e-4 * t) * res) {
        x = std::move(xt);
        nu = nt;
        e = std::move(et);
        g = gt;
        res = rt;
        ok = true;
        break;
      }
    }
    if (!ok) {
      if (res < 100 * o.tol) return {x, nu, res, it};
      throw SolveFailure("bordered Newton stalled at height " + fmt(s) + ", residual " + fmt(res),
                         p.space().to_nodes(x), res);
    }
  }
  if (res < o.tol) return {x, nu, res, o.max_iters};
  throw SolveFailure("bordered Newton did not converge at height " + fmt(s), p.space().to_nodes(x), res);
}

Solution amplitude_solution(const ProblemPtr& p, const AmplitudeResult& r) {
  if (r.nu < 0) throw NoConvergence("amplitude continuation reached mu^2 < 0");
  Solution s = finish(p, Form::Gelfand, 0, std::sqrt(r.nu), r.x, r.res, r.iters);
  s.rho = r.nu * std::exp(s.log_mass);
  return s;
}

// Bubble at q0 glued to the Green function, with height s at q0:
// inside B_tau, w = -4 b1 log tau + 2 log((e + k)/(e + k (r/tau)^(2 b1))) + 8 pi b1 R;
// outside, w = 8 pi b1 G(x,q0).  k = h0(q0) / (8 b1^2), e fixed by the height.
std::pair<Vec, double> bubble_seed(const Problem& p, double s) {
  const WeightField& f = p.field();
  const Point2 q = f.sinks().q0;
  const double b1 = 1 + p.beta(), a = 2 * b1;
  const double tau = 0.5 * p.domain().distance_to_boundary(q);
  const double k = std::exp(f.log_h0_at_sink()) / (8 * b1 * b1);
  const double top = s - 8 * kPi * b1 * f.robin_at_sink() + 2 * a * std::log(tau);
  if (!(top > 0)) throw NoConvergence("height " + fmt(s) + " is too small for a bubble start");
  const double e = k / std::expm1(0.5 * top);
  const Mesh& m = p.mesh();
  Vec u = Vec::Zero(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i) {
    if (m.boundary[i]) continue;
    const Point2& x = m.nodes[i];
    double r = (x - q).norm();
    double reg = 8 * kPi * b1 * f.regular_at(x);
    if (r < tau)
      u[i] = -2 * a * std::log(tau) + 2 * std::log((e + k) / (e + k * std::pow(r / tau, a))) + reg;
    else
      u[i] = -4 * b1 * std::log(r) + reg;
  }
  return {p.space().to_dofs(u), p.critical_rho() / std::exp(p.log_mass(u))};
}

}  // namespace

Solution solve_at_height(const ProblemPtr& p, double s, const Vec& u0, double nu0) {
  return amplitude_solution(p, amplitude_newton(*p, s, p->space().to_dofs(u0), nu0));
}

Branch continue_in_amplitude(const ProblemPtr& p, const std::vector<double>& grid) {
  Branch br;
  br.parameter_kind = ParameterKind::Amplitude;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!(grid[i] > 0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      br.failure = BranchFailure{static_cast<int>(i), "height grid must be positive and increasing"};
      return br;
    }
  if (grid.empty()) return br;

  // Small heights: u ~ nu z with -Delta z = H, so nu ~ s / z(q0).
  Vec z = p->space().laplace_solver().solve(p->point_map().transpose() * p->point_weights());
  const double z0 = p->sink_functional().dot(z);
  // Above this height a start from zero is replaced by a bubble at q0.
  constexpr double kSmallHeight = 1.0;

  Vec x_prev, x_prev2;
  double nu_prev = 0, nu_prev2 = 0, s_prev = 0, s_prev2 = 0;
  int have = 0;
  auto accept = [&](const AmplitudeResult& r, double s) {
    x_prev2 = std::move(x_prev);
    nu_prev2 = nu_prev;
    s_prev2 = s_prev;
    x_prev = r.x;
    nu_prev = r.nu;
    s_prev = s;
    ++have;
  };
  auto checked = [&](double s, const Vec& x0, double nu0) {
    AmplitudeResult r = amplitude_newton(*p, s, x0, nu0);
    if (!(r.nu > 0)) throw NoConvergence("bordered Newton reached mu^2 <= 0 at height " + fmt(s));
    return r;
  };
  auto from_bubble = [&](double s) {
    auto [x0, nu0] = bubble_seed(*p, s);
    return checked(s, x0, nu0);
  };

  double step = std::min(grid.front(), 0.5);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double target = grid[i];
    int halvings = 0;
    std::string note;
    std::optional<AmplitudeResult> done;
    try {
      if (target > kSmallHeight && s_prev <= kSmallHeight) {
        // past the small-height range the sink height may fold along the
        // branch from zero; start at the family concentrating at q0
        try {
          done = from_bubble(target);
          note = ", bubble start";
          have = 0;
          step = 0.5;
        } catch (const NoConvergence&) {
          if (have == 0) throw;
        }
      }
      while (!done) {
        double s_try = std::min(target, s_prev + step);
        Vec x0;
        double nu0;
        if (have >= 2) {
          double t = (s_try - s_prev) / (s_prev - s_prev2);
          x0 = x_prev + t * (x_prev - x_prev2);
          nu0 = nu_prev + t * (nu_prev - nu_prev2);
        } else if (have == 1) {
          x0 = s_prev > kSmallHeight ? x_prev : Vec(x_prev * (s_try / s_prev));
          nu0 = nu_prev;
        } else {
          nu0 = s_try / z0;
          x0 = z * nu0;
        }
        AmplitudeResult r;
        try {
          r = checked(s_try, x0, nu0);
        } catch (const NoConvergence&) {
          step *= 0.5;
          ++halvings;
          if (halvings <= 8 && step >= p->options().tol) continue;
          throw;
        }
        accept(r, s_try);
        step *= 1.5;
        if (s_try == target) done = r;
      }
      if (s_prev != target) {
        accept(*done, target);
      }
      br.points.push_back(amplitude_solution(p, *done));
      const Solution& sol = br.points.back();
      br.step_log.push_back("height " + fmt(target) + ": mu = " + fmt(sol.mu) + ", rho = " + fmt(sol.rho) +
                            ", " + std::to_string(done->iters) + " Newton steps" +
                            (halvings ? ", " + std::to_string(halvings) + " step halvings" : "") + note);
    } catch (const Error& err) {
      br.failure = BranchFailure{static_cast<int>(i), err.what()};
      return br;
    }
  }
  return br;
}

}  // namespace liouville
