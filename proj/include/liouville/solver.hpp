#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "liouville/domain.hpp"
#include "liouville/errors.hpp"
#include "liouville/fem.hpp"
#include "liouville/weights.hpp"

namespace liouville {

struct SolverOptions {
  double tol = 1e-10;  // residual in the discrete dual energy norm
  int max_iters = 50;
  int max_backtracks = 30;
  int level = 5;       // mesh level used when the domain is an analytic disk
  MeshOptions mesh;
  QuadratureOptions quadrature;
};

// Discretization shared by every solve on one (domain, sinks) pair: the P1
// space, the weight, and the quadrature for  int H f.
class Problem {
 public:
  Problem(DomainGeometry domain, SinkConfig sinks, SolverOptions options = {});

  const DomainGeometry& domain() const { return field_.domain(); }
  const SinkConfig& sinks() const { return field_.sinks(); }
  const WeightField& field() const { return field_; }
  const SolverOptions& options() const { return options_; }
  const P1Space& space() const { return *space_; }
  const Mesh& mesh() const { return space_->mesh(); }
  const MassQuadrature& quadrature() const { return quad_; }
  double beta() const { return field_.beta(); }
  double critical_rho() const;

  // Dofs -> values at the quadrature points.
  const SpMat& point_map() const { return P_; }
  const Vec& point_weights() const { return W_; }

  // Linear functional giving the value at q0 (coefficients on dofs).
  const Vec& sink_functional() const { return sink_; }
  double value_at_sink(const Vec& node_field) const;

  // Log of  int H e^u  for a node field u, with a max shift.
  double log_mass(const Vec& node_field) const;
  // Density weights at the points, H e^u / int H e^u, summing to one.
  Vec density(const Vec& node_field, double* log_mass = nullptr) const;
  // int omega f for node fields f, omega the density of u.
  double density_integral(const Vec& density, const Vec& node_field) const;

 private:
  SolverOptions options_;
  WeightField field_;
  std::shared_ptr<P1Space> space_;
  MassQuadrature quad_;
  SpMat P_;
  Vec W_, sink_;
};

using ProblemPtr = std::shared_ptr<const Problem>;
ProblemPtr make_problem(const DomainGeometry& domain, const SinkConfig& sinks,
                        const SolverOptions& options = {});

enum class Form { MeanField, Gelfand };

struct Solution {
  Form form = Form::MeanField;
  double rho = 0;
  double mu = 0;
  Vec values;          // per node, zero on the boundary
  double log_mass = 0; // log int H e^values
  double max_value = 0;
  Point2 max_location{0, 0};
  double residual_norm = 0;
  int iterations = 0;
  bool converged = false;
  ProblemPtr problem;

  double sink_value() const { return problem->value_at_sink(values); }
};

// Newton failure; carries the last iterate.
class SolveFailure : public NoConvergence {
 public:
  SolveFailure(const std::string& what, Vec last, double residual)
      : NoConvergence(what), last_iterate(std::move(last)), residual(residual) {}
  Vec last_iterate;
  double residual;
};

// Delta w + rho H e^w / int H e^w = 0, w = 0 on the boundary.
Solution solve_mean_field(const ProblemPtr& problem, double rho,
                          const std::optional<Vec>& guess = std::nullopt);
Solution solve_mean_field(const DomainGeometry& domain, const SinkConfig& sinks, double rho,
                          const std::optional<Vec>& guess = std::nullopt,
                          const SolverOptions& options = {});

// -Delta u = mu^2 H e^u, u = 0 on the boundary; records rho = mu^2 int H e^u.
Solution solve_gelfand(const ProblemPtr& problem, double mu,
                       const std::optional<Vec>& guess = std::nullopt);

// Residual norms of a node field for either form (dual energy norm).
double mean_field_residual(const Problem& problem, const Vec& w, double rho);
double gelfand_residual(const Problem& problem, const Vec& u, double mu);

// Re-express a mean field solution in Gelfand scaling: u = w,
// mu^2 = rho / int H e^w.
Solution to_gelfand(const Solution& s);

enum class ParameterKind { Rho, Mu, Amplitude };

struct BranchFailure {
  int index;  // grid index whose solve failed
  std::string message;
};

struct Branch {
  ParameterKind parameter_kind = ParameterKind::Rho;
  std::vector<Solution> points;
  std::vector<std::string> step_log;
  std::optional<BranchFailure> failure;
};

Branch continue_in_rho(const ProblemPtr& problem, const std::vector<double>& rho_grid);
// Heights s are values of u at q0; unknowns (u, mu^2) with u(q0) = s.
Branch continue_in_amplitude(const ProblemPtr& problem, const std::vector<double>& s_grid);

// One bordered solve at height s from a starting pair (u, mu^2).
Solution solve_at_height(const ProblemPtr& problem, double s, const Vec& u0, double nu0);

}  // namespace liouville
