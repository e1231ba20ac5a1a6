#pragma once

#include <optional>
#include <vector>

#include "liouville/domain.hpp"
#include "liouville/fem.hpp"

namespace liouville {

struct PositiveSink {
  Point2 q;
  double alpha;
};

// One negative sink of strength beta at q0 plus optional positive sinks.
struct SinkConfig {
  Point2 q0{0, 0};
  double beta = -0.5;
  std::vector<PositiveSink> positives;

  // Human readable list of violated invariants (empty when valid).
  std::vector<std::string> problems(const DomainGeometry* domain = nullptr) const;
  void validate(const DomainGeometry& domain) const;
};

// H(x) = |x-q0|^(2 beta) h0(x) with
// h0(x) = exp(-4 pi beta R(x,q0) - sum_j 4 pi alpha_j G(x,q_j)).
class WeightField {
 public:
  WeightField(DomainGeometry domain, SinkConfig sinks);

  const DomainGeometry& domain() const { return domain_; }
  const SinkConfig& sinks() const { return sinks_; }
  double beta() const { return sinks_.beta; }

  // log h0(x); -inf at a positive sink.  On mesh domains a triangle of the
  // domain mesh and barycentric coordinates can be passed to skip point
  // location.
  double log_h0(const Point2& x, int tri = -1, const Eigen::Vector3d* bary = nullptr) const;
  double log_weight(const Point2& x, int tri = -1, const Eigen::Vector3d* bary = nullptr) const;
  double weight(const Point2& x) const;

  // R(x,q0) + the same element-local shortcut as log_h0.
  double regular_at(const Point2& x, int tri = -1, const Eigen::Vector3d* bary = nullptr) const;

  double robin_at_sink() const { return robin_q0_; }
  double log_h0_at_sink() const { return log_h0_q0_; }
  // c_* = h0(q0) exp(8 pi (1+beta) R(q0,q0)).
  double c_star() const;

  // Phi*(x) = 8 pi (1+beta)(R(x,q0)-R(q0,q0)) + log(h0(x)/h0(q0)).
  double phi_star(const Point2& x, int tri = -1, const Eigen::Vector3d* bary = nullptr) const;

 private:
  double interpolate(const Vec& f, const Point2& x, int tri, const Eigen::Vector3d* bary) const;

  DomainGeometry domain_;
  SinkConfig sinks_;
  double robin_q0_ = 0, log_h0_q0_ = 0;
  std::shared_ptr<const Vec> r0_;
  std::vector<std::shared_ptr<const Vec>> rj_;
};

double weight_at(const WeightField& field, const Point2& x);

struct PhiPotentials {
  double phi;
  double phi_star;
};
PhiPotentials phi_potentials(const WeightField& field, const Point2& x);

// gamma(q0) = 4 pi (1+beta) R(q0,q0) + log h0(q0).
double gamma_at_sink(const WeightField& field);

enum class CriticalityStatus { Satisfied, NotSatisfied, NotRequired };

struct CriticalityResult {
  double grad_norm;
  double tolerance;
  bool satisfied;
  bool required;    // 1 + 2 beta >= 0
  bool borderline;  // 1 + 2 beta == 0 exactly
  CriticalityStatus status;
};

// Central-difference gradient of Phi* at q0.  step <= 0 selects
// 1e-3 times the distance from q0 to the boundary.
CriticalityResult criticality_check(const WeightField& field, double step = 0);

// Quadrature points for integrals of the form  int H f  with f built from
// P1 fields: the weight H is folded into the point weights.  Triangles
// incident to q0 use a polar map with a Gauss-Jacobi rule in the radius,
// triangles containing q0 in their interior are split at q0 first, and
// triangles close to a sink are subdivided.
struct MassQuadrature {
  std::vector<int> tri;
  std::vector<Eigen::Vector3d> bary;
  std::vector<double> weight;  // includes H
  std::vector<Point2> x;
  int size() const { return static_cast<int>(weight.size()); }
};

struct QuadratureOptions {
  int radial = 8;
  int angular = 8;
  int subdivision = 2;
};

MassQuadrature build_mass_quadrature(const P1Space& space, const WeightField& field,
                                     const QuadratureOptions& options = {});

// Values of a node field at the quadrature points.
Vec evaluate_at_points(const MassQuadrature& q, const Mesh& mesh, const Vec& node_field);

}  // namespace liouville
