#include "liouville/weights.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "liouville/errors.hpp"
#include "liouville/quadrature.hpp"

namespace liouville {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt_point(const Point2& p) {
  std::ostringstream s;
  s << "(" << p.x() << ", " << p.y() << ")";
  return s.str();
}

}  // namespace

std::vector<std::string> SinkConfig::problems(const DomainGeometry* domain) const {
  std::vector<std::string> out;
  if (!(beta > -1 && beta < 0)) out.push_back("beta must lie in (-1, 0); got " + std::to_string(beta));
  std::vector<Point2> pts{q0};
  for (std::size_t j = 0; j < positives.size(); ++j) {
    if (!(positives[j].alpha > 0))
      out.push_back("alpha of positive sink " + std::to_string(j) + " must be > 0");
    pts.push_back(positives[j].q);
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if ((pts[i] - pts[j]).norm() < 1e-12)
        out.push_back("sink points must be distinct: " + fmt_point(pts[i]) + " repeated");
    if (domain && (!domain->contains(pts[i]) || domain->distance_to_boundary(pts[i]) < 1e-12))
      out.push_back("sink at " + fmt_point(pts[i]) + " is not strictly inside the domain");
  }
  return out;
}

void SinkConfig::validate(const DomainGeometry& domain) const {
  auto p = problems(&domain);
  if (!p.empty()) throw InvalidInput(p.front());
}

WeightField::WeightField(DomainGeometry domain, SinkConfig sinks)
    : domain_(std::move(domain)), sinks_(std::move(sinks)) {
  sinks_.validate(domain_);
  if (domain_.kind() == DomainGeometry::Kind::Mesh) {
    r0_ = domain_.regular_part_nodal(sinks_.q0);
    for (auto& p : sinks_.positives) rj_.push_back(domain_.regular_part_nodal(p.q));
  }
  robin_q0_ = robin(domain_, sinks_.q0);
  log_h0_q0_ = log_h0(sinks_.q0);
}

double WeightField::interpolate(const Vec& f, const Point2&, int tri, const Eigen::Vector3d* bary) const {
  const auto& tr = domain_.mesh().triangles[tri];
  return (*bary)[0] * f[tr[0]] + (*bary)[1] * f[tr[1]] + (*bary)[2] * f[tr[2]];
}

double WeightField::regular_at(const Point2& x, int tri, const Eigen::Vector3d* bary) const {
  if (domain_.kind() == DomainGeometry::Kind::Mesh && tri >= 0 && bary) return interpolate(*r0_, x, tri, bary);
  return domain_.regular_part(x, sinks_.q0);
}

double WeightField::log_h0(const Point2& x, int tri, const Eigen::Vector3d* bary) const {
  const bool local = domain_.kind() == DomainGeometry::Kind::Mesh && tri >= 0 && bary;
  double s = -4 * kPi * sinks_.beta * regular_at(x, tri, bary);
  for (std::size_t j = 0; j < sinks_.positives.size(); ++j) {
    const auto& p = sinks_.positives[j];
    double r = (x - p.q).norm();
    if (r == 0) return -std::numeric_limits<double>::infinity();
    double reg = local ? interpolate(*rj_[j], x, tri, bary) : domain_.regular_part(x, p.q);
    double g = -std::log(r) / (2 * kPi) + reg;
    s -= 4 * kPi * p.alpha * g;
  }
  return s;
}

double WeightField::log_weight(const Point2& x, int tri, const Eigen::Vector3d* bary) const {
  double r = (x - sinks_.q0).norm();
  if (r == 0) throw InvalidInput("weight is singular at q0");
  return 2 * sinks_.beta * std::log(r) + log_h0(x, tri, bary);
}

double WeightField::weight(const Point2& x) const { return std::exp(log_weight(x)); }

double WeightField::c_star() const {
  return std::exp(log_h0_q0_ + 8 * kPi * (1 + sinks_.beta) * robin_q0_);
}

double WeightField::phi_star(const Point2& x, int tri, const Eigen::Vector3d* bary) const {
  return 8 * kPi * (1 + sinks_.beta) * (regular_at(x, tri, bary) - robin_q0_) + log_h0(x, tri, bary) -
         log_h0_q0_;
}

double weight_at(const WeightField& field, const Point2& x) {
  if (!field.domain().contains(x)) throw InvalidInput("weight_at: point outside the domain");
  if ((x - field.sinks().q0).norm() == 0) throw InvalidInput("weight_at: H is singular at q0");
  return field.weight(x);
}

PhiPotentials phi_potentials(const WeightField& field, const Point2& x) {
  const auto& s = field.sinks();
  if (!field.domain().contains(x)) throw InvalidInput("phi_potentials: point outside the domain");
  if ((x - s.q0).norm() == 0) throw InvalidInput("phi_potentials: undefined at q0");
  for (auto& p : s.positives)
    if ((x - p.q).norm() == 0) throw InvalidInput("phi_potentials: undefined at a positive sink");
  double r = (x - s.q0).norm();
  double reg = field.regular_at(x);
  double lh = field.log_h0(x) - field.log_h0_at_sink();
  double g = -std::log(r) / (2 * kPi) + reg;
  double phi = 8 * kPi * (1 + s.beta) * (g - field.robin_at_sink()) + lh + 2 * s.beta * std::log(r);
  double phi_star = 8 * kPi * (1 + s.beta) * (reg - field.robin_at_sink()) + lh;
  return {phi, phi_star};
}

double gamma_at_sink(const WeightField& field) {
  return 4 * kPi * (1 + field.beta()) * field.robin_at_sink() + field.log_h0_at_sink();
}

CriticalityResult criticality_check(const WeightField& field, double step) {
  const auto& s = field.sinks();
  const double dist = field.domain().distance_to_boundary(s.q0);
  if (step <= 0) step = 1e-3 * dist;
  if (step >= dist) throw InvalidInput("criticality_check: finite-difference stencil leaves the domain");
  auto ps = [&](const Point2& x) { return field.phi_star(x); };
  double gx = (ps(s.q0 + Point2(step, 0)) - ps(s.q0 - Point2(step, 0))) / (2 * step);
  double gy = (ps(s.q0 + Point2(0, step)) - ps(s.q0 - Point2(0, step))) / (2 * step);
  // size of Phi* on a circle of radius dist/2, as a gradient scale
  double scale = 0;
  for (int k = 0; k < 8; ++k) {
    Point2 x = s.q0 + 0.5 * dist * Point2(std::cos(k * kPi / 4), std::sin(k * kPi / 4));
    scale = std::max(scale, std::abs(ps(x)) / (0.5 * dist));
  }
  CriticalityResult r;
  r.grad_norm = std::hypot(gx, gy);
  r.tolerance = 1e-6 * (1 + scale);
  r.satisfied = r.grad_norm < r.tolerance;
  r.required = 1 + 2 * s.beta >= 0;
  r.borderline = 1 + 2 * s.beta == 0;
  r.status = !r.required ? CriticalityStatus::NotRequired
                         : (r.satisfied ? CriticalityStatus::Satisfied : CriticalityStatus::NotSatisfied);
  return r;
}

namespace {

struct QuadBuilder {
  const P1Space& space;
  const WeightField& field;
  const QuadratureOptions& opt;
  MassQuadrature& out;
  bool mesh_domain;
  Rule1D jacobi;

  void add(int t, const Point2& x, double w_geom, double log_extra) {
    const Mesh& m = space.mesh();
    const auto& tr = m.triangles[t];
    Eigen::Vector3d l = barycentric(m.nodes[tr[0]], m.nodes[tr[1]], m.nodes[tr[2]], x);
    double lh = mesh_domain ? field.log_h0(x, t, &l) : field.log_h0(x);
    double w = w_geom * std::exp(lh + log_extra);
    out.tri.push_back(t);
    out.bary.push_back(l);
    out.weight.push_back(w);
    out.x.push_back(x);
  }

  // Standard rule; |x-q0|^(2 beta) is smooth on the triangle.
  void regular(int t, const Point2& a, const Point2& b, const Point2& c) {
    double area = 0.5 * std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
    for (const auto& q : triangle_rule()) {
      Point2 x = q.bary[0] * a + q.bary[1] * b + q.bary[2] * c;
      add(t, x, q.w * area, 2 * field.beta() * std::log((x - field.sinks().q0).norm()));
    }
  }

  void subdivided(int t, const Point2& a, const Point2& b, const Point2& c, int depth) {
    if (depth == 0) return regular(t, a, b, c);
    Point2 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
    subdivided(t, a, ab, ca, depth - 1);
    subdivided(t, ab, b, bc, depth - 1);
    subdivided(t, ca, bc, c, depth - 1);
    subdivided(t, ab, bc, ca, depth - 1);
  }

  // Apex p = q0: x = p + s((1-t)(u-p) + t(v-p)); the factor s^(1+2beta)
  // from the Jacobian and |x-q0|^(2 beta) is the Jacobi weight.
  void polar(int t, const Point2& p, const Point2& u, const Point2& v) {
    double twice_area = std::abs((u - p).x() * (v - p).y() - (u - p).y() * (v - p).x());
    if (twice_area == 0) return;
    const Rule1D& leg = gauss_legendre(opt.angular);
    for (std::size_t j = 0; j < leg.x.size(); ++j) {
      double tt = leg.x[j];
      Point2 dir = (1 - tt) * (u - p) + tt * (v - p);
      double ell = dir.norm();
      for (std::size_t i = 0; i < jacobi.x.size(); ++i) {
        Point2 x = p + jacobi.x[i] * dir;
        add(t, x, jacobi.w[i] * leg.w[j] * twice_area, 2 * field.beta() * std::log(ell));
      }
    }
  }
};

}  // namespace

MassQuadrature build_mass_quadrature(const P1Space& space, const WeightField& field,
                                     const QuadratureOptions& options) {
  MassQuadrature out;
  QuadBuilder b{space, field, options, out, field.domain().kind() == DomainGeometry::Kind::Mesh,
                gauss_jacobi_left(options.radial, 1 + 2 * field.beta())};
  const Mesh& m = space.mesh();
  const Point2 q0 = field.sinks().q0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tr = m.triangles[t];
    const Point2 &a = m.nodes[tr[0]], &bb = m.nodes[tr[1]], &c = m.nodes[tr[2]];
    int apex = -1;
    for (int k = 0; k < 3; ++k)
      if ((m.nodes[tr[k]] - q0).norm() <= 1e-14 * (1 + q0.norm())) apex = k;
    if (apex >= 0) {
      b.polar(t, q0, m.nodes[tr[(apex + 1) % 3]], m.nodes[tr[(apex + 2) % 3]]);
      continue;
    }
    Eigen::Vector3d l = barycentric(a, bb, c, q0);
    if (l.minCoeff() >= 0) {
      b.polar(t, q0, a, bb);
      b.polar(t, q0, bb, c);
      b.polar(t, q0, c, a);
      continue;
    }
    double diam = m.diameter(t);
    Point2 centroid = (a + bb + c) / 3.0;
    bool near = (centroid - q0).norm() < 1.5 * diam;
    for (auto& p : field.sinks().positives) near = near || (centroid - p.q).norm() < 2 * diam;
    if (near)
      b.subdivided(t, a, bb, c, options.subdivision);
    else
      b.regular(t, a, bb, c);
  }
  return out;
}

Vec evaluate_at_points(const MassQuadrature& q, const Mesh& mesh, const Vec& f) {
  Vec out(q.size());
  for (int k = 0; k < q.size(); ++k) {
    const auto& tr = mesh.triangles[q.tri[k]];
    out[k] = q.bary[k][0] * f[tr[0]] + q.bary[k][1] * f[tr[1]] + q.bary[k][2] * f[tr[2]];
  }
  return out;
}

}  // namespace liouville
