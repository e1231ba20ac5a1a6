#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "liouville/errors.hpp"
#include "liouville/weights.hpp"

using namespace liouville;

namespace {

constexpr double kPi = std::numbers::pi;

WeightField centred(double beta) { return WeightField(DomainGeometry::disk({0, 0}, 1), {{0, 0}, beta, {}}); }

double quadrature_mass(const WeightField& f, int level) {
  P1Space V(make_disk_mesh({0, 0}, 1.0, level, f.sinks().q0));
  auto q = build_mass_quadrature(V, f);
  double s = 0;
  for (double w : q.weight) s += w;
  return s;
}

}  // namespace

TEST(Weight, CentredDiskValues) {
  auto f = centred(-0.5);
  EXPECT_NEAR(weight_at(f, {0.25, 0}), 4.0, 1e-14);
  EXPECT_NEAR(weight_at(f, {0, 1}), 1.0, 1e-14);
  EXPECT_THROW(weight_at(f, {0, 0}), InvalidInput);
}

TEST(Weight, PositiveSinkVanishesQuadratically) {
  WeightField f(DomainGeometry::disk({0, 0}, 1), {{0, 0}, -0.5, {{{0.5, 0}, 1.0}}});
  double r1 = weight_at(f, {0.5 + 1e-3, 0}) / 1e-6;
  double r2 = weight_at(f, {0.5 + 1e-4, 0}) / 1e-8;
  EXPECT_NEAR(r1 / r2, 1.0, 2e-3);
  EXPECT_GT(weight_at(f, {0.2, 0.3}), 0);
}

TEST(Phi, CentredDisk) {
  for (double beta : {-0.75, -0.5, -0.2}) {
    auto f = centred(beta);
    auto p = phi_potentials(f, {0.3, 0.4});
    EXPECT_NEAR(p.phi_star, 0.0, 1e-14);
    EXPECT_NEAR(p.phi, -(4 + 2 * beta) * std::log(0.5), 1e-12);
  }
}

TEST(Phi, DecompositionIdentity) {
  WeightField f(DomainGeometry::disk({0.1, 0}, 1.2), {{0.4, 0.2}, -0.6, {{{-0.3, 0.1}, 0.7}}});
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> U(-0.7, 0.7);
  for (int k = 0; k < 20; ++k) {
    Point2 x(0.1 + U(gen), U(gen));
    auto p = phi_potentials(f, x);
    EXPECT_NEAR(p.phi, p.phi_star - (4 + 2 * f.beta()) * std::log((x - f.sinks().q0).norm()), 1e-12);
  }
}

TEST(Phi, StarVanishesAtSink) {
  WeightField f(DomainGeometry::disk({0, 0}, 1), {{0.6, 0}, -0.25, {}});
  for (double h : {1e-2, 1e-4, 1e-6}) EXPECT_LT(std::abs(phi_potentials(f, {0.6 - h, h}).phi_star), 10 * h);
}

TEST(Gamma, DiskValues) {
  EXPECT_NEAR(gamma_at_sink(centred(-0.5)), 0.0, 1e-15);
  // radius 2: R(0,0) = log(2)/(2 pi), h0(0) = exp(-4 pi beta R(0,0))
  for (double beta : {-0.75, -0.3}) {
    WeightField f(DomainGeometry::disk({0, 0}, 2), {{0, 0}, beta, {}});
    double R = std::log(2.0) / (2 * kPi);
    EXPECT_NEAR(gamma_at_sink(f), 4 * kPi * (1 + beta) * R - 4 * kPi * beta * R, 1e-13);
  }
  // off centre: R(q,q) = log(1-|q|^2)/(2 pi) and log h0(q) = -4 pi beta R(q,q)
  WeightField g(DomainGeometry::disk({0, 0}, 1), {{0.6, 0}, -0.75, {}});
  EXPECT_NEAR(gamma_at_sink(g), 2 * std::log(0.64), 1e-13);
}

TEST(Criticality, Cases) {
  auto c = criticality_check(centred(-0.25));
  EXPECT_TRUE(c.required);
  EXPECT_TRUE(c.satisfied);
  EXPECT_LT(c.grad_norm, 1e-10);

  WeightField off(DomainGeometry::disk({0, 0}, 1), {{0.6, 0}, -0.25, {}});
  auto o = criticality_check(off);
  EXPECT_FALSE(o.satisfied);
  EXPECT_EQ(o.status, CriticalityStatus::NotSatisfied);
  // d/dx of (4+2 beta) log|1-qx| at x=q is -(4+2 beta) q/(1-q^2)
  EXPECT_NEAR(o.grad_norm, 3.5 * 0.6 / 0.64, 1e-5);

  WeightField deep(DomainGeometry::disk({0, 0}, 1), {{0.6, 0}, -0.75, {}});
  EXPECT_EQ(criticality_check(deep).status, CriticalityStatus::NotRequired);

  auto border = criticality_check(centred(-0.5));
  EXPECT_TRUE(border.borderline);
  EXPECT_THROW(criticality_check(off, 0.5), InvalidInput);
}

TEST(SinkConfig, Validation) {
  auto d = DomainGeometry::disk({0, 0}, 1);
  SinkConfig bad{{0, 0}, -1.5, {{{0, 0}, -1.0}, {{2, 0}, 1.0}}};
  auto p = bad.problems(&d);
  EXPECT_EQ(p.size(), 4u);
  EXPECT_THROW(WeightField(d, bad), InvalidInput);
}

TEST(MassQuadrature, CentredDiskIntegralOfH) {
  for (double beta : {-0.75, -0.5, -0.2}) {
    double exact = kPi / (1 + beta);
    EXPECT_LT(std::abs(quadrature_mass(centred(beta), 4) / exact - 1), 5e-3);
  }
}

// int_{unit disk} |x-q|^(2 beta) dx by polar integration about q with the
// exact ray length; the integrand in r is r^(2 beta + 1).
TEST(MassQuadrature, OffCentreIntegralOfPureSingularity) {
  double beta = -0.6;
  Point2 q(0.7, 0.1);
  double exact = 0;
  const int n = 4000;
  for (int k = 0; k < n; ++k) {
    double t = 2 * kPi * (k + 0.5) / n;
    Point2 d(std::cos(t), std::sin(t));
    double b = q.dot(d), c = q.squaredNorm() - 1;
    double ell = -b + std::sqrt(b * b - c);
    exact += std::pow(ell, 2 * beta + 2) / (2 * beta + 2) * 2 * kPi / n;
  }
  // weight with h0 divided out
  WeightField f(DomainGeometry::disk({0, 0}, 1), {q, beta, {}});
  P1Space V(make_disk_mesh({0, 0}, 1.0, 4, q));
  auto quad = build_mass_quadrature(V, f);
  double s = 0;
  for (int k = 0; k < quad.size(); ++k) s += quad.weight[k] * std::exp(-f.log_h0(quad.x[k]));
  EXPECT_LT(std::abs(s / exact - 1), 2e-3);
}

TEST(MassQuadrature, SinkInsideTriangleIsSplit) {
  // an ungraded mesh does not have q0 as a node
  WeightField f(DomainGeometry::disk({0, 0}, 1), {{0.013, 0.021}, -0.5, {}});
  P1Space V(make_disk_mesh({0, 0}, 1.0, 5));
  auto q = build_mass_quadrature(V, f);
  double s = 0, exact = 0;
  for (int k = 0; k < q.size(); ++k) s += q.weight[k] * std::exp(-f.log_h0(q.x[k]));
  const int n = 4000;
  for (int k = 0; k < n; ++k) {
    double t = 2 * kPi * (k + 0.5) / n;
    Point2 d(std::cos(t), std::sin(t));
    double b = f.sinks().q0.dot(d), c = f.sinks().q0.squaredNorm() - 1;
    exact += (-b + std::sqrt(b * b - c)) * 2 * kPi / n;
  }
  EXPECT_LT(std::abs(s / exact - 1), 2e-3);
}

TEST(Weight, MeshDomainAgreesWithDisk) {
  SinkConfig s{{0.3, 0.1}, -0.5, {{{-0.4, 0.2}, 1.0}}};
  WeightField exact(DomainGeometry::disk({0, 0}, 1), s);
  WeightField mesh(DomainGeometry::from_mesh(make_disk_mesh({0, 0}, 1.0, 4)), s);
  for (Point2 x : {Point2(0.5, 0.5), Point2(-0.2, -0.6), Point2(0.0, 0.3)})
    EXPECT_NEAR(mesh.log_weight(x) / exact.log_weight(x), 1.0, 1e-2);
  EXPECT_NEAR(gamma_at_sink(mesh), gamma_at_sink(exact), 1e-2);
}
