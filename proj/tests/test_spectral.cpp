#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "liouville/errors.hpp"
#include "liouville/oracle_disk.hpp"
#include "liouville/spectral.hpp"

using namespace liouville;

namespace {

constexpr double kPi = std::numbers::pi;
// zeros of J_0 and the first zero of J_2
constexpr double kJ01 = 2.404825557695773;
constexpr double kJ02 = 5.520078110286311;
constexpr double kJ21 = 5.135622301840683;

ProblemPtr disk(double beta, int level, Point2 q0 = {0, 0}) {
  SolverOptions o;
  o.level = level;
  return make_problem(DomainGeometry::disk({0, 0}, 1), {q0, beta, {}}, o);
}

Vec random_vec(int n, unsigned seed) {
  std::mt19937 g(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = u(g);
  return v;
}

}  // namespace

TEST(Linearized, ZeroRhoIsLaplacian) {
  auto p = disk(-0.5, 4);
  auto s = solve_mean_field(p, 0.0);
  auto op = assemble_linearized(s);
  const SpMat& A = p->space().stiffness();
  Vec x = random_vec(A.rows(), 1);
  EXPECT_EQ((op.apply(x) - A * x).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Linearized, SymmetricForm) {
  auto p = disk(-0.5, 4);
  auto op = assemble_linearized(solve_mean_field(p, 2 * kPi));
  double worst = 0;
  for (unsigned k = 0; k < 5; ++k) {
    Vec x = random_vec(op.local.rows(), 10 + k), y = random_vec(op.local.rows(), 20 + k);
    double a = op.form(x, y), b = op.form(y, x);
    worst = std::max(worst, std::abs(a - b) / (std::abs(a) + std::abs(b)));
  }
  EXPECT_LT(worst, 1e-12);
}

// For phi = 1 the nonlocal part is rho b (b'1 - 1): zero except for the
// strip of elements touching the boundary, where the P1 field drops to 0.
TEST(Linearized, ConstantAction) {
  auto p = disk(-0.5, 4);
  const double rho = 2 * kPi;
  auto op = assemble_linearized(solve_mean_field(p, rho));
  const int n = op.local.rows();
  Vec one = Vec::Ones(n);
  Vec nonlocal = op.apply(one) - p->space().stiffness() * one;
  const double strip = 1 - op.mean.dot(one);
  EXPECT_GT(strip, 0);
  EXPECT_LT(strip, 0.05);
  const Mesh& m = p->mesh();
  std::vector<char> near(m.num_nodes(), 0);
  for (const auto& t : m.triangles)
    if (m.boundary[t[0]] || m.boundary[t[1]] || m.boundary[t[2]])
      for (int v : t) near[v] = 1;
  for (int i = 0; i < n; ++i)
    if (!near[p->space().node(i)]) EXPECT_NEAR(nonlocal[i], -rho * op.mean[i] * strip, 1e-14);
}

TEST(Linearized, RefusesUnconverged) {
  auto p = disk(-0.5, 3);
  auto s = solve_mean_field(p, 1.0);
  s.converged = false;
  EXPECT_THROW(assemble_linearized(s), Refused);
  EXPECT_THROW(smallest_eigenvalues(solve_mean_field(p, 1.0), 0), InvalidInput);
}

// At rho = 0, -Delta phi = nu (1+beta)/pi r^(2 beta) phi; with t = r^(1+beta)
// the angular mode n solves Bessel's equation of order n/(1+beta), so
// nu = pi (1+beta) j^2 for the zeros j of that Bessel function.
TEST(Spectrum, ZeroRhoBessel) {
  auto nu = [](double beta, double j) { return kPi * (1 + beta) * j * j; };
  auto half = smallest_eigenvalues(solve_mean_field(disk(-0.5, 5), 0.0), 3);
  EXPECT_NEAR(half.eigenvalues[0], nu(-0.5, kJ01), 1e-3 * nu(-0.5, kJ01));
  // order 2: the cos/sin pair
  EXPECT_NEAR(half.eigenvalues[1], nu(-0.5, kJ21), 2e-3 * nu(-0.5, kJ21));
  EXPECT_NEAR(half.eigenvalues[2], nu(-0.5, kJ21), 2e-3 * nu(-0.5, kJ21));
  // order 4 lies above the second radial mode
  auto quarter = smallest_eigenvalues(solve_mean_field(disk(-0.75, 5), 0.0), 2);
  EXPECT_NEAR(quarter.eigenvalues[0], nu(-0.75, kJ01), 1e-3 * nu(-0.75, kJ01));
  EXPECT_NEAR(quarter.eigenvalues[1], nu(-0.75, kJ02), 2e-3 * nu(-0.75, kJ02));
  for (double r : half.residuals) EXPECT_LT(r, 1e-9);
}

TEST(Spectrum, EigenfieldsAreWeightOrthonormal) {
  auto p = disk(-0.5, 4);
  auto s = solve_mean_field(p, 2 * kPi);
  auto rep = smallest_eigenvalues(s, 3);
  auto op = assemble_linearized(s);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Vec a = p->space().to_dofs(rep.eigenfields[i]), b = p->space().to_dofs(rep.eigenfields[j]);
      EXPECT_NEAR(a.dot(op.weight * b), i == j ? 1.0 : 0.0, 1e-8);
    }
}

TEST(Spectrum, Deterministic) {
  auto p = disk(-0.5, 3);
  auto s = solve_mean_field(p, 5.0);
  auto a = smallest_eigenvalues(s, 2), b = smallest_eigenvalues(s, 2);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
  EXPECT_EQ(a.eigenfields[0], b.eigenfields[0]);
}

TEST(Spectrum, PositiveOnSubcriticalBranches) {
  std::vector<std::pair<ProblemPtr, std::vector<double>>> cases = {
      {disk(-0.5, 4), {kPi, 2 * kPi, 3 * kPi, 3.6 * kPi, 3.9 * kPi}},
      {disk(-0.75, 4), {kPi, 1.8 * kPi}},
      {disk(-0.75, 4, {0.9, 0}), {2.0, 4.0, 6.0}},
  };
  for (auto& [p, grid] : cases) {
    auto br = continue_in_rho(p, grid);
    ASSERT_FALSE(br.failure);
    auto scan = scan_branch_spectrum(br, 1);
    EXPECT_TRUE(scan.events.empty());
    for (const auto& r : scan.reports) EXPECT_GT(r.eigenvalues[0], 0) << r.rho;
  }
}

TEST(Spectrum, ContinuityInRho) {
  auto p = disk(-0.5, 4);
  auto nu1 = [&](double rho) { return smallest_eigenvalues(solve_mean_field(p, rho), 1).eigenvalues[0]; };
  const double rho = 2 * kPi, base = nu1(rho);
  std::vector<double> jumps;
  for (double d : {0.4, 0.1, 0.025}) jumps.push_back(std::abs(nu1(rho + d) - base));
  EXPECT_GT(jumps[0], 2 * jumps[1]);
  EXPECT_GT(jumps[1], 2 * jumps[2]);
  EXPECT_LT(jumps[2], 0.05);
}

TEST(Spectrum, ScanReportsSignChange) {
  // the large-height family at an off-centre second-kind sink carries a
  // negative direction; crossing from the minimal branch must be reported
  SolverOptions o;
  o.level = 4;
  auto p = make_problem(DomainGeometry::disk({0, 0}, 1), {{0.9, 0}, -0.75, {}}, o);
  auto br = continue_in_amplitude(p, {0.2, 8.0});
  ASSERT_FALSE(br.failure);
  auto scan = scan_branch_spectrum(br, 1);
  ASSERT_EQ(scan.reports.size(), 2u);
  EXPECT_GT(scan.reports[0].eigenvalues[0], 0);
  EXPECT_LT(scan.reports[1].eigenvalues[0], 0);
  EXPECT_EQ(scan.events.size(), 1u);
}

TEST(KernelCorrelation, OracleSeededBubble) {
  auto p = disk(-0.5, 5);
  auto ref = DiskState::from_gamma(-0.5, 1e3);
  Vec guess(p->mesh().num_nodes());
  for (int i = 0; i < guess.size(); ++i) guess[i] = disk_solution(ref, p->mesh().nodes[i]);
  auto s = solve_mean_field(p, ref.rho, guess);
  auto rep = smallest_eigenvalues(s, 1);
  double c = kernel_correlation(s, rep);
  EXPECT_GT(std::abs(c), 0.99);
  rep.eigenfields[0] = -rep.eigenfields[0];
  EXPECT_EQ(kernel_correlation(s, rep), c);
}

TEST(KernelCorrelation, RefusedAwayFromBlowUp) {
  auto p = disk(-0.5, 3);
  auto s = solve_mean_field(p, 0.0);
  auto rep = smallest_eigenvalues(s, 1);
  EXPECT_THROW(kernel_correlation(s, rep), Refused);
  EXPECT_THROW(kernel_correlation(s, SpectralReport{}), InvalidInput);
}
