#include "liouville/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "liouville/errors.hpp"
#include "liouville/linalg.hpp"

namespace liouville {

LinearizedOperator assemble_linearized(const Solution& sol) {
  if (!sol.converged || !sol.problem) throw Refused("assemble_linearized: solution is not converged");
  const Problem& p = *sol.problem;
  LinearizedOperator op;
  op.problem = sol.problem;
  op.rho = sol.rho;
  Vec d = p.density(sol.values);
  const SpMat& P = p.point_map();
  op.weight = P.transpose() * d.asDiagonal() * P;
  op.mean = P.transpose() * d;
  op.local = p.space().stiffness() - sol.rho * op.weight;
  return op;
}

namespace {

// Gram-Schmidt in the M inner product, twice for stability.
void orthonormalize(Eigen::MatrixXd& Q, const SpMat& M) {
  for (int pass = 0; pass < 2; ++pass)
    for (int j = 0; j < Q.cols(); ++j) {
      Vec Mq = M * Q.col(j);
      for (int i = 0; i < j; ++i) Q.col(j) -= Q.col(i) * Q.col(i).dot(M * Q.col(j));
      Mq = M * Q.col(j);
      double n = std::sqrt(std::max(Q.col(j).dot(Mq), 0.0));
      if (!(n > 0)) throw NoConvergence("eigen-iteration: subspace collapsed");
      Q.col(j) /= n;
    }
}

}  // namespace

SpectralReport smallest_eigenvalues(const Solution& sol, int k, const SpectralOptions& o) {
  if (k < 1) throw InvalidInput("smallest_eigenvalues: k must be >= 1");
  LinearizedOperator op = assemble_linearized(sol);
  const int n = static_cast<int>(op.local.rows());
  if (k > n) throw InvalidInput("smallest_eigenvalues: k exceeds the number of dofs");
  const int m = std::min(n, k + 4);

  RankOneFactor solver(SpMat(op.local - o.shift * op.weight), op.mean, op.rho);

  std::mt19937 rng(o.seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd Q(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) Q(i, j) = gauss(rng);
  orthonormalize(Q, op.weight);

  SpectralReport rep;
  rep.formulation = "L phi = nu M_K phi, L = A - rho M_K + rho b b', M_K = K-weighted mass";
  rep.rho = sol.rho;
  Eigen::VectorXd nu;
  std::vector<double> res(k, INFINITY);
  for (int it = 1; it <= o.max_iters; ++it) {
    Eigen::MatrixXd Z(n, m);
    for (int j = 0; j < m; ++j) Z.col(j) = solver.solve(op.weight * Q.col(j));
    orthonormalize(Z, op.weight);
    // Rayleigh-Ritz; Z is M_K-orthonormal
    Eigen::MatrixXd LZ(n, m);
    for (int j = 0; j < m; ++j) LZ.col(j) = op.apply(Z.col(j));
    Eigen::MatrixXd T = Z.transpose() * LZ;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (T + T.transpose()));
    nu = es.eigenvalues();
    Q = Z * es.eigenvectors();
    // residual in the M_K norm after one more inverse step:
    // |q - (nu - shift) (L - shift M_K)^-1 M_K q|
    bool done = true;
    for (int j = 0; j < k; ++j) {
      Vec r = Q.col(j) - (nu[j] - o.shift) * solver.solve(op.weight * Q.col(j));
      res[j] = std::sqrt(std::max(r.dot(op.weight * r), 0.0));
      done = done && res[j] < o.tol;
    }
    rep.iterations = it;
    if (done) break;
    if (it == o.max_iters) {
      double worst = *std::max_element(res.begin(), res.end());
      throw NoConvergence("eigen-iteration stagnated after " + std::to_string(it) +
                          " iterations, worst relative residual " + std::to_string(worst));
    }
  }
  const Problem& p = *sol.problem;
  for (int j = 0; j < k; ++j) {
    Vec f = Q.col(j);
    // deterministic sign: largest entry positive
    Eigen::Index at;
    f.cwiseAbs().maxCoeff(&at);
    if (f[at] < 0) f = -f;
    rep.eigenvalues.push_back(nu[j]);
    rep.eigenfields.push_back(p.space().to_nodes(f));
    rep.residuals.push_back(res[j]);
  }
  return rep;
}

BranchSpectrum scan_branch_spectrum(const Branch& branch, int k, const SpectralOptions& options) {
  BranchSpectrum out;
  for (std::size_t i = 0; i < branch.points.size(); ++i) {
    out.reports.push_back(smallest_eigenvalues(branch.points[i], k, options));
    if (i == 0) continue;
    double a = out.reports[i - 1].eigenvalues[0], b = out.reports[i].eigenvalues[0];
    if ((a > 0) != (b > 0))
      out.events.push_back("nu_1 changes sign between points " + std::to_string(i - 1) + " (rho " +
                           std::to_string(branch.points[i - 1].rho) + ", nu_1 " + std::to_string(a) +
                           ") and " + std::to_string(i) + " (rho " + std::to_string(branch.points[i].rho) +
                           ", nu_1 " + std::to_string(b) + ")");
  }
  return out;
}

double kernel_correlation(const Solution& sol, const SpectralReport& report) {
  if (report.eigenfields.empty()) throw InvalidInput("kernel_correlation: report has no eigenfields");
  if (!sol.problem) throw InvalidInput("kernel_correlation: solution has no problem");
  const Problem& p = *sol.problem;
  // below this height there is no bubble to compare with
  constexpr double kMinHeight = 3.0;
  if (!(sol.max_value > kMinHeight))
    throw Refused("kernel_correlation: solution is not near blow-up (max " + std::to_string(sol.max_value) + ")");
  const double b1 = 1 + p.beta();
  double log_mass = 0;
  Vec d = p.density(sol.values, &log_mass);
  const double lambda = sol.sink_value() - log_mass;
  const double lc = std::log(sol.rho) + p.field().log_h0_at_sink() + lambda - std::log(8 * b1 * b1);
  if (!std::isfinite(lc)) throw NoConvergence("kernel_correlation: scale fit failed");

  const auto& q = p.quadrature();
  const Point2 q0 = p.sinks().q0;
  Vec phi = p.point_map() * p.space().to_dofs(report.eigenfields.front());
  double at_sink = p.value_at_sink(report.eigenfields.front());
  double orient = at_sink != 0 ? at_sink : d.dot(phi);
  if (orient < 0) phi = -phi;
  Vec ker(q.size());
  for (int i = 0; i < q.size(); ++i) {
    double r = (q.x[i] - q0).norm();
    // c r^a through logs; tanh form avoids inf/inf
    double t = lc + 2 * b1 * std::log(std::max(r, 1e-300));
    ker[i] = -std::tanh(0.5 * t);
  }
  double mp = d.dot(phi), mk = d.dot(ker);
  Vec a = phi.array() - mp, b = ker.array() - mk;
  double cov = d.dot(a.cwiseProduct(b));
  double va = d.dot(a.cwiseProduct(a)), vb = d.dot(b.cwiseProduct(b));
  if (!(va > 0 && vb > 0)) throw NoConvergence("kernel_correlation: degenerate profile");
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

}  // namespace liouville
