#pragma once

#include <string>
#include <vector>

#include "liouville/solver.hpp"

namespace liouville {

// Discrete linearization at a solution, on interior dofs:
//   a(phi, psi) = int grad phi grad psi - rho int K phi psi + rho (int K phi)(int K psi)
// with K = H e^w / int H e^w.  The matrix is A - rho M_K + rho b b', b = M_K 1.
struct LinearizedOperator {
  SpMat local;    // A - rho M_K
  SpMat weight;   // M_K, the K-weighted mass
  Vec mean;       // b: b'x = int K phi
  double rho = 0;
  ProblemPtr problem;

  Vec apply(const Vec& x) const { return local * x + rho * mean * mean.dot(x); }
  double form(const Vec& x, const Vec& y) const { return x.dot(apply(y)); }
};

LinearizedOperator assemble_linearized(const Solution& sol);

struct SpectralOptions {
  double shift = 0;
  double tol = 1e-9;  // see SpectralReport::residuals
  int max_iters = 400;
  unsigned seed = 20240611;
};

struct SpectralReport {
  std::vector<double> eigenvalues;  // ascending
  std::vector<Vec> eigenfields;     // node fields, M_K-orthonormal
  std::vector<double> residuals;    // |phi - nu L^-1 M_K phi| in the M_K norm
  std::string formulation;
  double rho = 0;
  int iterations = 0;
};

// First k eigenpairs of L phi = nu M_K phi by shift-invert subspace
// iteration with k + 4 vectors.  The iteration favours eigenvalues nearest
// the shift, so a negative nu_1 is found when it is among those.
SpectralReport smallest_eigenvalues(const Solution& sol, int k = 3, const SpectralOptions& options = {});

// Spectra along a branch.  A sign change of nu_1 between neighbouring
// points is reported as an event, never dropped.
struct BranchSpectrum {
  std::vector<SpectralReport> reports;
  std::vector<std::string> events;
};
BranchSpectrum scan_branch_spectrum(const Branch& branch, int k = 1, const SpectralOptions& options = {});

// K-weighted correlation of the first eigenfield with the scaling kernel
// (1 - c r^(2 b1)) / (1 + c r^(2 b1)), r = |x - q0|, c = rho h0(q0) e^lambda / (8 b1^2),
// lambda = w(q0) - log int H e^w.  The eigenfield is oriented positive at q0.
double kernel_correlation(const Solution& sol, const SpectralReport& report);

}  // namespace liouville
