#include "liouville/quadrature.hpp"

#include <map>
#include <mutex>

#include <Eigen/Eigenvalues>

#include "liouville/errors.hpp"

namespace liouville {

namespace {

// Golub-Welsch for the Jacobi weight (1-x)^alpha (1+x)^beta on [-1,1].
Rule1D golub_welsch(int n, double alpha, double beta) {
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  double ab = alpha + beta;
  for (int k = 0; k < n; ++k) {
    if (k == 0)
      T(0, 0) = (beta - alpha) / (ab + 2);
    else
      T(k, k) = (beta * beta - alpha * alpha) / ((2 * k + ab) * (2 * k + ab + 2));
    if (k + 1 < n) {
      int m = k + 1;
      double b2;
      if (m == 1)
        b2 = 4 * (1 + alpha) * (1 + beta) / ((2 + ab) * (2 + ab) * (3 + ab));
      else
        b2 = 4.0 * m * (m + alpha) * (m + beta) * (m + ab) /
             ((2 * m + ab) * (2 * m + ab) * (2 * m + ab + 1) * (2 * m + ab - 1));
      T(k, k + 1) = T(k + 1, k) = std::sqrt(b2);
    }
  }
  double mu0 = std::exp((ab + 1) * std::log(2.0) + std::lgamma(alpha + 1) + std::lgamma(beta + 1) -
                        std::lgamma(ab + 2));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  Rule1D r;
  for (int k = 0; k < n; ++k) {
    r.x.push_back(es.eigenvalues()(k));
    double v = es.eigenvectors()(0, k);
    r.w.push_back(mu0 * v * v);
  }
  return r;
}

}  // namespace

const Rule1D& gauss_legendre(int n) {
  static std::mutex m;
  static std::map<int, Rule1D> cache;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  if (n < 1) throw InvalidInput("quadrature order must be positive");
  Rule1D r = golub_welsch(n, 0, 0);
  for (int k = 0; k < n; ++k) r.x[k] = 0.5 * (r.x[k] + 1), r.w[k] *= 0.5;
  return cache.emplace(n, std::move(r)).first->second;
}

Rule1D gauss_jacobi_left(int n, double a) {
  if (!(a > -1)) throw InvalidInput("Jacobi exponent must exceed -1");
  Rule1D r = golub_welsch(n, 0, a);
  double scale = std::pow(2.0, -(a + 1));
  for (int k = 0; k < n; ++k) r.x[k] = 0.5 * (r.x[k] + 1), r.w[k] *= scale;
  return r;
}

const std::vector<TrianglePoint>& triangle_rule() {
  static const std::vector<TrianglePoint> rule = [] {
    const double a1 = 0.059715871789769820, b1 = 0.470142064105115090, w1 = 0.132394152788506181;
    const double a2 = 0.797426985353087322, b2 = 0.101286507323456339, w2 = 0.125939180544827153;
    return std::vector<TrianglePoint>{
        {{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.225},
        {{a1, b1, b1}, w1}, {{b1, a1, b1}, w1}, {{b1, b1, a1}, w1},
        {{a2, b2, b2}, w2}, {{b2, a2, b2}, w2}, {{b2, b2, a2}, w2},
    };
  }();
  return rule;
}

}  // namespace liouville
