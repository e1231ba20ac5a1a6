#include "liouville/linalg.hpp"

#include <cmath>

#include <Eigen/SparseLU>

#include "liouville/errors.hpp"

namespace liouville {

namespace {

constexpr double kRelTol = 1e-10;

SpMat bordered(const SpMat& K, const Vec& u, const Vec& c, double corner) {
  const int n = static_cast<int>(K.rows());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(K.nonZeros() + 2 * n + 1);
  for (int k = 0; k < K.outerSize(); ++k)
    for (SpMat::InnerIterator it(K, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (int i = 0; i < n; ++i) {
    if (u[i] != 0) t.emplace_back(i, n, u[i]);
    if (c[i] != 0) t.emplace_back(n, i, c[i]);
  }
  if (corner != 0) t.emplace_back(n, n, corner);
  SpMat B(n + 1, n + 1);
  B.setFromTriplets(t.begin(), t.end());
  return B;
}

Vec lu_solve(const SpMat& M, const Vec& rhs) {
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(M);
  lu.factorize(M);
  if (lu.info() != Eigen::Success) throw NoConvergence("sparse LU factorization failed (singular Jacobian)");
  Vec x = lu.solve(rhs);
  Vec r = rhs - M * x;
  x += lu.solve(r);
  return x;
}

struct Ldlt {
  Eigen::SimplicialLDLT<SpMat> f;
  bool ok;
  explicit Ldlt(const SpMat& K) : f(K), ok(f.info() == Eigen::Success) {}
  // Solve with one refinement step; false when the result is inaccurate.
  bool solve(const SpMat& K, const Vec& rhs, Vec& x) const {
    if (!ok) return false;
    x = f.solve(rhs);
    Vec r = rhs - K * x;
    x += f.solve(r);
    r = rhs - K * x;
    double scale = rhs.norm() + 1e-300;
    return x.allFinite() && r.norm() <= kRelTol * scale * 1e2;
  }
};

}  // namespace

Vec solve_symmetric(const SpMat& K, const Vec& rhs) {
  Ldlt l(K);
  Vec x;
  if (l.solve(K, rhs, x)) return x;
  return lu_solve(K, rhs);
}

Vec solve_rank_one(const SpMat& K, const Vec& b, double sigma, const Vec& rhs) {
  Ldlt l(K);
  Vec y1, y2;
  if (l.solve(K, rhs, y1) && l.solve(K, b, y2)) {
    double den = 1 + sigma * b.dot(y2);
    if (std::abs(den) > 1e-8 * (1 + std::abs(sigma * b.dot(y2)))) {
      Vec x = y1 - y2 * (sigma * b.dot(y1) / den);
      Vec r = rhs - K * x - sigma * b * b.dot(x);
      if (r.norm() <= 1e-8 * (rhs.norm() + 1e-300)) return x;
    }
  }
  // K x + b t = rhs, b'x - t/sigma = 0
  const int n = static_cast<int>(K.rows());
  Vec r(n + 1);
  r << rhs, 0.0;
  Vec z = lu_solve(bordered(K, b, b, -1 / sigma), r);
  return z.head(n);
}

struct RankOneFactor::Impl {
  SpMat K;
  Vec b;
  double sigma;
  std::unique_ptr<Ldlt> ldlt;
  Vec y2;
  double den = 0;
  bool sm = false;
  mutable std::unique_ptr<Eigen::SparseLU<SpMat>> lu;
  mutable SpMat B;

  const Eigen::SparseLU<SpMat>& bordered_lu() const {
    if (!lu) {
      lu = std::make_unique<Eigen::SparseLU<SpMat>>();
      B = bordered(K, b, b, -1 / sigma);
      lu->analyzePattern(B);
      lu->factorize(B);
      if (lu->info() != Eigen::Success) throw NoConvergence("sparse LU factorization failed (singular operator)");
    }
    return *lu;
  }
};

RankOneFactor::RankOneFactor(SpMat K, Vec b, double sigma) : impl_(std::make_unique<Impl>()) {
  Impl& m = *impl_;
  m.K = std::move(K);
  m.b = std::move(b);
  m.sigma = sigma;
  m.ldlt = std::make_unique<Ldlt>(m.K);
  if (sigma == 0) {
    m.sm = m.ldlt->ok;
    m.den = 1;
    return;
  }
  if (m.ldlt->solve(m.K, m.b, m.y2)) {
    m.den = 1 + sigma * m.b.dot(m.y2);
    m.sm = std::abs(m.den) > 1e-8 * (1 + std::abs(sigma * m.b.dot(m.y2)));
  }
}

RankOneFactor::~RankOneFactor() = default;

Vec RankOneFactor::solve(const Vec& rhs) const {
  const Impl& m = *impl_;
  if (m.sm) {
    Vec y1;
    if (m.ldlt->solve(m.K, rhs, y1)) {
      if (m.sigma == 0) return y1;
      Vec x = y1 - m.y2 * (m.sigma * m.b.dot(y1) / m.den);
      Vec r = rhs - m.K * x - m.sigma * m.b * m.b.dot(x);
      if (r.norm() <= 1e-8 * (rhs.norm() + 1e-300)) return x;
    }
  }
  const int n = static_cast<int>(m.K.rows());
  if (m.sigma == 0) return lu_solve(m.K, rhs);
  Vec r(n + 1);
  r << rhs, 0.0;
  const auto& lu = m.bordered_lu();
  Vec z = lu.solve(r);
  z += lu.solve(r - m.B * z);
  return z.head(n);
}

std::pair<Vec, double> solve_bordered(const SpMat& K, const Vec& u, const Vec& c, const Vec& f,
                                      double g) {
  const int n = static_cast<int>(K.rows());
  Ldlt l(K);
  Vec y1, y2;
  if (l.solve(K, f, y1) && l.solve(K, u, y2)) {
    double den = c.dot(y2);
    if (std::abs(den) > 1e-10 * c.norm() * y2.norm()) {
      double t = (c.dot(y1) - g) / den;
      Vec x = y1 - t * y2;
      Vec r = f - K * x - u * t;
      double rg = g - c.dot(x);
      if (r.norm() <= 1e-8 * (f.norm() + std::abs(t) * u.norm() + 1e-300) &&
          std::abs(rg) <= 1e-8 * (std::abs(g) + c.norm() * x.norm() + 1e-300))
        return {x, t};
    }
  }
  Vec r(n + 1);
  r << f, g;
  Vec z = lu_solve(bordered(K, u, c, 0), r);
  return {z.head(n), z[n]};
}

}  // namespace liouville
