#pragma once

#include <memory>
#include <utility>

#include "liouville/fem.hpp"

namespace liouville {

// Solves with a symmetric (possibly indefinite) sparse K.  An LDL' solve is
// checked against the true residual, refined, and replaced by a sparse LU
// solve when it is not accurate.
Vec solve_symmetric(const SpMat& K, const Vec& rhs);

// (K + sigma b b') x = rhs by Sherman-Morrison on top of K, with the
// bordered system [K b; b' -1/sigma] as the fallback.
Vec solve_rank_one(const SpMat& K, const Vec& b, double sigma, const Vec& rhs);

// Factorization of K + sigma b b' kept for repeated solves.
class RankOneFactor {
 public:
  RankOneFactor(SpMat K, Vec b, double sigma);
  ~RankOneFactor();
  Vec solve(const Vec& rhs) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// [K u; c' 0] (x, t) = (f, g).
std::pair<Vec, double> solve_bordered(const SpMat& K, const Vec& u, const Vec& c, const Vec& f,
                                      double g);

}  // namespace liouville
