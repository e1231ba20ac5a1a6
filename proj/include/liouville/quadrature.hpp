#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Core>

namespace liouville {

struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;
};

// Gauss-Legendre rule on [0,1].
const Rule1D& gauss_legendre(int n);

// Gauss rule on [0,1] for the weight s^a, a > -1 (Golub-Welsch).
Rule1D gauss_jacobi_left(int n, double a);

struct TrianglePoint {
  std::array<double, 3> bary;
  double w;  // weights sum to 1 (multiply by the area)
};

// Degree-5 seven point rule.
const std::vector<TrianglePoint>& triangle_rule();

// Adaptive integration of f over the triangle (a,b,c).  f is called as
// f(x) for points x inside the triangle.  Subdivides into four until the
// 7-point value and the sum over its children agree to tol.
template <class F>
double integrate_triangle_adaptive(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                   const Eigen::Vector2d& c, F&& f, double tol, int max_depth,
                                   double* err = nullptr);

namespace detail {

template <class F>
double triangle_sum(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                    F& f) {
  double area = 0.5 * std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
  double s = 0;
  for (const auto& q : triangle_rule()) s += q.w * f(q.bary[0] * a + q.bary[1] * b + q.bary[2] * c);
  return s * area;
}

template <class F>
double adaptive(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c, F& f,
                double whole, double tol, int depth, double& err) {
  Eigen::Vector2d ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
  double s1 = triangle_sum(a, ab, ca, f), s2 = triangle_sum(ab, b, bc, f);
  double s3 = triangle_sum(ca, bc, c, f), s4 = triangle_sum(ab, bc, ca, f);
  double parts = s1 + s2 + s3 + s4;
  if (depth <= 0 || std::abs(parts - whole) <= tol) {
    err += std::abs(parts - whole) / 63.0;
    return parts;
  }
  double t = 0.25 * tol;
  return adaptive(a, ab, ca, f, s1, t, depth - 1, err) + adaptive(ab, b, bc, f, s2, t, depth - 1, err) +
         adaptive(ca, bc, c, f, s3, t, depth - 1, err) + adaptive(ab, bc, ca, f, s4, t, depth - 1, err);
}

}  // namespace detail

template <class F>
double integrate_triangle_adaptive(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                   const Eigen::Vector2d& c, F&& f, double tol, int max_depth,
                                   double* err) {
  double e = 0;
  double whole = detail::triangle_sum(a, b, c, f);
  double v = detail::adaptive(a, b, c, f, whole, tol, max_depth, e);
  if (err) *err += e;
  return v;
}

}  // namespace liouville
