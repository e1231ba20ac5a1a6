#pragma once

#include <memory>

#include "liouville/fem.hpp"
#include "liouville/mesh.hpp"

namespace liouville {

struct Disk {
  Point2 center{0, 0};
  double radius = 1.0;
};

struct GreenEvaluation {
  double value;         // G(x,y)
  double regular_part;  // R(x,y)
};

// A simply connected planar domain with Green function services.  Disks
// use the method of images; meshes compute the regular part as the P1
// harmonic extension of (1/2pi) log|x-y| from the boundary.
class DomainGeometry {
 public:
  enum class Kind { AnalyticDisk, Mesh };

  static DomainGeometry disk(const Point2& center, double radius);
  static DomainGeometry from_mesh(Mesh mesh);

  Kind kind() const { return kind_; }
  const Disk& disk() const;
  // Mesh kind only: the domain triangulation and its P1 space.
  const Mesh& mesh() const;
  const P1Space& space() const;

  // x is inside the closed domain (up to tol).
  bool contains(const Point2& x, double tol = 1e-12) const;
  double distance_to_boundary(const Point2& x) const;
  // Distance from an interior point x to the boundary along unit direction d.
  double ray_exit(const Point2& x, const Point2& d) const;
  double boundary_length() const;

  double regular_part(const Point2& x, const Point2& y) const;
  // Gradient of R(., y) at x.
  Point2 regular_part_gradient(const Point2& x, const Point2& y) const;

  // Nodal values of R(., y) on the domain mesh (mesh kind), memoized.
  std::shared_ptr<const Vec> regular_part_nodal(const Point2& y) const;

 private:
  struct MeshData;
  Kind kind_ = Kind::AnalyticDisk;
  Disk disk_;
  std::shared_ptr<MeshData> data_;
};

GreenEvaluation green(const DomainGeometry& domain, const Point2& x, const Point2& y);
double robin(const DomainGeometry& domain, const Point2& x);

}  // namespace liouville
