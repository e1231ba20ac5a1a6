#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace liouville {

using Point2 = Eigen::Vector2d;

struct Mesh {
  std::vector<Point2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<char> boundary;  // per node, 1 on the boundary loop

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  double area(int t) const;
  double diameter(int t) const;
  double total_area() const;

  std::vector<int> boundary_nodes() const;
  // Boundary edges oriented so that the domain lies on their left.
  std::vector<std::array<int, 2>> boundary_edges() const;

  // Index of the node at exactly x (within tol), or -1.
  int find_node(const Point2& x, double tol = 1e-13) const;

  // Throws InvalidInput when orientation, conformity or the boundary loop
  // is broken.
  void validate() const;
};

struct MeshOptions {
  // Nodes per ring in the geometrically graded core; 0 picks a value from
  // the level.
  int angular = 0;
  // Radius of the innermost ring around the grading point.
  double min_radius = 1e-8;
};

// Triangulation of the disk with mesh size radius/2^(level+1).  With
// grade_at the mesh is a ring rosette around that point whose ring radii
// shrink geometrically down to options.min_radius; grade_at is a node.
Mesh make_disk_mesh(const Point2& center, double radius, int level,
                    std::optional<Point2> grade_at = std::nullopt,
                    const MeshOptions& options = {});

Mesh read_mesh(const std::string& path);
void write_mesh(const Mesh& mesh, const std::string& path);

// Quadtree over the triangles for point location.
class MeshLocator {
 public:
  explicit MeshLocator(const Mesh& mesh);

  // Triangle containing x (with a small tolerance) and the barycentric
  // coordinates of x in it; returns -1 when x is outside.
  int locate(const Point2& x, Eigen::Vector3d* bary = nullptr) const;

 private:
  struct Cell {
    Point2 lo;
    double size;
    int child = -1;  // index of the first of four children
    std::vector<int> tris;
  };
  void split(int cell, int depth);

  const Mesh* mesh_;
  std::vector<Cell> cells_;
  std::vector<std::array<Point2, 2>> boxes_;
};

Eigen::Vector3d barycentric(const Point2& a, const Point2& b, const Point2& c,
                            const Point2& x);

}  // namespace liouville
