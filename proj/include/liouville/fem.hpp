#pragma once

#include <memory>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "liouville/mesh.hpp"

namespace liouville {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// P1 elements with homogeneous Dirichlet data on the boundary loop.
class P1Space {
 public:
  explicit P1Space(Mesh mesh);

  const Mesh& mesh() const { return mesh_; }
  int num_dofs() const { return static_cast<int>(node_of_dof_.size()); }
  int dof(int node) const { return dof_of_node_[node]; }
  int node(int dof) const { return node_of_dof_[dof]; }

  // Stiffness on interior dofs, and the interior-boundary coupling block.
  const SpMat& stiffness() const { return A_; }
  const SpMat& coupling() const { return A_ib_; }
  // Cached factorization of stiffness().
  const Eigen::SimplicialLDLT<SpMat>& laplace_solver() const { return *lap_; }

  // Node field (zero on the boundary) <-> dof vector.
  Vec to_nodes(const Vec& dofs) const;
  Vec to_dofs(const Vec& nodes) const;

  // Discrete harmonic extension of boundary data g (indexed by node; only
  // boundary entries are read).  Returns a full node field.
  Vec harmonic_extension(const Vec& g) const;

  // Gradient of the P1 interpolant of a node field on triangle t.
  Eigen::Vector2d gradient(const Vec& node_field, int t) const;
  // Dirichlet energy integral of a node field.
  double dirichlet(const Vec& node_field) const;

  // Per-triangle gradients of the barycentric coordinates.
  const std::vector<Eigen::Matrix<double, 3, 2>>& shape_gradients() const { return grads_; }

 private:
  Mesh mesh_;
  std::vector<int> dof_of_node_, node_of_dof_, bnode_index_;
  std::vector<int> boundary_list_;
  std::vector<Eigen::Matrix<double, 3, 2>> grads_;
  SpMat A_, A_ib_;
  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> lap_;
};

}  // namespace liouville
