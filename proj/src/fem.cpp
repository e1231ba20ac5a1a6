#include "liouville/fem.hpp"

#include "liouville/errors.hpp"

namespace liouville {

P1Space::P1Space(Mesh mesh) : mesh_(std::move(mesh)) {
  const int n = mesh_.num_nodes();
  dof_of_node_.assign(n, -1);
  bnode_index_.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (mesh_.boundary[i]) {
      bnode_index_[i] = static_cast<int>(boundary_list_.size());
      boundary_list_.push_back(i);
    } else {
      dof_of_node_[i] = static_cast<int>(node_of_dof_.size());
      node_of_dof_.push_back(i);
    }
  }
  if (node_of_dof_.empty()) throw InvalidInput("mesh has no interior nodes");

  grads_.resize(mesh_.num_triangles());
  std::vector<Eigen::Triplet<double>> tii, tib;
  for (int t = 0; t < mesh_.num_triangles(); ++t) {
    const auto& tr = mesh_.triangles[t];
    const Point2& a = mesh_.nodes[tr[0]];
    const Point2& b = mesh_.nodes[tr[1]];
    const Point2& c = mesh_.nodes[tr[2]];
    double det = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    Eigen::Matrix<double, 3, 2> g;
    g.row(0) << (b.y() - c.y()) / det, (c.x() - b.x()) / det;
    g.row(1) << (c.y() - a.y()) / det, (a.x() - c.x()) / det;
    g.row(2) << (a.y() - b.y()) / det, (b.x() - a.x()) / det;
    grads_[t] = g;
    double area = 0.5 * det;
    Eigen::Matrix3d k = area * g * g.transpose();
    for (int i = 0; i < 3; ++i) {
      int di = dof_of_node_[tr[i]];
      if (di < 0) continue;
      for (int j = 0; j < 3; ++j) {
        int dj = dof_of_node_[tr[j]];
        if (dj >= 0)
          tii.emplace_back(di, dj, k(i, j));
        else
          tib.emplace_back(di, bnode_index_[tr[j]], k(i, j));
      }
    }
  }
  A_.resize(num_dofs(), num_dofs());
  A_.setFromTriplets(tii.begin(), tii.end());
  A_ib_.resize(num_dofs(), static_cast<int>(boundary_list_.size()));
  A_ib_.setFromTriplets(tib.begin(), tib.end());
  lap_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(A_);
  if (lap_->info() != Eigen::Success) throw Error("stiffness factorization failed");
}

Vec P1Space::to_nodes(const Vec& dofs) const {
  Vec out = Vec::Zero(mesh_.num_nodes());
  for (int d = 0; d < num_dofs(); ++d) out[node_of_dof_[d]] = dofs[d];
  return out;
}

Vec P1Space::to_dofs(const Vec& nodes) const {
  Vec out(num_dofs());
  for (int d = 0; d < num_dofs(); ++d) out[d] = nodes[node_of_dof_[d]];
  return out;
}

Vec P1Space::harmonic_extension(const Vec& g) const {
  Vec gb(boundary_list_.size());
  for (std::size_t k = 0; k < boundary_list_.size(); ++k) gb[k] = g[boundary_list_[k]];
  Vec rhs = -(A_ib_ * gb);
  Vec ui = lap_->solve(rhs);
  Vec out = to_nodes(ui);
  for (std::size_t k = 0; k < boundary_list_.size(); ++k) out[boundary_list_[k]] = gb[k];
  return out;
}

Eigen::Vector2d P1Space::gradient(const Vec& f, int t) const {
  const auto& tr = mesh_.triangles[t];
  return grads_[t].transpose() * Eigen::Vector3d(f[tr[0]], f[tr[1]], f[tr[2]]);
}

double P1Space::dirichlet(const Vec& f) const {
  double s = 0;
  for (int t = 0; t < mesh_.num_triangles(); ++t) s += mesh_.area(t) * gradient(f, t).squaredNorm();
  return s;
}

}  // namespace liouville
