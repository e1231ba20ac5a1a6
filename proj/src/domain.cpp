#include "liouville/domain.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>

#include "liouville/errors.hpp"

namespace liouville {

namespace {

constexpr double kInv2Pi = 0.5 / std::numbers::pi;

std::complex<double> cplx(const Point2& p) { return {p.x(), p.y()}; }

double segment_distance(const Point2& x, const Point2& a, const Point2& b) {
  Point2 ab = b - a;
  double t = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - x).norm();
}

}  // namespace

struct DomainGeometry::MeshData {
  explicit MeshData(Mesh m) : space(std::move(m)), locator(space.mesh()) {
    edges = space.mesh().boundary_edges();
  }
  P1Space space;
  MeshLocator locator;
  std::vector<std::array<int, 2>> edges;
  mutable std::mutex mutex;
  mutable std::map<std::pair<double, double>, std::shared_ptr<const Vec>> memo;
};

DomainGeometry DomainGeometry::disk(const Point2& center, double radius) {
  if (!(radius > 0)) throw InvalidInput("disk radius must be positive");
  DomainGeometry d;
  d.kind_ = Kind::AnalyticDisk;
  d.disk_ = {center, radius};
  return d;
}

DomainGeometry DomainGeometry::from_mesh(Mesh mesh) {
  mesh.validate();
  DomainGeometry d;
  d.kind_ = Kind::Mesh;
  d.data_ = std::make_shared<MeshData>(std::move(mesh));
  return d;
}

const Disk& DomainGeometry::disk() const {
  if (kind_ != Kind::AnalyticDisk) throw InvalidInput("domain is not an analytic disk");
  return disk_;
}

const Mesh& DomainGeometry::mesh() const {
  if (kind_ != Kind::Mesh) throw InvalidInput("domain is not a mesh");
  return data_->space.mesh();
}

const P1Space& DomainGeometry::space() const {
  if (kind_ != Kind::Mesh) throw InvalidInput("domain is not a mesh");
  return data_->space;
}

bool DomainGeometry::contains(const Point2& x, double tol) const {
  if (kind_ == Kind::AnalyticDisk) return (x - disk_.center).norm() <= disk_.radius * (1 + tol);
  if (data_->locator.locate(x) >= 0) return true;
  return distance_to_boundary(x) <= tol;
}

double DomainGeometry::distance_to_boundary(const Point2& x) const {
  if (kind_ == Kind::AnalyticDisk) return std::abs(disk_.radius - (x - disk_.center).norm());
  const auto& nodes = data_->space.mesh().nodes;
  double d = 1e300;
  for (auto& e : data_->edges) d = std::min(d, segment_distance(x, nodes[e[0]], nodes[e[1]]));
  return d;
}

double DomainGeometry::ray_exit(const Point2& x, const Point2& d) const {
  if (kind_ == Kind::AnalyticDisk) {
    Point2 v = x - disk_.center;
    double b = v.dot(d);
    double c = v.squaredNorm() - disk_.radius * disk_.radius;
    return -b + std::sqrt(std::max(0.0, b * b - c));
  }
  const auto& nodes = data_->space.mesh().nodes;
  double best = 1e300;
  for (auto& e : data_->edges) {
    Point2 a = nodes[e[0]], b = nodes[e[1]];
    Point2 ab = b - a;
    double den = d.x() * ab.y() - d.y() * ab.x();
    if (std::abs(den) < 1e-300) continue;
    Point2 ax = a - x;
    double t = (ax.x() * ab.y() - ax.y() * ab.x()) / den;
    double s = (ax.x() * d.y() - ax.y() * d.x()) / den;
    if (t > 0 && s >= -1e-12 && s <= 1 + 1e-12) best = std::min(best, t);
  }
  if (best == 1e300) throw InvalidInput("ray does not leave the domain (point outside?)");
  return best;
}

double DomainGeometry::boundary_length() const {
  if (kind_ == Kind::AnalyticDisk) return 2 * std::numbers::pi * disk_.radius;
  const auto& nodes = data_->space.mesh().nodes;
  double s = 0;
  for (auto& e : data_->edges) s += (nodes[e[1]] - nodes[e[0]]).norm();
  return s;
}

std::shared_ptr<const Vec> DomainGeometry::regular_part_nodal(const Point2& y) const {
  if (kind_ != Kind::Mesh) throw InvalidInput("nodal regular part requires a mesh domain");
  std::lock_guard<std::mutex> lock(data_->mutex);
  auto key = std::make_pair(y.x(), y.y());
  auto it = data_->memo.find(key);
  if (it != data_->memo.end()) return it->second;
  const Mesh& m = data_->space.mesh();
  Vec g = Vec::Zero(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i)
    if (m.boundary[i]) g[i] = kInv2Pi * std::log((m.nodes[i] - y).norm());
  auto r = std::make_shared<const Vec>(data_->space.harmonic_extension(g));
  data_->memo.emplace(key, r);
  return r;
}

double DomainGeometry::regular_part(const Point2& x, const Point2& y) const {
  if (kind_ == Kind::AnalyticDisk) {
    auto xs = cplx((x - disk_.center) / disk_.radius);
    auto ys = cplx((y - disk_.center) / disk_.radius);
    return kInv2Pi * (std::log(disk_.radius) + std::log(std::abs(1.0 - std::conj(ys) * xs)));
  }
  Eigen::Vector3d l;
  int t = data_->locator.locate(x, &l);
  if (t < 0) throw InvalidInput("point outside the mesh domain");
  auto r = regular_part_nodal(y);
  const auto& tr = data_->space.mesh().triangles[t];
  return l[0] * (*r)[tr[0]] + l[1] * (*r)[tr[1]] + l[2] * (*r)[tr[2]];
}

Point2 DomainGeometry::regular_part_gradient(const Point2& x, const Point2& y) const {
  if (kind_ == Kind::AnalyticDisk) {
    auto xs = cplx((x - disk_.center) / disk_.radius);
    auto ys = cplx((y - disk_.center) / disk_.radius);
    std::complex<double> g = std::conj(-std::conj(ys) / (1.0 - std::conj(ys) * xs));
    return kInv2Pi / disk_.radius * Point2(g.real(), g.imag());
  }
  int t = data_->locator.locate(x);
  if (t < 0) throw InvalidInput("point outside the mesh domain");
  return data_->space.gradient(*regular_part_nodal(y), t);
}

GreenEvaluation green(const DomainGeometry& domain, const Point2& x, const Point2& y) {
  if (!domain.contains(y) || domain.distance_to_boundary(y) < 1e-12)
    throw InvalidInput("green: source point must be strictly inside the domain");
  if (!domain.contains(x)) throw InvalidInput("green: evaluation point outside the domain");
  double dist = (x - y).norm();
  if (dist == 0) throw InvalidInput("green: value undefined at x = y");
  double r = domain.regular_part(x, y);
  return {-kInv2Pi * std::log(dist) + r, r};
}

double robin(const DomainGeometry& domain, const Point2& x) {
  if (!domain.contains(x) || domain.distance_to_boundary(x) < 1e-12)
    throw InvalidInput("robin: point must be strictly inside the domain");
  return domain.regular_part(x, x);
}

}  // namespace liouville
