#include "liouville/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "liouville/errors.hpp"

namespace liouville {

namespace {

constexpr double kPi = std::numbers::pi;

double cross(const Point2& a, const Point2& b, const Point2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

struct Ring {
  double r;
  int n;
  double offset;
};

// Ring radii and node counts for the unit disk.
std::vector<Ring> ring_layout(double h, int angular, double r_min, bool graded) {
  std::vector<Ring> rings;
  if (!graded) {
    int m = std::max(1, static_cast<int>(std::lround(1.0 / h)));
    double d = 1.0 / m;
    for (int j = 0; j < m; ++j) {
      double r = 1.0 - j * d;
      int n = std::max(6, static_cast<int>(std::lround(2 * kPi * r / h)));
      rings.push_back({r, n, 0.0});
    }
  } else {
    double r_core = angular * h / (2 * kPi);
    if (r_core < 1.0) {
      int m = std::max(1, static_cast<int>(std::lround((1.0 - r_core) / h)));
      double d = (1.0 - r_core) / m;
      for (int j = 0; j < m; ++j) {
        double r = 1.0 - j * d;
        int n = std::max(angular, static_cast<int>(std::lround(2 * kPi * r / h)));
        rings.push_back({r, n, 0.0});
      }
    } else {
      r_core = 1.0;
    }
    double q = std::exp(-2 * kPi / angular);
    for (double r = r_core; r >= r_min; r *= q) rings.push_back({r, angular, 0.0});
  }
  for (std::size_t j = 0; j < rings.size(); ++j)
    rings[j].offset = (j % 2) ? kPi / rings[j].n : 0.0;
  return rings;
}

// Rosette on the unit disk: node 0 is the centre, rings follow outside-in.
void build_rosette(const std::vector<Ring>& rings, std::vector<Point2>& pts,
                   std::vector<char>& bnd, std::vector<std::array<int, 3>>& tris) {
  pts.assign(1, Point2(0, 0));
  bnd.assign(1, 0);
  std::vector<int> first;
  for (std::size_t j = 0; j < rings.size(); ++j) {
    first.push_back(static_cast<int>(pts.size()));
    for (int k = 0; k < rings[j].n; ++k) {
      double t = rings[j].offset + 2 * kPi * k / rings[j].n;
      pts.emplace_back(rings[j].r * std::cos(t), rings[j].r * std::sin(t));
      bnd.push_back(j == 0 ? 1 : 0);
    }
  }
  for (std::size_t j = 0; j + 1 < rings.size(); ++j) {
    const Ring& o = rings[j];
    const Ring& in = rings[j + 1];
    // start the inner ring at the node just before the outer node 0
    double t_out0 = o.offset;
    int j0 = static_cast<int>(std::floor((t_out0 - in.offset) * in.n / (2 * kPi)));
    auto ang_out = [&](int i) { return o.offset + 2 * kPi * i / o.n; };
    auto ang_in = [&](int i) { return in.offset + 2 * kPi * (j0 + i) / in.n; };
    auto id_out = [&](int i) { return first[j] + (i % o.n); };
    auto id_in = [&](int i) {
      int k = ((j0 + i) % in.n + in.n) % in.n;
      return first[j + 1] + k;
    };
    int a = 0, b = 0;
    while (a < o.n || b < in.n) {
      bool advance_outer;
      if (a == o.n)
        advance_outer = false;
      else if (b == in.n)
        advance_outer = true;
      else
        advance_outer = ang_out(a + 1) <= ang_in(b + 1);
      if (advance_outer) {
        tris.push_back({id_out(a), id_out(a + 1), id_in(b)});
        ++a;
      } else {
        tris.push_back({id_out(a), id_in(b + 1), id_in(b)});
        ++b;
      }
    }
  }
  const Ring& last = rings.back();
  int f = first.back();
  for (int k = 0; k < last.n; ++k) tris.push_back({f + k, f + (k + 1) % last.n, 0});
}

// Newest-vertex bisection; the refinement edge of (v0,v1,v2) is v1-v2.
struct Bisector {
  std::vector<Point2>& pts;
  std::vector<char>& bnd;
  std::vector<std::array<int, 3>>& tris;
  std::unordered_set<std::uint64_t> boundary_edges;
  std::unordered_map<std::uint64_t, int> mid;

  Bisector(std::vector<Point2>& p, std::vector<char>& b, std::vector<std::array<int, 3>>& t)
      : pts(p), bnd(b), tris(t) {
    std::unordered_map<std::uint64_t, int> count;
    for (auto& tri : tris)
      for (int e = 0; e < 3; ++e) ++count[edge_key(tri[e], tri[(e + 1) % 3])];
    for (auto& [k, c] : count)
      if (c == 1) boundary_edges.insert(k);
    for (auto& tri : tris) {
      int best = 0;
      double len = -1;
      for (int e = 0; e < 3; ++e) {
        double l = (pts[tri[(e + 1) % 3]] - pts[tri[(e + 2) % 3]]).squaredNorm();
        if (l > len) len = l, best = e;
      }
      tri = {tri[best], tri[(best + 1) % 3], tri[(best + 2) % 3]};
    }
  }

  int midpoint(int a, int b) {
    auto key = edge_key(a, b);
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    Point2 m = 0.5 * (pts[a] + pts[b]);
    int id = static_cast<int>(pts.size());
    char on_boundary = 0;
    if (boundary_edges.erase(key)) {
      m /= m.norm();
      boundary_edges.insert(edge_key(a, id));
      boundary_edges.insert(edge_key(id, b));
      on_boundary = 1;
    }
    pts.push_back(m);
    bnd.push_back(on_boundary);
    mid.emplace(key, id);
    return id;
  }

  void refine(std::vector<char> marked) {
    for (int pass = 0;; ++pass) {
      if (pass > 200) throw Error("bisection closure did not terminate");
      bool changed = false;
      std::vector<std::array<int, 3>> next;
      std::vector<char> next_marked;
      next.reserve(tris.size() + 16);
      for (std::size_t t = 0; t < tris.size(); ++t) {
        auto [v0, v1, v2] = tris[t];
        bool need = marked[t] || mid.count(edge_key(v1, v2)) || mid.count(edge_key(v0, v1)) ||
                    mid.count(edge_key(v2, v0));
        if (!need) {
          next.push_back(tris[t]);
          next_marked.push_back(0);
          continue;
        }
        int m = midpoint(v1, v2);
        next.push_back({m, v0, v1});
        next.push_back({m, v2, v0});
        next_marked.push_back(0);
        next_marked.push_back(0);
        changed = true;
      }
      tris.swap(next);
      marked.swap(next_marked);
      if (!changed) break;
    }
  }
};

}  // namespace

double Mesh::area(int t) const {
  const auto& tr = triangles[t];
  return 0.5 * cross(nodes[tr[0]], nodes[tr[1]], nodes[tr[2]]);
}

double Mesh::diameter(int t) const {
  const auto& tr = triangles[t];
  double d = 0;
  for (int e = 0; e < 3; ++e) d = std::max(d, (nodes[tr[e]] - nodes[tr[(e + 1) % 3]]).norm());
  return d;
}

double Mesh::total_area() const {
  double s = 0;
  for (int t = 0; t < num_triangles(); ++t) s += area(t);
  return s;
}

std::vector<int> Mesh::boundary_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < num_nodes(); ++i)
    if (boundary[i]) out.push_back(i);
  return out;
}

std::vector<std::array<int, 2>> Mesh::boundary_edges() const {
  std::unordered_map<std::uint64_t, int> count;
  for (auto& tri : triangles)
    for (int e = 0; e < 3; ++e) ++count[edge_key(tri[e], tri[(e + 1) % 3])];
  std::vector<std::array<int, 2>> out;
  for (auto& tri : triangles)
    for (int e = 0; e < 3; ++e)
      if (count[edge_key(tri[e], tri[(e + 1) % 3])] == 1) out.push_back({tri[e], tri[(e + 1) % 3]});
  return out;
}

int Mesh::find_node(const Point2& x, double tol) const {
  for (int i = 0; i < num_nodes(); ++i)
    if ((nodes[i] - x).norm() <= tol) return i;
  return -1;
}

void Mesh::validate() const {
  if (nodes.empty() || triangles.empty()) throw InvalidInput("mesh is empty");
  if (boundary.size() != nodes.size()) throw InvalidInput("boundary flags do not match node count");
  std::map<std::pair<int, int>, int> directed;
  for (int t = 0; t < num_triangles(); ++t) {
    for (int v : triangles[t])
      if (v < 0 || v >= num_nodes()) throw InvalidInput("triangle references a missing node");
    if (!(area(t) > 0)) throw InvalidInput("triangle " + std::to_string(t) + " is not positively oriented");
    for (int e = 0; e < 3; ++e) {
      auto key = std::make_pair(triangles[t][e], triangles[t][(e + 1) % 3]);
      if (++directed[key] > 1) throw InvalidInput("mesh is not conforming (repeated directed edge)");
    }
  }
  std::unordered_map<int, int> next;
  for (auto& [e, c] : directed) {
    if (directed.count({e.second, e.first})) continue;
    if (next.count(e.first)) throw InvalidInput("boundary is not a simple loop");
    next[e.first] = e.second;
  }
  if (next.empty()) throw InvalidInput("mesh has no boundary");
  int start = next.begin()->first, cur = start;
  std::size_t steps = 0;
  do {
    if (!boundary[cur]) throw InvalidInput("boundary edge endpoint not flagged as boundary");
    auto it = next.find(cur);
    if (it == next.end()) throw InvalidInput("boundary loop is open");
    cur = it->second;
    ++steps;
  } while (cur != start && steps <= next.size());
  if (steps != next.size()) throw InvalidInput("boundary consists of more than one loop");
  std::size_t flagged = std::count(boundary.begin(), boundary.end(), 1);
  if (flagged != next.size()) throw InvalidInput("boundary flags do not match the boundary loop");
}

Mesh make_disk_mesh(const Point2& center, double radius, int level, std::optional<Point2> grade_at,
                    const MeshOptions& options) {
  if (!(radius > 0)) throw InvalidInput("disk radius must be positive");
  if (level < 0) throw InvalidInput("mesh level must be >= 0");
  std::complex<double> p(0, 0);
  if (grade_at) {
    Point2 rel = (*grade_at - center) / radius;
    if (!(rel.norm() < 1.0 - 1e-12)) throw InvalidInput("grade_at must lie strictly inside the disk");
    p = {rel.x(), rel.y()};
  }
  const double h = std::ldexp(1.0, -(level + 1));
  int angular = options.angular > 0 ? options.angular : std::clamp(1 << (level + 1), 16, 64);
  const double shrink = 1.0 - std::norm(p);
  auto rings = ring_layout(h, angular, options.min_radius / (radius * shrink), grade_at.has_value());

  std::vector<Point2> pts;
  std::vector<char> bnd;
  std::vector<std::array<int, 3>> tris;
  build_rosette(rings, pts, bnd, tris);

  if (std::abs(p) > 0) {
    // Refine where the Moebius map z -> (z+p)/(1+conj(p)z) stretches
    // elements beyond the target size.
    Bisector bis(pts, bnd, tris);
    auto stretch = [&](const Point2& z) {
      return shrink / std::norm(1.0 + std::conj(p) * std::complex<double>(z.x(), z.y()));
    };
    for (int round = 0; round < 64; ++round) {
      std::vector<char> marked(tris.size(), 0);
      bool any = false;
      for (std::size_t t = 0; t < tris.size(); ++t) {
        double s = 0, d = 0;
        for (int e = 0; e < 3; ++e) {
          s = std::max(s, stretch(pts[tris[t][e]]));
          d = std::max(d, (pts[tris[t][e]] - pts[tris[t][(e + 1) % 3]]).norm());
        }
        if (d * s > 1.6 * h) marked[t] = 1, any = true;
      }
      if (!any) break;
      bis.refine(marked);
    }
  }

  Mesh mesh;
  mesh.nodes.resize(pts.size());
  const Point2 focus = grade_at ? *grade_at : center;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::complex<double> z(pts[i].x(), pts[i].y());
    if (i == 0) {
      mesh.nodes[i] = focus;
    } else if (bnd[i]) {
      std::complex<double> w = (z + p) / (1.0 + std::conj(p) * z);
      w /= std::abs(w);
      mesh.nodes[i] = center + radius * Point2(w.real(), w.imag());
    } else {
      std::complex<double> off = z * shrink / (1.0 + std::conj(p) * z);
      mesh.nodes[i] = focus + radius * Point2(off.real(), off.imag());
    }
  }
  mesh.triangles = std::move(tris);
  mesh.boundary = std::move(bnd);
  return mesh;
}

Mesh read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open mesh file: " + path);
  std::string w1, w2;
  long n = -1, t = -1;
  if (!(in >> w1 >> n >> w2 >> t) || w1 != "nodes" || w2 != "triangles" || n <= 0 || t <= 0)
    throw InvalidInput("mesh file " + path + ": bad header (expected 'nodes N triangles T')");
  Mesh mesh;
  mesh.nodes.resize(n);
  mesh.boundary.resize(n);
  for (long i = 0; i < n; ++i) {
    double x, y;
    int b;
    if (!(in >> x >> y >> b) || (b != 0 && b != 1))
      throw InvalidInput("mesh file " + path + ": bad node line " + std::to_string(i));
    mesh.nodes[i] = {x, y};
    mesh.boundary[i] = static_cast<char>(b);
  }
  mesh.triangles.resize(t);
  for (long k = 0; k < t; ++k) {
    auto& tri = mesh.triangles[k];
    if (!(in >> tri[0] >> tri[1] >> tri[2]))
      throw InvalidInput("mesh file " + path + ": bad triangle line " + std::to_string(k));
  }
  mesh.validate();
  return mesh;
}

void write_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write mesh file: " + path);
  out << "nodes " << mesh.num_nodes() << " triangles " << mesh.num_triangles() << "\n";
  out.precision(17);
  for (int i = 0; i < mesh.num_nodes(); ++i)
    out << mesh.nodes[i].x() << " " << mesh.nodes[i].y() << " " << int(mesh.boundary[i]) << "\n";
  for (auto& tri : mesh.triangles) out << tri[0] << " " << tri[1] << " " << tri[2] << "\n";
}

Eigen::Vector3d barycentric(const Point2& a, const Point2& b, const Point2& c, const Point2& x) {
  double det = cross(a, b, c);
  double l1 = cross(x, b, c) / det;
  double l2 = cross(a, x, c) / det;
  return {l1, l2, 1.0 - l1 - l2};
}

MeshLocator::MeshLocator(const Mesh& mesh) : mesh_(&mesh) {
  Point2 lo = mesh.nodes[0], hi = mesh.nodes[0];
  for (auto& x : mesh.nodes) lo = lo.cwiseMin(x), hi = hi.cwiseMax(x);
  double span = std::max(hi.x() - lo.x(), hi.y() - lo.y()) * (1 + 1e-9) + 1e-300;
  boxes_.resize(mesh.num_triangles());
  Cell root{lo, span, -1, {}};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    Point2 a = mesh.nodes[mesh.triangles[t][0]], b = a;
    for (int v : mesh.triangles[t]) a = a.cwiseMin(mesh.nodes[v]), b = b.cwiseMax(mesh.nodes[v]);
    boxes_[t] = {a, b};
    root.tris.push_back(t);
  }
  cells_.push_back(std::move(root));
  split(0, 0);
}

void MeshLocator::split(int cell, int depth) {
  if (cells_[cell].tris.size() <= 12 || depth >= 60) return;
  int first = static_cast<int>(cells_.size());
  double half = 0.5 * cells_[cell].size;
  for (int k = 0; k < 4; ++k) {
    Point2 lo = cells_[cell].lo + Point2((k & 1) * half, (k >> 1) * half);
    cells_.push_back({lo, half, -1, {}});
  }
  std::vector<int> tris = std::move(cells_[cell].tris);
  cells_[cell].tris.clear();
  cells_[cell].child = first;
  for (int t : tris) {
    for (int k = 0; k < 4; ++k) {
      Cell& c = cells_[first + k];
      if (boxes_[t][1].x() < c.lo.x() || boxes_[t][0].x() > c.lo.x() + c.size) continue;
      if (boxes_[t][1].y() < c.lo.y() || boxes_[t][0].y() > c.lo.y() + c.size) continue;
      c.tris.push_back(t);
    }
  }
  // stop when splitting no longer separates the triangles
  std::size_t largest = 0;
  for (int k = 0; k < 4; ++k) largest = std::max(largest, cells_[first + k].tris.size());
  if (largest == tris.size() && depth > 30) {
    cells_.resize(first);
    cells_[cell].child = -1;
    cells_[cell].tris = std::move(tris);
    return;
  }
  for (int k = 0; k < 4; ++k) split(first + k, depth + 1);
}

int MeshLocator::locate(const Point2& x, Eigen::Vector3d* bary) const {
  const Cell* c = &cells_[0];
  if (x.x() < c->lo.x() || x.y() < c->lo.y() || x.x() > c->lo.x() + c->size ||
      x.y() > c->lo.y() + c->size)
    return -1;
  while (c->child >= 0) {
    double half = 0.5 * c->size;
    int k = (x.x() >= c->lo.x() + half ? 1 : 0) + (x.y() >= c->lo.y() + half ? 2 : 0);
    c = &cells_[c->child + k];
  }
  int best = -1;
  double best_min = -1e300;
  Eigen::Vector3d best_l;
  for (int t : c->tris) {
    const auto& tr = mesh_->triangles[t];
    Eigen::Vector3d l = barycentric(mesh_->nodes[tr[0]], mesh_->nodes[tr[1]], mesh_->nodes[tr[2]], x);
    double m = l.minCoeff();
    if (m >= 0) {
      if (bary) *bary = l;
      return t;
    }
    if (m > best_min) best_min = m, best = t, best_l = l;
  }
  if (best >= 0 && best_min > -1e-10) {
    if (bary) *bary = best_l;
    return best;
  }
  return -1;
}

}  // namespace liouville
