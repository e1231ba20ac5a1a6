#include <cmath>
#include <cstdio>
#include <numbers>

#include <gtest/gtest.h>

#include "liouville/errors.hpp"
#include "liouville/mesh.hpp"

using namespace liouville;

namespace {

double min_angle(const Mesh& m, int t) {
  double best = 10;
  for (int e = 0; e < 3; ++e) {
    Point2 a = m.nodes[m.triangles[t][e]];
    Point2 b = m.nodes[m.triangles[t][(e + 1) % 3]];
    Point2 c = m.nodes[m.triangles[t][(e + 2) % 3]];
    double cosang = (b - a).dot(c - a) / ((b - a).norm() * (c - a).norm());
    best = std::min(best, std::acos(std::clamp(cosang, -1.0, 1.0)));
  }
  return best;
}

}  // namespace

TEST(DiskMesh, CoarseLevelZero) {
  Mesh m = make_disk_mesh({0, 0}, 1.0, 0);
  EXPECT_GE(m.num_triangles(), 8);
  EXPECT_NO_THROW(m.validate());
  for (int i : m.boundary_nodes()) EXPECT_NEAR(m.nodes[i].norm(), 1.0, 1e-12);
}

TEST(DiskMesh, GradedAtCentre) {
  Mesh m = make_disk_mesh({0, 0}, 1.0, 3, Point2(0, 0));
  EXPECT_NO_THROW(m.validate());
  EXPECT_GE(m.find_node({0, 0}, 0.0), 0);
  double dmin = 1e9, dmax = 0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    dmin = std::min(dmin, m.diameter(t));
    dmax = std::max(dmax, m.diameter(t));
  }
  EXPECT_LT(dmin, dmax / 8);
}

TEST(DiskMesh, AreaDeficitShrinksFourfold) {
  double prev = 0;
  for (int level = 2; level <= 4; ++level) {
    Mesh m = make_disk_mesh({0, 0}, 1.0, level);
    double deficit = std::numbers::pi - m.total_area();
    EXPECT_GT(deficit, 0);
    if (level > 2) {
      double ratio = prev / deficit;
      EXPECT_GT(ratio, 3.5);
      EXPECT_LT(ratio, 4.5);
    }
    prev = deficit;
  }
}

TEST(DiskMesh, OffCentreGradingIsConformingAndShapeRegular) {
  for (double q : {0.5, 0.9}) {
    Mesh m = make_disk_mesh({0, 0}, 1.0, 3, Point2(q, 0));
    ASSERT_NO_THROW(m.validate());
    EXPECT_EQ(m.find_node({q, 0}, 0.0), 0);
    double worst = 10, hmax = 0;
    for (int t = 0; t < m.num_triangles(); ++t) {
      worst = std::min(worst, min_angle(m, t));
      hmax = std::max(hmax, m.diameter(t));
    }
    EXPECT_GT(worst, 15.0 * std::numbers::pi / 180);
    EXPECT_LT(hmax, 3.0 / 16);
    for (int i : m.boundary_nodes()) EXPECT_NEAR(m.nodes[i].norm(), 1.0, 1e-12);
  }
}

TEST(DiskMesh, ScaledAndShifted) {
  Mesh m = make_disk_mesh({1, -2}, 2.0, 2, Point2(1.5, -2));
  ASSERT_NO_THROW(m.validate());
  for (int i : m.boundary_nodes()) EXPECT_NEAR((m.nodes[i] - Point2(1, -2)).norm(), 2.0, 1e-12);
}

TEST(DiskMesh, RejectsGradePointOutside) {
  EXPECT_THROW(make_disk_mesh({0, 0}, 1.0, 2, Point2(1.2, 0)), InvalidInput);
  EXPECT_THROW(make_disk_mesh({0, 0}, 1.0, -1), InvalidInput);
}

TEST(MeshIO, RoundTrip) {
  Mesh m = make_disk_mesh({0, 0}, 1.0, 1, Point2(0.3, 0.1));
  std::string path = ::testing::TempDir() + "roundtrip.mesh";
  write_mesh(m, path);
  Mesh r = read_mesh(path);
  ASSERT_EQ(r.num_nodes(), m.num_nodes());
  ASSERT_EQ(r.num_triangles(), m.num_triangles());
  for (int i = 0; i < m.num_nodes(); ++i) {
    EXPECT_EQ(r.nodes[i], m.nodes[i]);
    EXPECT_EQ(r.boundary[i], m.boundary[i]);
  }
  std::remove(path.c_str());
}

TEST(MeshIO, RejectsBadHeader) {
  std::string path = ::testing::TempDir() + "bad.mesh";
  FILE* f = std::fopen(path.c_str(), "w");
  std::fputs("vertices 3 faces 1\n", f);
  std::fclose(f);
  EXPECT_THROW(read_mesh(path), InvalidInput);
  std::remove(path.c_str());
}

TEST(MeshLocator, FindsContainingTriangle) {
  Mesh m = make_disk_mesh({0, 0}, 1.0, 3, Point2(0.2, 0.0));
  MeshLocator loc(m);
  for (Point2 x : {Point2(0.2, 0.0), Point2(0.2 + 1e-9, 1e-9), Point2(-0.7, 0.3), Point2(0.0, -0.95)}) {
    Eigen::Vector3d l;
    int t = loc.locate(x, &l);
    ASSERT_GE(t, 0);
    Point2 back = l[0] * m.nodes[m.triangles[t][0]] + l[1] * m.nodes[m.triangles[t][1]] +
                  l[2] * m.nodes[m.triangles[t][2]];
    EXPECT_NEAR((back - x).norm(), 0.0, 1e-12);
  }
  EXPECT_LT(loc.locate({1.5, 0}), 0);
}
