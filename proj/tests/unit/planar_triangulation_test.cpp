#include "ablmesh/planar_triangulation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "ablmesh/error.hpp"

namespace ablmesh {
namespace {

double total_area(const PlanarMesh& m) {
  double a = 0.0;
  for (const auto& t : m.triangles)
    a += 0.5 * orient2d(m.points[t[0]], m.points[t[1]], m.points[t[2]]);
  return a;
}

void expect_conformal(const PlanarMesh& m) {
  std::map<std::pair<int, int>, int> directed;
  for (const auto& t : m.triangles) {
    EXPECT_GT(orient2d(m.points[t[0]], m.points[t[1]], m.points[t[2]]), 0.0);
    for (int i = 0; i < 3; ++i) ++directed[{t[i], t[(i + 1) % 3]}];
  }
  for (const auto& [e, n] : directed) EXPECT_EQ(n, 1) << "duplicated directed edge";
}

TEST(PlanarTriangulation, DelaunayOfSquareGrid) {
  std::vector<Vec2> pts;
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i) pts.push_back({i * 0.25, j * 0.25});
  const PlanarMesh m = PlanarTriangulation::delaunay(pts);
  EXPECT_EQ(m.triangles.size(), 32u);
  EXPECT_NEAR(total_area(m), 1.0, 1e-12);
  expect_conformal(m);
}

TEST(PlanarTriangulation, DelaunayRandomCloudIsDelaunayAndCoversHull) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec2> pts;
  for (int i = 0; i < 300; ++i) pts.push_back({u(rng), u(rng)});
  const PlanarMesh m = PlanarTriangulation::delaunay(pts);
  expect_conformal(m);
  // Euler: a triangulation of n points with h hull vertices has 2n - 2 - h triangles.
  std::map<std::pair<int, int>, int> undirected;
  for (const auto& t : m.triangles)
    for (int i = 0; i < 3; ++i)
      ++undirected[{std::min(t[i], t[(i + 1) % 3]), std::max(t[i], t[(i + 1) % 3])}];
  int hull = 0;
  for (const auto& [e, n] : undirected) hull += n == 1;
  EXPECT_EQ(m.triangles.size(), 2 * pts.size() - 2 - hull);
  // Empty circumcircle, brute force.
  for (const auto& t : m.triangles)
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (static_cast<int>(k) == t[0] || static_cast<int>(k) == t[1] || static_cast<int>(k) == t[2])
        continue;
      EXPECT_LE(incircle(pts[t[0]], pts[t[1]], pts[t[2]], pts[k]), 1e-12);
    }
}

TEST(PlanarTriangulation, DuplicatePointRejected) {
  std::vector<Vec2> pts{{0, 0}, {1, 0}, {0, 1}, {1, 0}};
  EXPECT_THROW(PlanarTriangulation::delaunay(pts), InputError);
}

TEST(PlanarTriangulation, RefineSquareHonorsAngleAndSize) {
  std::vector<Vec2> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  std::vector<std::array<int, 2>> segs{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  auto tr = PlanarTriangulation::from_pslg(pts, segs, [](const Vec2&) { return 0; });
  RefineOptions opts;
  const double h = 0.1;
  opts.size = [h](const Vec2&) { return h; };
  tr.refine(opts);
  const PlanarMesh m = tr.extract();
  expect_conformal(m);
  EXPECT_NEAR(total_area(m), 1.0, 1e-12);
  for (const auto& t : m.triangles) {
    const Vec2 a = m.points[t[0]], b = m.points[t[1]], c = m.points[t[2]];
    EXPECT_GE(min_angle(a, b, c) * 180.0 / M_PI, 25.0 - 1e-9);
    EXPECT_LE(std::max({distance(a, b), distance(b, c), distance(c, a)}), std::sqrt(2.0) * h + 1e-12);
  }
  // Equilateral-density estimate: area / (0.433 h^2) nodes.
  const double expect = 1.0 / (0.4330127 * h * h);
  EXPECT_GT(m.points.size(), 0.6 * expect);
  EXPECT_LT(m.points.size(), 1.6 * expect);
}

TEST(PlanarTriangulation, RefineEllipseWithInnerLoopKeepsTagsSeparated) {
  std::vector<Vec2> pts;
  std::vector<std::array<int, 2>> segs;
  const Ellipse2 outer{{0, 0}, {2.0, 1.2}, 0.3};
  const int n = 48;
  for (int i = 0; i < n; ++i) {
    pts.push_back(outer.point_at(2 * M_PI * i / n));
    segs.push_back({i, (i + 1) % n});
  }
  const Rect2 inner{{0.1, 0.0}, {0.5, 0.3}, 0.3};
  for (int i = 0; i < 4; ++i) {
    pts.push_back(inner.corners()[i]);
    segs.push_back({n + i, n + (i + 1) % 4});
  }
  auto classify = [&](const Vec2& p) {
    if (inner.contains(p)) return 0;
    return outer.contains(p) ? 1 : PlanarTriangulation::kOutside;
  };
  auto tr = PlanarTriangulation::from_pslg(pts, segs, classify);
  RefineOptions opts;
  opts.size = [&](const Vec2& p) { return inner.contains(p, 1e-9) ? 0.05 : 0.2; };
  tr.refine(opts);
  const PlanarMesh m = tr.extract();
  expect_conformal(m);
  double farm = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& v = m.triangles[t];
    const Vec2 c = (m.points[v[0]] + m.points[v[1]] + m.points[v[2]]) / 3.0;
    EXPECT_EQ(m.tags[t], inner.contains(c) ? 0 : 1);
    if (m.tags[t] == 0) farm += 0.5 * orient2d(m.points[v[0]], m.points[v[1]], m.points[v[2]]);
    EXPECT_GE(min_angle(m.points[v[0]], m.points[v[1]], m.points[v[2]]) * 180 / M_PI, 25.0 - 1e-9);
  }
  EXPECT_NEAR(farm, inner.area(), 1e-12);
}

TEST(PlanarTriangulation, FromMeshRefinesLocally) {
  std::vector<Vec2> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  std::vector<std::array<int, 2>> segs{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  auto tr = PlanarTriangulation::from_pslg(pts, segs, [](const Vec2&) { return 0; });
  RefineOptions opts;
  opts.size = [](const Vec2&) { return 0.1; };
  tr.refine(opts);
  const PlanarMesh base = tr.extract();
  auto again = PlanarTriangulation::from_mesh(base);
  EXPECT_EQ(again.refine(opts), 0u);
  opts.size = [](const Vec2& p) { return distance(p, {0.5, 0.5}) < 0.1 ? 0.03 : 0.1; };
  EXPECT_GT(again.refine(opts), 0u);
  const PlanarMesh m = again.extract();
  expect_conformal(m);
  EXPECT_NEAR(total_area(m), 1.0, 1e-12);
}

}  // namespace
}  // namespace ablmesh
