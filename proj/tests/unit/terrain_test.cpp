#include "ablmesh/terrain.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "ablmesh/error.hpp"
#include "ablmesh/exchange.hpp"

namespace ablmesh {
namespace {

std::vector<Vec3> grid_samples(int nx, int ny, double h, const std::function<double(double, double)>& f) {
  std::vector<Vec3> s;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) s.push_back({i * h, j * h, f(i * h, j * h)});
  return s;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("ablmesh_terrain_" + name);
}

TEST(Terrain, FlatTwoByTwoGrid) {
  const auto t = terrain_from_grid(grid_samples(2, 2, 1.0, [](double, double) { return 0.0; }));
  EXPECT_EQ(t.triangles().size(), 2u);
  EXPECT_DOUBLE_EQ(t.bounds().width(), 1.0);
  EXPECT_DOUBLE_EQ(t.bounds().height(), 1.0);
  // Diagonal from the lowest-index corner (node 0) to node 3.
  for (const auto& tri : t.triangles()) EXPECT_EQ(tri[0], 0);
}

TEST(Terrain, LinearFieldIsReproducedExactly) {
  const auto t = terrain_from_grid(grid_samples(3, 3, 0.5, [](double x, double) { return x; }));
  EXPECT_EQ(t.triangles().size(), 8u);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Vec2 p{u(rng), u(rng)};
    EXPECT_NEAR(t.height_at(p), p.x, 1e-15);
  }
  const auto plane = terrain_from_grid(grid_samples(5, 5, 0.25, [](double x, double y) { return 2 * x + 3 * y; }));
  EXPECT_NEAR(plane.height_at({0.25, 0.5}), 2.0, 1e-14);
}

TEST(Terrain, ParaboloidCellCenterMatchesHandInterpolation) {
  const double h = 0.1;
  auto f = [](double x, double y) { return x * x + y * y; };
  const auto t = terrain_from_grid(grid_samples(11, 11, h, f));
  // Cell (3,4): lowest corner a=(0.3,0.4), diagonal to c=(0.4,0.5).
  // The center lies on that diagonal, so z_h = (f(a) + f(c)) / 2.
  const Vec2 p{0.35, 0.45};
  const double oracle = 0.5 * (f(0.3, 0.4) + f(0.4, 0.5));
  EXPECT_NEAR(t.height_at(p), oracle, 1e-14);
  // Interpolation error bound h^2 max|H| / 2 with |H| = 2.
  EXPECT_LE(std::abs(t.height_at(p) - f(p.x, p.y)), h * h * 2.0 / 2.0);
  EXPECT_EQ(t.surface_point(p).z, t.height_at(p));
}

TEST(Terrain, OutOfDomainCarriesClosestBoundaryPoint) {
  const auto t = terrain_from_grid(grid_samples(3, 3, 1.0, [](double, double) { return 5.0; }));
  EXPECT_DOUBLE_EQ(t.height_at({1.3, 0.7}), 5.0);
  try {
    t.height_at({3.0, 1.0});
    FAIL() << "expected OutOfDomainError";
  } catch (const OutOfDomainError& e) {
    EXPECT_NEAR(e.closest_boundary_point().x, 2.0, 1e-15);
    EXPECT_NEAR(e.closest_boundary_point().y, 1.0, 1e-15);
  }
}

TEST(Terrain, RandomCloudOnParaboloid) {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 100; ++i) {
    const double x = u(rng), y = u(rng);
    pts.push_back({x, y, x * x + y * y});
  }
  const auto t = terrain_from_cloud(pts);
  for (const auto& p : pts) EXPECT_NEAR(t.height_at(p.xy()), p.x * p.x + p.y * p.y, 1e-14);
  // Convex hull: Euler count of triangles for n points with h on the hull.
  double area = 0.0;
  for (const auto& tri : t.triangles())
    area += 0.5 * orient2d(t.nodes()[tri[0]].xy(), t.nodes()[tri[1]].xy(), t.nodes()[tri[2]].xy());
  EXPECT_GT(area, 0.0);
}

TEST(Terrain, ConflictingDuplicateRejected) {
  std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 0, 2}};
  try {
    terrain_from_cloud(pts);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("(1, 0)"), std::string::npos);
  }
  // Exact repeats merge silently.
  std::vector<Vec3> rep{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 0, 0}};
  EXPECT_EQ(terrain_from_cloud(rep).nodes().size(), 3u);
}

TEST(Terrain, OverlappingTrianglesRejected) {
  std::vector<Vec3> n{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.2, 0.2, 1}, {1.2, 0.2, 1}, {0.2, 1.2, 1}};
  EXPECT_THROW(TerrainModel(n, {{0, 1, 2}, {3, 4, 5}}), InputError);
  EXPECT_THROW(TerrainModel(n, {{0, 2, 1}}), InputError);  // clockwise
}

TEST(Terrain, LoadFormats) {
  const auto grid = temp_file("grid.xyz");
  {
    std::ofstream os(grid);
    os << "# x y z\n";
    for (const auto& p : grid_samples(4, 3, 2.0, [](double x, double y) { return x - y; }))
      os << p.x << ' ' << p.y << ' ' << p.z << '\n';
  }
  const auto g = load_terrain(grid, TerrainFormat::height_grid);
  EXPECT_EQ(g.triangles().size(), 12u);
  EXPECT_NEAR(g.height_at({3.0, 1.0}), 2.0, 1e-14);
  const auto c = load_terrain(grid, TerrainFormat::point_cloud);
  EXPECT_NEAR(c.height_at({3.0, 1.0}), 2.0, 1e-14);

  ExchangeDocument doc;
  doc.nodes = {{0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  doc.triangles = {{0, 1, 2}, {0, 2, 3}};
  const auto mesh = temp_file("mesh.abx");
  write_exchange(doc, mesh);
  EXPECT_DOUBLE_EQ(load_terrain(mesh, TerrainFormat::triangle_mesh).height_at({0.3, 0.6}), 1.0);

  const auto bad = temp_file("bad.xyz");
  {
    std::ofstream os(bad);
    os << "0 0 0\n1 0 0\n0 1 zz\n";
  }
  try {
    load_terrain(bad, TerrainFormat::point_cloud);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

// ---------------------------------------------------------------------------

TerrainModel sampled(const std::function<double(double, double)>& f, double lo, double hi, int n) {
  return terrain_from_function(f, Box2{{lo, lo}, {hi, hi}}, n, n);
}

TEST(PolyFit, ReproducesQuadraticExactly) {
  auto f = [](double x, double y) { return 1 + 2 * x + 3 * y + x * y; };
  const auto t = sampled(f, -1, 1, 20);
  const Vec2 p{0.13, -0.27};
  const PolyFit fit = fit_local_polynomial(t, p, 2);
  // Expansion about p: a00 = f(p), a10 = 2 + y, a01 = 3 + x, a11 = 1.
  EXPECT_NEAR(fit.coefficient(0, 0), f(p.x, p.y), 1e-10);
  EXPECT_NEAR(fit.coefficient(1, 0), 2 + p.y, 1e-10);
  EXPECT_NEAR(fit.coefficient(0, 1), 3 + p.x, 1e-10);
  EXPECT_NEAR(fit.coefficient(1, 1), 1.0, 1e-10);
  EXPECT_NEAR(fit.coefficient(2, 0), 0.0, 1e-10);
  EXPECT_NEAR(fit.coefficient(0, 2), 0.0, 1e-10);
  EXPECT_GE(fit.support_count, poly_term_count(2));
}

TEST(PolyFit, FlatTerrainHasOnlyConstantTerm) {
  const auto t = sampled([](double, double) { return 7.5; }, 0, 1, 10);
  const PolyFit fit = fit_local_polynomial(t, {0.5, 0.5}, 3);
  EXPECT_EQ(fit.coefficients.size(), 10u);
  EXPECT_NEAR(fit.coefficients[0], 7.5, 1e-12);
  for (std::size_t k = 1; k < fit.coefficients.size(); ++k) EXPECT_NEAR(fit.coefficients[k], 0.0, 1e-9);
}

TEST(PolyFit, ExactDerivativesOfParaboloidAndPlane) {
  const auto par = sampled([](double x, double y) { return x * x + y * y; }, -1, 1, 16);
  const PolyFit a = fit_local_polynomial(par, {0.2, 0.1});
  for (const Vec2 q : {Vec2{0.2, 0.1}, Vec2{0.25, 0.05}}) {
    const Sym2 h = hessian_at(a, q);
    EXPECT_NEAR(h.m11, 2.0, 1e-8);
    EXPECT_NEAR(h.m12, 0.0, 1e-8);
    EXPECT_NEAR(h.m22, 2.0, 1e-8);
  }
  const auto plane = sampled([](double x, double) { return x; }, -1, 1, 16);
  const Vec2 g = gradient_at(fit_local_polynomial(plane, {0.3, -0.4}), {0.31, -0.4});
  EXPECT_NEAR(g.x, 1.0, 1e-10);
  EXPECT_NEAR(g.y, 0.0, 1e-10);
}

TEST(PolyFit, SineGradientWithinTaylorBound) {
  const double h = 0.05;
  const auto t = sampled([](double x, double) { return std::sin(x); }, -1, 1, 40);
  const PolyFit fit = fit_local_polynomial(t, {0.0, 0.0}, 3);
  // Cubic fit over a few grid spacings: remainder term x^5/120 gives
  // gradient error far below 1e-3; check against central differences of sin.
  const double fd = (std::sin(h) - std::sin(-h)) / (2 * h);
  EXPECT_NEAR(gradient_at(fit, {0, 0}).x, 1.0, 1e-3);
  EXPECT_NEAR(gradient_at(fit, {0, 0}).x, fd, 1e-3);
}

TEST(PolyFit, GaussianSummitGradientSmall) {
  const double spacing = 0.05;
  auto f = [](double x, double y) { return std::exp(-(x * x + y * y) / (2 * 0.25)); };
  const auto t = sampled(f, -1, 1, 40);
  const PolyFit fit = fit_local_polynomial(t, {0.0, 0.0}, 3);
  // Raw-grid central difference at the summit is zero by symmetry.
  const double fd = (f(spacing, 0) - f(-spacing, 0)) / (2 * spacing);
  EXPECT_LT(norm(gradient_at(fit, {0, 0}) - Vec2{fd, 0.0}), 1e-2 * spacing);
}

TEST(PolyFit, DegreeThreeReproducesCubicsAndMatchesFiniteDifferences) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> c(-2.0, 2.0), u(-0.5, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    double a[10];
    for (double& v : a) v = c(rng);
    auto f = [&](double x, double y) {
      return a[0] + a[1] * x + a[2] * y + a[3] * x * x + a[4] * x * y + a[5] * y * y + a[6] * x * x * x +
             a[7] * x * x * y + a[8] * x * y * y + a[9] * y * y * y;
    };
    const auto t = sampled(f, -1, 1, 24);
    const Vec2 p{u(rng), u(rng)};
    const PolyFit fit = fit_local_polynomial(t, p, 3);
    for (int k = 0; k < 5; ++k) {
      const Vec2 q = p + Vec2{0.02 * u(rng), 0.02 * u(rng)};
      EXPECT_NEAR(fit.value(q), f(q.x, q.y), 1e-8 * std::max(1.0, std::abs(f(q.x, q.y))));
      const double e = 1e-5;
      const Vec2 fd{(fit.value(q + Vec2{e, 0}) - fit.value(q - Vec2{e, 0})) / (2 * e),
                    (fit.value(q + Vec2{0, e}) - fit.value(q - Vec2{0, e})) / (2 * e)};
      const Vec2 g = gradient_at(fit, q);
      EXPECT_NEAR(g.x, fd.x, 1e-6 * std::max(1.0, std::abs(fd.x)));
      EXPECT_NEAR(g.y, fd.y, 1e-6 * std::max(1.0, std::abs(fd.y)));
    }
  }
}

TEST(PolyFit, CollinearSupportIsDegenerate) {
  // A strip one cell wide cannot determine y-curvature.
  std::vector<Vec3> n;
  std::vector<std::array<int, 3>> tris;
  for (int i = 0; i < 30; ++i) {
    n.push_back({double(i), 0.0, 0.0});
    n.push_back({double(i), 1e-7, 0.0});
  }
  for (int i = 0; i + 1 < 30; ++i) {
    const int a = 2 * i, b = 2 * i + 2, c = 2 * i + 3, d = 2 * i + 1;
    tris.push_back({a, b, c});
    tris.push_back({a, c, d});
  }
  const TerrainModel t(n, tris);
  EXPECT_THROW(fit_local_polynomial(t, {10.5, 0.5e-7}, 3), DegenerateFitError);
}

TEST(PolyFit, CacheSharesFitsPerTriangle) {
  auto t = std::make_shared<const TerrainModel>(sampled([](double x, double y) { return x * y; }, 0, 1, 8));
  FitCache cache(t);
  const PolyFit& a = cache.at({0.51, 0.52});
  const PolyFit& b = cache.at({0.515, 0.53});
  EXPECT_EQ(&a, &b);
  EXPECT_EQ(cache.size(), 1u);
  EXPECT_NEAR(hessian_at(a, {0.51, 0.52}).m12, 1.0, 1e-9);
  EXPECT_THROW(cache.at({2.0, 2.0}), OutOfDomainError);
}

}  // namespace
}  // namespace ablmesh
