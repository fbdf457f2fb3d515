#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ablmesh/error.hpp"
#include "ablmesh/quality.hpp"
#include "ablmesh/surfmesh.hpp"
#include "ablmesh/sweep.hpp"
#include "test_meshes.hpp"

using namespace ablmesh;
using namespace ablmesh::testing;

namespace {

void expect_vec_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

double angle_deg(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(dot(a, b) / (norm(a) * norm(b)), -1.0, 1.0)) * 180.0 / M_PI;
}

// Smallest n whose cumulative nominal height reaches z_bl.
int layers_needed(double h0, double r, double h1, double z_bl) {
  double z = 0.0;
  int n = 0;
  while (z < z_bl) z += std::min(h0 * std::pow(r, n++), h1);
  return n;
}

}  // namespace

TEST(PseudoNormal, PlanarRing) {
  std::vector<Vec3> ring;
  for (int k = 0; k < 6; ++k) ring.push_back({std::cos(k * M_PI / 3), std::sin(k * M_PI / 3), 4.0});
  expect_vec_near(pseudo_normal({0, 0, 4}, ring), {0, 0, 1}, 1e-15);
}

TEST(PseudoNormal, SymmetricTent) {
  const std::vector<Vec3> ring{{1, 0, 1}, {0, 1, 1}, {-1, 0, 1}, {0, -1, 1}};
  expect_vec_near(pseudo_normal({0, 0, 0}, ring), {0, 0, 1}, 1e-15);
}

TEST(PseudoNormal, PlaneZEqualsX) {
  std::vector<Vec3> ring;
  for (int k = 0; k < 7; ++k) {
    const double x = 0.3 * std::cos(2 * M_PI * k / 7), y = 0.3 * std::sin(2 * M_PI * k / 7);
    ring.push_back({x, y, x});
  }
  const Vec3 n = pseudo_normal({0, 0, 0}, ring);
  expect_vec_near(n, Vec3{-1, 0, 1} / std::sqrt(2.0), 1e-14);
}

TEST(PseudoNormal, ClockwiseRingStillPointsUp) {
  const std::vector<Vec3> ring{{0, -1, 1}, {-1, 0, 1}, {0, 1, 1}, {1, 0, 1}};
  EXPECT_GT(pseudo_normal({0, 0, 0}, ring).z, 0.0);
}

TEST(PseudoNormal, DegenerateRingFallsBackToVertical) {
  const std::vector<Vec3> ring{{1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  bool degenerate = false;
  expect_vec_near(pseudo_normal({0, 0, 0}, ring, true, &degenerate), {0, 0, 1}, 0.0);
  EXPECT_TRUE(degenerate);
}

TEST(ExtrusionDirection, Endpoints) {
  const Vec3 pn = Vec3{-1, 0, 1} / std::sqrt(2.0);
  expect_vec_near(extrusion_direction(pn, 0.0), pn, 1e-15);
  expect_vec_near(extrusion_direction(pn, 1.0), {0, 0, 1}, 0.0);
  expect_vec_near(extrusion_direction(pn, 3.0), {0, 0, 1}, 0.0);
}

TEST(ExtrusionDirection, HalfBlend) {
  const Vec3 pn = Vec3{-1, 0, 1} / std::sqrt(2.0);
  const double a = -0.5 / std::sqrt(2.0), c = 0.5 / std::sqrt(2.0) + 0.5;
  const double len = std::hypot(a, c);
  expect_vec_near(extrusion_direction(pn, 0.5), {a / len, 0, c / len}, 1e-15);
  EXPECT_NEAR(a, -0.3536, 1e-4);
  EXPECT_NEAR(c, 0.8536, 1e-4);
}

TEST(LayerHeight, Law) {
  EXPECT_EQ(layer_height(1, 1.0, 1.15, 10.0), 1.0);
  EXPECT_NEAR(layer_height(3, 1.0, 1.15, 10.0), 1.3225, 1e-14);
  EXPECT_EQ(layer_height(10, 1.0, 1.15, 2.0), 2.0);
  EXPECT_THROW(layer_height(0, 1.0, 1.15, 2.0), ParameterError);
}

TEST(SweepParams, Validation) {
  SweepParams p;
  p.z_bl = 10.0;
  EXPECT_TRUE(p.validate().empty());
  p.r = 1.3;
  EXPECT_FALSE(p.validate().empty());
  p.r = 0.9;
  EXPECT_THROW(p.validate(), ParameterError);
  p.r = 1.1;
  p.h1 = 0.5;
  EXPECT_THROW(p.validate(), ParameterError);
  p.h1.reset();
  p.z_bl = 0.0;
  EXPECT_THROW(p.validate(), ParameterError);
}

TEST(SweepSbl, FlatTerrainIsExact) {
  const auto surface = lattice_surface(7, 8, 3.0);
  SweepParams p;
  p.h0 = 1.0;
  p.r = 1.15;
  p.h1 = 2.0;
  p.z_bl = 12.0;
  p.optimize = false;
  const auto pl = sweep_sbl(surface, p);
  EXPECT_EQ(pl.layers, layers_needed(1.0, 1.15, 2.0, 12.0));
  EXPECT_EQ(pl.mesh.prisms.size(), pl.layers * surface.triangles.size());
  for (double q : element_qualities(pl.mesh)) EXPECT_NEAR(q, 1.0, 1e-12);

  const std::size_t ns = pl.sheet_size;
  double z = 0.0;
  for (int n = 1; n <= pl.layers; ++n) {
    const double h = std::min(std::pow(1.15, n - 1), 2.0);
    EXPECT_NEAR(pl.layer_heights[n - 1], h, 1e-12);
    z += h;
    for (std::size_t i = 0; i < ns; ++i) {
      const Vec3& lo = pl.mesh.nodes[(n - 1) * ns + i];
      const Vec3& hi = pl.mesh.nodes[n * ns + i];
      EXPECT_NEAR(hi.z - lo.z, h, 1e-12);
      EXPECT_NEAR(hi.z, z, 1e-12);
      EXPECT_EQ(hi.x, surface.xyz[i].x);
      EXPECT_EQ(hi.y, surface.xyz[i].y);
    }
  }
  for (const auto& d : pl.last_directions) EXPECT_GE(d.z, std::cos(2.0 * M_PI / 180.0));
}

TEST(SweepSbl, SheetsShareConnectivityAndFlags) {
  const auto surface = lattice_surface(5, 5, 1.0);
  auto pl = flat_prisms(5, 5, 1.0, 3);
  const std::size_t ns = pl.sheet_size;
  const std::size_t nt = surface.triangles.size();
  for (std::size_t e = 0; e < pl.mesh.prisms.size(); ++e) {
    const int n = pl.mesh.prism_layer[e];
    const auto& t = surface.triangles[pl.mesh.prism_base[e]];
    EXPECT_EQ(pl.mesh.prism_base[e], static_cast<int>(e % nt));
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(pl.mesh.prisms[e][k], static_cast<int>((n - 1) * ns + t[k]));
      EXPECT_EQ(pl.mesh.prisms[e][k + 3], static_cast<int>(n * ns + t[k]));
    }
  }
  const auto boundary = surface.boundary_nodes();
  for (std::size_t i = 0; i < ns; ++i) {
    EXPECT_TRUE(pl.mesh.node_flags[i] & node_flag::ground);
    EXPECT_TRUE(pl.mesh.node_flags[pl.top_node(static_cast<int>(i))] & node_flag::interface);
    EXPECT_EQ(bool(pl.mesh.node_flags[ns + i] & node_flag::lateral), bool(boundary[i]));
  }
}

TEST(SweepSbl, InclinedPlaneFirstLayerIsOrthogonal) {
  auto surface = grid_surface(8, 20.0, [](double x, double) { return 0.5 * x; });
  SweepParams p;
  p.z_bl = 60.0;
  p.optimize = false;
  const auto pl = sweep_sbl(surface, p);
  const Vec3 normal = Vec3{-0.5, 0, 1};
  const auto boundary = surface.boundary_nodes();
  const std::size_t ns = pl.sheet_size;
  for (std::size_t i = 0; i < ns; ++i) {
    if (boundary[i]) continue;
    const Vec3 d = pl.mesh.nodes[ns + i] - pl.mesh.nodes[i];
    EXPECT_LT(angle_deg(d, normal), 2.0);
    // Thickness along the extrusion direction follows the law exactly.
    EXPECT_NEAR(norm(d), 1.0, 1e-12);
  }
  for (const auto& d : pl.last_directions) EXPECT_GE(d.z, std::cos(2.0 * M_PI / 180.0));
}

TEST(SweepSbl, GaussianHillStaysValid) {
  // Hill 30 m high, 40 m wide, meshed at 10 m.
  const auto f = [](double x, double y) { return 30.0 * std::exp(-((x - 80) * (x - 80) + (y - 80) * (y - 80)) / 3200.0); };
  auto surface = grid_surface(16, 10.0, f, true);
  SweepParams p;
  p.z_bl = 40.0;
  const auto pl = sweep_sbl(surface, p);
  for (double q : element_qualities(pl.mesh)) EXPECT_GT(q, 0.0);
  for (std::size_t e = 0; e < pl.mesh.prisms.size(); ++e) {
    std::array<Vec3, 6> x;
    for (int c = 0; c < 6; ++c) x[c] = pl.mesh.nodes[pl.mesh.prisms[e][c]];
    EXPECT_GT(prism_min_det(x), 0.0);
  }
  // Extrusion is tilted early on, so the vertical rise per layer can fall
  // short of the nominal height by at most one extra layer.
  const int nominal = layers_needed(p.h0, p.r, pl.h1, p.z_bl);
  EXPECT_GE(pl.layers, nominal);
  EXPECT_LE(pl.layers, nominal + 1);
  const std::size_t ns = pl.sheet_size;
  for (std::size_t i = 0; i < ns; ++i) EXPECT_GE(pl.mesh.nodes[pl.layers * ns + i].z - surface.xyz[i].z, p.z_bl);
  ASSERT_EQ(pl.log.size(), static_cast<std::size_t>(pl.layers));
  for (const auto& r : pl.log) EXPECT_GE(r.min_q_after, r.min_q_before);
}

TEST(SweepSbl, DefaultCapIsMeanEdge) {
  const auto surface = lattice_surface(4, 4, 2.5);
  SweepParams p;
  p.z_bl = 5.0;
  p.optimize = false;
  const auto pl = sweep_sbl(surface, p);
  EXPECT_NEAR(pl.h1, 2.5, 1e-12);
}

TEST(SweepSbl, EmptySurfaceThrows) {
  SweepParams p;
  p.z_bl = 5.0;
  EXPECT_THROW(sweep_sbl(TriSurfaceMesh{}, p), InputError);
}
