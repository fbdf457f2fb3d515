#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "ablmesh/geometry.hpp"
#include "ablmesh/locator.hpp"

namespace ablmesh {

/// Piecewise-linear height field z_h over a triangulated planar domain.
/// Immutable after construction; all queries are const and thread safe.
class TerrainModel {
 public:
  /// Validates the graph property: positive planar area, manifold edges and
  /// no two triangles overlapping in plan view.
  TerrainModel(std::vector<Vec3> nodes, std::vector<std::array<int, 3>> triangles);

  const std::vector<Vec3>& nodes() const { return nodes_; }
  const std::vector<std::array<int, 3>>& triangles() const { return tris_; }
  const Box2& bounds() const { return locator_.bounds(); }

  /// Container triangle of p, or -1 outside the domain.
  int locate(const Vec2& p) const { return locator_.locate(p, 1e-12); }
  bool contains(const Vec2& p) const { return locate(p) >= 0; }
  /// Every triangle whose closure contains p (several on edges and vertices).
  std::vector<int> locate_all(const Vec2& p) const { return locator_.locate_all(p, 1e-12); }

  /// Barycentric interpolation in the container triangle.
  /// Throws OutOfDomainError outside the domain.
  double height_at(const Vec2& p) const;
  Vec3 surface_point(const Vec2& p) const { return {p.x, p.y, height_at(p)}; }

  Vec2 closest_boundary_point(const Vec2& p) const;

  /// Triangles incident to each node.
  const std::vector<std::vector<int>>& node_triangles() const { return node_tris_; }
  double min_height() const { return zmin_; }
  double max_height() const { return zmax_; }

 private:
  std::vector<Vec3> nodes_;
  std::vector<std::array<int, 3>> tris_;
  std::vector<std::vector<int>> node_tris_;
  std::vector<std::array<int, 2>> boundary_;
  TriangleLocator locator_;
  double zmin_ = 0.0;
  double zmax_ = 0.0;
};

/// Row-major height grid: x varies fastest, uniform spacing. Each cell is
/// split along the diagonal from its lowest-index corner.
TerrainModel terrain_from_grid(const std::vector<Vec3>& samples);

/// Planar Delaunay triangulation of a scattered point cloud. Exact
/// duplicates are merged; duplicate (x,y) with different z is rejected.
TerrainModel terrain_from_cloud(const std::vector<Vec3>& samples);

/// Samples f on an (nx+1) x (ny+1) grid covering box.
TerrainModel terrain_from_function(const std::function<double(double, double)>& f, const Box2& box,
                                   int nx, int ny);

/// Samples f on the rectilinear grid xs x ys (both strictly increasing).
TerrainModel terrain_from_function(const std::function<double(double, double)>& f,
                                   const std::vector<double>& xs, const std::vector<double>& ys);

enum class TerrainFormat { height_grid, point_cloud, triangle_mesh };

/// Reads "x y z" triples (grid or cloud) or an exchange-format triangle mesh.
TerrainModel load_terrain(const std::filesystem::path& path, TerrainFormat format);

/// Local least-squares polynomial z_p(x, y) = sum a_ij (x-cx)^i (y-cy)^j, i+j <= degree.
struct PolyFit {
  int degree = 0;
  Vec2 center;
  /// Coefficients in physical units, ordered by total degree then by j.
  std::vector<double> coefficients;
  int support_count = 0;
  /// Queries beyond this distance from center should refit.
  double support_radius = 0.0;

  double coefficient(int i, int j) const;
  double value(const Vec2& p) const;
  bool covers(const Vec2& p) const { return distance(p, center) <= support_radius; }
};

/// Number of coefficients of a bivariate polynomial of total degree q.
constexpr int poly_term_count(int q) { return (q + 1) * (q + 2) / 2; }

/// Gathers `layers` rings of vertex adjacency around the container triangle
/// (all containing triangles when p is on an edge or vertex; default: as
/// many rings as the degree), adding rings until the system is
/// determined. Throws DegenerateFitError on a rank-deficient system.
PolyFit fit_local_polynomial(const TerrainModel& t, const Vec2& p, int degree = 3, int layers = -1);

Vec2 gradient_at(const PolyFit& fit, const Vec2& p);
Sym2 hessian_at(const PolyFit& fit, const Vec2& p);

/// Caches one fit per terrain triangle, centered at its centroid, so
/// neighboring queries share a fit. Safe to use from several threads.
class FitCache {
 public:
  explicit FitCache(std::shared_ptr<const TerrainModel> t, int degree = 3)
      : terrain_(std::move(t)), degree_(degree) {}

  /// Fit valid at p; falls back to degree 1 when the requested fit is
  /// degenerate. The reference stays valid for the cache's lifetime.
  const PolyFit& at(const Vec2& p) const;
  std::size_t size() const;
  const TerrainModel& terrain() const { return *terrain_; }

 private:
  std::shared_ptr<const TerrainModel> terrain_;
  int degree_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<int, PolyFit> cache_;
};

}  // namespace ablmesh
