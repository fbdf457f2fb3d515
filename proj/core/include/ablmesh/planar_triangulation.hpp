#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "ablmesh/geometry.hpp"

namespace ablmesh {

/// Plain planar triangle mesh: counter-clockwise triangles with an integer
/// tag per triangle.
struct PlanarMesh {
  std::vector<Vec2> points;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> tags;
};

/// Options for quality/size Delaunay refinement.
struct RefineOptions {
  /// Triangles with a smaller interior angle are split.
  double min_angle_deg = 25.0;
  /// Target edge length at a point. Triangles with an edge longer than
  /// edge_factor * size(centroid) are split.
  std::function<double(const Vec2&)> size;
  double edge_factor = 1.4142135623730951;
  std::size_t max_vertices = 5'000'000;
};

/// Constrained Delaunay triangulation with Bowyer-Watson insertion and
/// Ruppert-style refinement. Constrained edges are the domain boundary and
/// every edge separating triangles with different tags.
class PlanarTriangulation {
 public:
  static constexpr int kOutside = -1;

  /// Tags a triangle from its centroid; kOutside marks exterior triangles.
  using Classifier = std::function<int(const Vec2&)>;

  /// Conforming triangulation of a planar straight-line graph. Segments
  /// missing from the Delaunay triangulation are split at their midpoints
  /// until present; triangles classified kOutside are discarded.
  static PlanarTriangulation from_pslg(const std::vector<Vec2>& points,
                                       const std::vector<std::array<int, 2>>& segments,
                                       const Classifier& classify);

  /// Adopts an existing conformal, counter-clockwise mesh.
  static PlanarTriangulation from_mesh(const PlanarMesh& mesh);

  /// Delaunay triangulation of a point set over its convex hull.
  static PlanarMesh delaunay(const std::vector<Vec2>& points);

  /// Inserts Steiner points until no triangle is bad under opts.
  /// Returns the number of inserted vertices.
  std::size_t refine(const RefineOptions& opts);

  PlanarMesh extract() const;

  std::size_t vertex_count() const { return pts_.size(); }

 private:
  struct Tri {
    std::array<int, 3> v{};
    std::array<int, 3> nbr{-1, -1, -1};  // across edge opposite v[i]; -1 = boundary
    std::array<bool, 3> fixed{false, false, false};
    int tag = 0;
    bool alive = true;
  };

  struct Location {
    int tri = -1;
    int on_edge = -1;    // edge index when the point lies on an edge
    int on_vertex = -1;  // vertex id when the point coincides with one
    bool blocked = false;  // walk stopped at a constrained or boundary edge
    int block_tri = -1;
    int block_edge = -1;
  };

  struct Cavity {
    std::vector<int> tris;
    // Boundary edges: (owner triangle, edge index).
    std::vector<std::pair<int, int>> boundary;
  };

  Location walk(int start, const Vec2& p, bool respect_constraints) const;
  Cavity cavity(const Vec2& p, const Location& loc, int split_tri, int split_edge) const;
  int insert(const Vec2& p, const Location& loc, int split_tri, int split_edge,
             std::vector<int>* created);
  int split_segment(int t, int e, std::vector<int>* created);
  int new_tri();
  void set_neighbor_back(int outside, int old_tri, int new_tri);
  bool edge_exists(int a, int b) const;
  std::vector<int> triangles_around(int v) const;
  Vec2 centroid(int t) const;

  std::vector<Vec2> pts_;
  std::vector<int> vtri_;
  std::vector<Tri> tris_;
  std::vector<int> free_;
};

}  // namespace ablmesh
