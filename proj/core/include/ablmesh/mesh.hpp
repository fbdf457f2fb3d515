#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "ablmesh/geometry.hpp"

namespace ablmesh {

enum class Region : int { farm = 0, transition = 1, buffer = 2 };

const char* to_string(Region r);

/// Triangle mesh with parametric (u,v) and physical (x,y,z) coordinates per
/// node. After lifting, (x,y) == (u,v) and z = z_h(u,v).
struct TriSurfaceMesh {
  std::vector<Vec2> uv;
  std::vector<Vec3> xyz;
  std::vector<std::array<int, 3>> triangles;
  std::vector<double> target_size;
  std::vector<Region> region;

  std::size_t node_count() const { return uv.size(); }
  std::size_t element_count() const { return triangles.size(); }
  /// Nodes touched by at least one farm triangle.
  std::size_t farm_node_count() const;
  /// Nodes on the outer boundary or on a region interface.
  std::vector<bool> interface_nodes() const;
  /// Per node, the counter-clockwise ordered one-ring of neighbor nodes.
  /// Open (first and last are boundary neighbors) for boundary nodes.
  std::vector<std::vector<int>> ordered_rings() const;
  std::vector<bool> boundary_nodes() const;
};

/// Boundary classification bits for hybrid-mesh nodes.
namespace node_flag {
inline constexpr unsigned ground = 1u;
inline constexpr unsigned ceiling = 2u;
inline constexpr unsigned lateral = 4u;
inline constexpr unsigned interface = 8u;  // on the prism/tetrahedron interface sheet
}  // namespace node_flag

/// Mixed prism/tetrahedron volume mesh. Prisms are (a, b, c, d, e, f) with
/// (a, b, c) the counter-clockwise bottom seen from above and d, e, f above
/// a, b, c. Element index order: prisms first, then tetrahedra.
struct HybridMesh {
  std::vector<Vec3> nodes;
  std::vector<unsigned> node_flags;

  std::vector<std::array<int, 6>> prisms;
  std::vector<int> prism_layer;      // 1-based sweep layer
  std::vector<int> prism_base;       // index into ground_triangles
  std::vector<double> prism_height;  // nominal layer height of the ideal prism

  std::vector<std::array<int, 4>> tets;

  /// Ground sheet connectivity; defines the base of each ideal prism.
  std::vector<std::array<int, 3>> ground_triangles;

  std::size_t element_count() const { return prisms.size() + tets.size(); }
  /// Node ids of element e in the unified numbering.
  std::vector<int> element_nodes(std::size_t e) const;
};

}  // namespace ablmesh
