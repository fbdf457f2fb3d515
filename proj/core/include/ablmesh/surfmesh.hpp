#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ablmesh/geometry.hpp"
#include "ablmesh/mesh.hpp"
#include "ablmesh/metric.hpp"
#include "ablmesh/optim.hpp"
#include "ablmesh/terrain.hpp"

namespace ablmesh {

/// Farm rectangle inside two concentric ellipses aligned with it.
struct RegionLayout {
  Rect2 farm;
  Ellipse2 transition;
  Ellipse2 buffer;
  double h_max = 0.0;
  double h_buffer = 0.0;

  Region region_of(const Vec2& p) const;
  /// h_max in the farm, h_buffer on the buffer boundary, log-linear in
  /// between along rays from the center.
  double size_at(const Vec2& p) const;
};

inline constexpr double kDefaultTransitionFactor = 1.5;
inline constexpr double kDefaultBufferFactor = 3.0;

/// Ellipse semi-axes are sqrt(2) * half_extents * factor, so a square farm
/// gets circles of radius half-diagonal * factor. When a terrain is given,
/// the farm corners and the buffer boundary must lie inside its domain.
RegionLayout build_region_layout(const Rect2& farm, double transition_factor, double buffer_factor, double h_max,
                                 double h_buffer, const TerrainModel* terrain = nullptr);

/// Delaunay refinement of the buffer ellipse under layout.size_at with a
/// 25 degree angle bound. Nodes carry z = 0 until map_to_surface.
TriSurfaceMesh initial_planar_mesh(const RegionLayout& layout, double h_max);

/// Farm elements with an edge longer than sqrt(2) under either metric and
/// all Euclidean edges at least 2 h_min. A null curvature field disables
/// the curvature test.
std::vector<int> find_elems_to_refine(const TriSurfaceMesh& mesh, const MetricField2& tangent,
                                      const MetricField2* curvature, double h_min);

/// Halves the target size of the flagged elements and refines the mesh
/// against the resulting piecewise-constant background size.
TriSurfaceMesh refine_planar_mesh(const TriSurfaceMesh& mesh, const std::vector<int>& flagged);

/// Sets xyz = (u, v, z_h(u, v)). Throws OutOfDomainError.
void map_to_surface(TriSurfaceMesh& mesh, const TerrainModel& terrain);

struct AdaptOptions {
  int max_cycles = 20;
  double alpha = 2.0;
  int quadrature_points = 3;
  bool optimize = true;
  OptimizerSettings optimizer;
  /// Receives one line per progress record.
  std::function<void(const std::string&)> log;
};

struct AdaptCycle {
  int cycle = 0;
  std::size_t nodes = 0;
  std::size_t elements = 0;
  std::size_t flagged = 0;
};

struct AdaptResult {
  TriSurfaceMesh mesh;
  std::vector<AdaptCycle> cycles;
  double n_target = 0.0;           // farm_area / (0.433 h_avg^2)
  double c1 = 0.0;                 // complexity of the unclamped unit-beta curvature metric
  std::optional<double> beta;      // empty when the curvature metric is inactive
  double curvature_complexity = 0.0;  // complexity of the clamped metric at beta
  std::vector<std::string> warnings;
  std::size_t refine_cycles() const { return cycles.empty() ? 0 : cycles.size() - 1; }
};

/// Full adaptive loop: initial mesh, flag/refine until nothing is flagged,
/// lift onto the terrain, optionally optimize in parametric space.
AdaptResult adapt_surface(std::shared_ptr<const TerrainModel> terrain, const RegionLayout& layout, double h_max,
                          double h_min, const AdaptOptions& opts = {});

/// Lift only, no adaptation: initial mesh at h_max mapped onto the terrain.
TriSurfaceMesh uniform_surface(const TerrainModel& terrain, const RegionLayout& layout, double h_max);

}  // namespace ablmesh
