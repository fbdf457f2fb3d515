#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ablmesh/mesh.hpp"
#include "ablmesh/quality.hpp"
#include "ablmesh/terrain.hpp"

namespace ablmesh {

struct OptimizerSettings {
  int sweeps_max = 5;
  int node_iters_max = 10;
  double step_tolerance = 1e-3;  // fraction of the local mean edge
  double quality_threshold_local = 0.2;
  int neighbor_layers_local = 2;
  double regularization_delta = 1e-3;  // relative to the patch mean determinant
  /// Called for every accepted node move with the functional before and after.
  std::function<void(int node, double f_before, double f_after)> on_accept;

  /// Throws ParameterError.
  void validate() const;
};

/// One record per Gauss-Seidel sweep; sweep 0 is the starting state.
struct SweepRecord {
  int sweep = 0;
  double f = 0.0;
  double min_quality = 0.0;
  double mean_quality = 0.0;
  double max_displacement = 0.0;  // absolute
  std::size_t accepted_moves = 0;
};

std::string to_log_line(const std::string& tag, const SweepRecord& r);

/// Sum of squared regularized distortions over the elements touching
/// `nodes` (all elements when empty). delta = rel_delta * mean determinant
/// of those elements.
double mesh_distortion_functional(const HybridMesh& mesh, std::span<const int> nodes = {},
                                  double rel_delta = 1e-3);
double mesh_distortion_functional(const TriSurfaceMesh& mesh, std::span<const int> nodes = {},
                                  double rel_delta = 1e-3);

/// Gauss-Seidel node relaxation over all free nodes. Ground nodes are fixed,
/// ceiling nodes slide in x and y, lateral nodes move in z only.
std::vector<SweepRecord> optimize_volume(HybridMesh& mesh, const OptimizerSettings& s = {});

/// Relaxes only the interior nodes of the patch formed by elements with
/// quality below the threshold plus neighbor_layers_local layers of
/// neighbors. `candidates` restricts the elements tested against the
/// threshold (all when empty).
std::vector<SweepRecord> optimize_local_patch(HybridMesh& mesh, const OptimizerSettings& s = {},
                                              std::span<const int> candidates = {});

/// Relaxes interior nodes in (u, v), measuring triangles on the piecewise
/// linear lift. Boundary and region interface nodes stay fixed; moves that
/// leave the terrain domain are rejected.
std::vector<SweepRecord> optimize_surface(TriSurfaceMesh& mesh, const TerrainModel& terrain,
                                          const OptimizerSettings& s = {});

}  // namespace ablmesh
