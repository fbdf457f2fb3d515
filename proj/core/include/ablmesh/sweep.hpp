#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ablmesh/mesh.hpp"
#include "ablmesh/optim.hpp"

namespace ablmesh {

struct SweepParams {
  double h0 = 1.0;
  double r = 1.15;
  /// Layer height cap; defaults to the mean surface edge length.
  std::optional<double> h1;
  double z_bl = 0.0;
  bool optimize = true;
  int max_layers = 1000;

  /// Throws ParameterError; returns a warning when r is outside [1.05, 1.2].
  std::string validate() const;
};

/// Normalized sum of (v_i - x) x (v_{i+1} - x) over the ring, with z made
/// non-negative. Closed rings wrap around. Returns (0, 0, 1) and sets
/// *degenerate when the sum vanishes.
Vec3 pseudo_normal(const Vec3& x, std::span<const Vec3> ring, bool closed = true, bool* degenerate = nullptr);

/// normalize((1 - w) pn + w e_z) with w = clamp(z_frac, 0, 1).
Vec3 extrusion_direction(const Vec3& pn, double z_frac);

/// min(h0 r^(n-1), h1), n >= 1.
double layer_height(int n, double h0, double r, double h1);

struct LayerRecord {
  int layer = 0;
  double nominal_height = 0.0;
  double min_q_before = 0.0;
  double mean_q_before = 0.0;
  double min_q_after = 0.0;
  double mean_q_after = 0.0;
};

/// Prism layers over a surface mesh. Node id = sheet * sheet_size + i.
struct PrismLayerMesh {
  HybridMesh mesh;
  std::size_t sheet_size = 0;
  int layers = 0;
  double h1 = 0.0;
  std::vector<double> layer_heights;  // nominal, per layer
  std::vector<LayerRecord> log;
  std::vector<Vec3> last_directions;  // per node, final layer
  std::vector<std::string> warnings;

  int top_node(int i) const { return layers * static_cast<int>(sheet_size) + i; }
};

/// Extrudes the surface layer by layer until every node is at least z_bl
/// above its ground node, relaxing low-quality patches after each layer.
/// Throws MeshingError naming the layer and prism when a prism stays inverted.
PrismLayerMesh sweep_sbl(const TriSurfaceMesh& surface, const SweepParams& params,
                         const OptimizerSettings& settings = {},
                         const std::function<void(const std::string&)>& log = {});

}  // namespace ablmesh
