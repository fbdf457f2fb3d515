#pragma once

// Experiment harness behind the command-line tool: run configuration,
// analytic test terrains, geometry error, convergence studies and the
// end-to-end pipelines.

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ablmesh/meshio.hpp"
#include "ablmesh/optim.hpp"
#include "ablmesh/quality.hpp"
#include "ablmesh/surfmesh.hpp"
#include "ablmesh/sweep.hpp"
#include "ablmesh/terrain.hpp"
#include "ablmesh/volfill.hpp"

namespace ablmesh {

using HeightFunction = std::function<double(double, double)>;

/// Closed-form test terrain.
struct AnalyticTerrain {
  std::string name;
  HeightFunction height;
};

/// flat (z = 0), plane (z = x/2), paraboloid (z = (x^2 + y^2)/2), gaussian
/// (height 1, sigma 0.5), ridges (sinusoids in x and y), scarp (tanh step of
/// height 1 and slope 5 at x = 0).
/// Throws ParameterError for other names.
AnalyticTerrain analytic_terrain(const std::string& name);
std::vector<std::string> analytic_terrain_names();

/// Samples f on a rectilinear grid over `domain`: spacing `fine` inside
/// `fine_box`, `coarse` elsewhere.
TerrainModel sample_terrain(const HeightFunction& f, const Box2& domain, const Box2& fine_box, double fine,
                            double coarse);

struct L2Error {
  double error = 0.0;
  double farm_area = 0.0;     // summed area of the farm triangles
  double expected_area = 0.0;  // farm rectangle area
  std::string warning;        // coverage below 99.9%
};

/// sqrt of the integral over the farm triangles of (z_mesh - z_truth)^2,
/// with a 7-point rule per triangle applied to the piecewise linear lift.
L2Error geometry_l2_error(const TriSurfaceMesh& mesh, const HeightFunction& truth, const Rect2& farm);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ConvergenceLevel {
  double h_max = 0.0;
  double h_min = 0.0;
};

struct ConvergenceRecord {
  int level = 0;
  double h_max = 0.0;
  double h_min = 0.0;
  bool adaptive = false;
  bool optimized = false;
  std::size_t nodes = 0;       // farm nodes, the N of the size indicator
  std::size_t total_nodes = 0;
  double size_indicator = 0.0;  // N^(-1/2)
  double error = 0.0;
  double farm_area = 0.0;
};

struct ConvergenceOptions {
  bool uniform = true;
  bool adaptive = true;
  bool optimize = true;
  double transition_factor = kDefaultTransitionFactor;
  double buffer_factor = kDefaultBufferFactor;
  double buffer_size_ratio = 4.0;  // h_buffer / h_max
  OptimizerSettings optimizer;
  bool parallel = false;
  std::function<void(const std::string&)> log;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRecord> records;
  /// Keyed by variant: uniform, uniform-opt, adaptive, adaptive-opt.
  std::map<std::string, double> slopes;
  std::vector<std::string> warnings;

  const ConvergenceRecord* find(int level, bool adaptive, bool optimized) const;
  /// error(variant) / error(uniform raw) at a level; NaN when missing.
  double ratio(int level, bool adaptive, bool optimized) const;
  int levels() const;
  /// Record table, slopes and the e_a/e_u, e_u^opt/e_u, e_a^opt/e_u table.
  std::string to_text() const;
};

/// Builds every requested variant at each level (at least 3 levels).
ConvergenceStudy run_convergence_study(std::shared_ptr<const TerrainModel> terrain, const HeightFunction& truth,
                                       const Rect2& farm, const std::vector<ConvergenceLevel>& levels,
                                       const ConvergenceOptions& opts = {});

/// Fully structured comparator: a uniform quad grid at h_max over the buffer
/// ellipse times the number of node sheets.
struct StructuredEstimate {
  double surface_nodes = 0.0;
  int sheets = 0;
  double nodes = 0.0;
};

StructuredEstimate structured_node_estimate(const RegionLayout& layout, int sheets);

/// Inputs of every command. Unset optionals are resolved by the pipeline
/// and echoed in the run report.
struct RunConfig {
  std::string terrain = "analytic:gaussian";  // path or analytic:<name>
  std::string terrain_format = "grid";        // grid | cloud | mesh
  std::optional<double> terrain_spacing;      // analytic sampling inside the farm
  double farm_cx = 0.0;
  double farm_cy = 0.0;
  double farm_hx = 2.0;
  double farm_hy = 2.0;
  double farm_angle = 0.0;  // degrees
  double transition_factor = kDefaultTransitionFactor;
  double buffer_factor = kDefaultBufferFactor;
  double h_max = 0.2;
  double h_min = 0.05;
  std::optional<double> h_buffer;
  double h0 = 1.0;
  double r = 1.15;
  std::optional<double> h1;
  std::optional<double> z_bl;
  std::optional<double> z_top;
  std::optional<double> h2;
  double fill_ratio = 1.2;
  std::string fill_backend = "builtin";
  std::string fill_file;
  OptimizerSettings optimizer;
  bool adapt = true;
  bool optimize = true;
  std::string out = ".";
  std::string format = "exchange";
  bool vtk = false;
  unsigned seed = 0;

  /// Sets one field from its config key, the long flag name without the
  /// leading dashes (hmax, farm-hx, ...). Throws ParameterError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Key, value-type hint and one-line description of every key.
  static const std::vector<std::array<std::string, 3>>& keys();
  Rect2 farm() const;
  /// Throws ParameterError.
  void validate() const;
};

/// Parses "key = value" lines; '#' starts a comment. Errors carry the line.
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& name = "<config>");
void apply_config_file(RunConfig& cfg, const std::string& path);

using LogFn = std::function<void(const std::string&)>;

/// Terrain named by the config; analytic terrains are sampled over the
/// buffer bounding box with a margin.
std::shared_ptr<const TerrainModel> load_config_terrain(const RunConfig& cfg, std::string* description = nullptr);

struct SurfaceRun {
  TriSurfaceMesh mesh;
  RegionLayout layout;
  std::optional<AdaptResult> adapt;
  QualityReport quality;
  std::vector<std::string> log;
  std::string report_json;
};

/// Surface stage: adapt (or uniform) plus optional optimization.
SurfaceRun run_surface(const RunConfig& cfg, const LogFn& log = {});

struct AblRun {
  SurfaceRun surface;
  HybridMesh mesh;
  TetFill fill;  // as generated, before merging
  int sbl_layers = 0;
  int fill_layers = 0;
  double z_bl = 0.0;
  double z_top = 0.0;
  QualityReport quality_before;
  QualityReport quality;
  AuditReport audit;
  StructuredEstimate structured;
  std::vector<std::string> log;
  std::string report_json;
};

/// Surface, sweep, fill, merge, optimize, audit. The run report contains
/// the structured-estimate comparison.
AblRun run_abl(const RunConfig& cfg, const LogFn& log = {});

/// JSON rendering of a quality report.
std::string quality_report_json(const QualityReport& r);

/// Writes <out>/<stem>.mesh (or .vtk for format vtk) plus an extra .vtk when
/// cfg.vtk is set. Returns the written paths.
std::vector<std::string> write_outputs(const RunConfig& cfg, const std::string& stem, const TriSurfaceMesh* surface,
                                       const HybridMesh* hybrid);

}  // namespace ablmesh
