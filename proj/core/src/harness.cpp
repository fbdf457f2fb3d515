#include "ablmesh/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "ablmesh/error.hpp"

namespace ablmesh {

namespace {

using json = nlohmann::ordered_json;

// 7-point degree-5 rule on the reference triangle.
constexpr double kW0 = 0.225;
constexpr double kW1 = 0.132394152788506;
constexpr double kW2 = 0.125939180544827;
constexpr double kA1 = 0.059715871789770, kB1 = 0.470142064105115;
constexpr double kA2 = 0.797426985353087, kB2 = 0.101286507323456;

std::vector<double> graded_axis(double lo, double hi, double fine_lo, double fine_hi, double fine, double coarse) {
  fine_lo = std::clamp(fine_lo, lo, hi);
  fine_hi = std::clamp(fine_hi, lo, hi);
  std::vector<double> xs{lo};
  auto span = [&](double a, double b, double h) {
    if (!(b > a)) return;
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
    for (int i = 1; i <= n; ++i) xs.push_back(i == n ? b : a + (b - a) * i / n);
  };
  span(lo, fine_lo, coarse);
  span(fine_lo, fine_hi, fine);
  span(fine_hi, hi, coarse);
  return xs;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size() || !std::isfinite(d))
    throw ParameterError("config: '" + key + "' expects a number, got '" + v + "'");
  return d;
}

int parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size() || i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max())
    throw ParameterError("config: '" + key + "' expects an integer, got '" + v + "'");
  return static_cast<int>(i);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ParameterError("config: '" + key + "' expects true or false, got '" + v + "'");
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

json stats_json(const QualityStats& s) {
  json j;
  j["count"] = s.count;
  j["min"] = s.min;
  j["max"] = s.max;
  j["mean"] = s.mean;
  j["stddev"] = s.stddev;
  j["inverted"] = s.inverted;
  j["histogram"] = s.histogram;
  return j;
}

json quality_json(const QualityReport& r) {
  json j;
  j["overall"] = stats_json(r.overall);
  json k = json::object();
  for (const auto& [name, s] : r.by_kind) k[name] = stats_json(s);
  j["by_kind"] = k;
  return j;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json config_json(const RunConfig& c) {
  json j;
  j["terrain"] = c.terrain;
  j["terrain-format"] = c.terrain_format;
  j["terrain-spacing"] = opt_json(c.terrain_spacing);
  j["farm-cx"] = c.farm_cx;
  j["farm-cy"] = c.farm_cy;
  j["farm-hx"] = c.farm_hx;
  j["farm-hy"] = c.farm_hy;
  j["farm-angle"] = c.farm_angle;
  j["transition-factor"] = c.transition_factor;
  j["buffer-factor"] = c.buffer_factor;
  j["hmax"] = c.h_max;
  j["hmin"] = c.h_min;
  j["hbuffer"] = opt_json(c.h_buffer);
  j["h0"] = c.h0;
  j["ratio"] = c.r;
  j["h1"] = opt_json(c.h1);
  j["zbl"] = opt_json(c.z_bl);
  j["ztop"] = opt_json(c.z_top);
  j["h2"] = opt_json(c.h2);
  j["fill-ratio"] = c.fill_ratio;
  j["fill-backend"] = c.fill_backend;
  j["fill-file"] = c.fill_file;
  j["sweeps"] = c.optimizer.sweeps_max;
  j["node-iters"] = c.optimizer.node_iters_max;
  j["step-tol"] = c.optimizer.step_tolerance;
  j["q-local"] = c.optimizer.quality_threshold_local;
  j["patch-layers"] = c.optimizer.neighbor_layers_local;
  j["delta"] = c.optimizer.regularization_delta;
  j["adapt"] = c.adapt;
  j["optimize"] = c.optimize;
  j["out"] = c.out;
  j["format"] = c.format;
  j["vtk"] = c.vtk;
  j["seed"] = c.seed;
  return j;
}

json layout_json(const RegionLayout& l) {
  json j;
  j["farm"] = {{"center", {l.farm.center.x, l.farm.center.y}},
               {"half_extents", {l.farm.half_extents.x, l.farm.half_extents.y}},
               {"angle_rad", l.farm.angle}};
  j["transition_semi_axes"] = {l.transition.semi_axes.x, l.transition.semi_axes.y};
  j["buffer_semi_axes"] = {l.buffer.semi_axes.x, l.buffer.semi_axes.y};
  j["h_max"] = l.h_max;
  j["h_buffer"] = l.h_buffer;
  return j;
}

json sweep_records_json(const std::vector<SweepRecord>& recs) {
  json a = json::array();
  for (const auto& r : recs)
    a.push_back({{"sweep", r.sweep},
                 {"f", r.f},
                 {"min_quality", r.min_quality},
                 {"mean_quality", r.mean_quality},
                 {"max_displacement", r.max_displacement},
                 {"accepted_moves", r.accepted_moves}});
  return a;
}

class Clock {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// Collects log lines and forwards them.
struct Logger {
  std::vector<std::string>* lines;
  const LogFn* sink;
  void operator()(const std::string& s) const {
    lines->push_back(s);
    if (sink && *sink) (*sink)(s);
  }
};

RegionLayout config_layout(const RunConfig& c, const TerrainModel* terrain) {
  return build_region_layout(c.farm(), c.transition_factor, c.buffer_factor, c.h_max,
                             c.h_buffer.value_or(5.0 * c.h_max), terrain);
}

std::size_t surface_farm_nodes(const TriSurfaceMesh& m) { return m.farm_node_count(); }

}  // namespace

// ---------------------------------------------------------------------------
// Analytic terrains

AnalyticTerrain analytic_terrain(const std::string& name) {
  if (name == "flat") return {name, [](double, double) { return 0.0; }};
  if (name == "plane") return {name, [](double x, double) { return 0.5 * x; }};
  if (name == "paraboloid") return {name, [](double x, double y) { return 0.5 * (x * x + y * y); }};
  if (name == "gaussian")
    return {name, [](double x, double y) { return std::exp(-(x * x + y * y) / (2.0 * 0.25)); }};
  if (name == "ridges")
    return {name, [](double x, double y) { return 0.2 * std::sin(M_PI * x) + 0.1 * std::sin(M_PI * y); }};
  if (name == "scarp") return {name, [](double x, double) { return 0.5 * std::tanh(10.0 * x); }};
  throw ParameterError("unknown analytic terrain '" + name + "'");
}

std::vector<std::string> analytic_terrain_names() {
  return {"flat", "plane", "paraboloid", "gaussian", "ridges", "scarp"};
}

TerrainModel sample_terrain(const HeightFunction& f, const Box2& domain, const Box2& fine_box, double fine,
                            double coarse) {
  if (domain.empty() || !(fine > 0.0) || !(coarse > 0.0))
    throw ParameterError("sample_terrain: need a non-empty domain and positive spacings");
  const auto xs = graded_axis(domain.lo.x, domain.hi.x, fine_box.lo.x, fine_box.hi.x, fine, coarse);
  const auto ys = graded_axis(domain.lo.y, domain.hi.y, fine_box.lo.y, fine_box.hi.y, fine, coarse);
  return terrain_from_function(f, xs, ys);
}

// ---------------------------------------------------------------------------
// Geometry error and convergence

L2Error geometry_l2_error(const TriSurfaceMesh& m, const HeightFunction& truth, const Rect2& farm) {
  static const std::array<std::array<double, 4>, 7> pts{{{1.0 / 3, 1.0 / 3, 1.0 / 3, kW0},
                                                         {kA1, kB1, kB1, kW1},
                                                         {kB1, kA1, kB1, kW1},
                                                         {kB1, kB1, kA1, kW1},
                                                         {kA2, kB2, kB2, kW2},
                                                         {kB2, kA2, kB2, kW2},
                                                         {kB2, kB2, kA2, kW2}}};
  L2Error r;
  r.expected_area = farm.area();
  double sum = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    if (m.region[t] != Region::farm) continue;
    const auto& v = m.triangles[t];
    const Vec3 &a = m.xyz[v[0]], &b = m.xyz[v[1]], &c = m.xyz[v[2]];
    const double area = 0.5 * std::abs(cross(b.xy() - a.xy(), c.xy() - a.xy()));
    r.farm_area += area;
    for (const auto& q : pts) {
      const Vec3 p = a * q[0] + b * q[1] + c * q[2];
      const double e = p.z - truth(p.x, p.y);
      sum += q[3] * area * e * e;
    }
  }
  if (r.farm_area == 0.0) throw InputError("geometry error: mesh has no farm triangles");
  r.error = std::sqrt(sum);
  const double missing = 1.0 - r.farm_area / r.expected_area;
  if (missing > 1e-3) {
    std::ostringstream os;
    os << "geometry error: mesh covers " << 100.0 * (1.0 - missing) << "% of the farm area";
    r.warning = os.str();
  }
  return r;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ParameterError("slope: values must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double d = n * sxx - sx * sx;
  if (d == 0.0) throw ParameterError("slope: abscissae coincide");
  return (n * sxy - sx * sy) / d;
}

const ConvergenceRecord* ConvergenceStudy::find(int level, bool adaptive, bool optimized) const {
  for (const auto& r : records)
    if (r.level == level && r.adaptive == adaptive && r.optimized == optimized) return &r;
  return nullptr;
}

double ConvergenceStudy::ratio(int level, bool adaptive, bool optimized) const {
  const auto* u = find(level, false, false);
  const auto* v = find(level, adaptive, optimized);
  if (!u || !v || u->error == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return v->error / u->error;
}

int ConvergenceStudy::levels() const {
  int n = 0;
  for (const auto& r : records) n = std::max(n, r.level + 1);
  return n;
}

std::string ConvergenceStudy::to_text() const {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "level h_max h_min variant farm_nodes total_nodes size_indicator l2_error farm_area\n";
  for (const auto& r : records) {
    os << r.level << ' ' << r.h_max << ' ' << r.h_min << ' ' << (r.adaptive ? "adaptive" : "uniform")
       << (r.optimized ? "-opt" : "") << ' ' << r.nodes << ' ' << r.total_nodes << ' ' << r.size_indicator << ' '
       << r.error << ' ' << r.farm_area << '\n';
  }
  for (const auto& [k, s] : slopes) os << "slope." << k << ": " << s << '\n';
  os << "level ea/eu eu_opt/eu ea_opt/eu\n";
  for (int l = 0; l < levels(); ++l)
    os << l << ' ' << ratio(l, true, false) << ' ' << ratio(l, false, true) << ' ' << ratio(l, true, true) << '\n';
  return os.str();
}

ConvergenceStudy run_convergence_study(std::shared_ptr<const TerrainModel> terrain, const HeightFunction& truth,
                                       const Rect2& farm, const std::vector<ConvergenceLevel>& levels,
                                       const ConvergenceOptions& o) {
  if (levels.size() < 3) throw ParameterError("convergence study: need at least 3 levels");
  if (!o.uniform && !o.adaptive) throw ParameterError("convergence study: nothing to run");
  for (const auto& l : levels)
    if (!(l.h_max > 0.0) || !(l.h_min > 0.0) || l.h_min > l.h_max)
      throw ParameterError("convergence study: each level needs 0 < h_min <= h_max");

  struct LevelOut {
    std::vector<ConvergenceRecord> recs;
    std::vector<std::string> warnings;
  };
  auto run_level = [&](int li) {
    LevelOut out;
    const auto& lv = levels[li];
    const RegionLayout layout = build_region_layout(farm, o.transition_factor, o.buffer_factor, lv.h_max,
                                                    o.buffer_size_ratio * lv.h_max, terrain.get());
    auto record = [&](const TriSurfaceMesh& m, bool adaptive, bool optimized) {
      const L2Error e = geometry_l2_error(m, truth, farm);
      if (!e.warning.empty()) out.warnings.push_back(e.warning);
      ConvergenceRecord r;
      r.level = li;
      r.h_max = lv.h_max;
      r.h_min = lv.h_min;
      r.adaptive = adaptive;
      r.optimized = optimized;
      r.nodes = surface_farm_nodes(m);
      r.total_nodes = m.node_count();
      r.size_indicator = 1.0 / std::sqrt(static_cast<double>(r.nodes));
      r.error = e.error;
      r.farm_area = e.farm_area;
      out.recs.push_back(r);
    };
    if (o.uniform) {
      TriSurfaceMesh u = uniform_surface(*terrain, layout, lv.h_max);
      record(u, false, false);
      if (o.optimize) {
        optimize_surface(u, *terrain, o.optimizer);
        record(u, false, true);
      }
    }
    if (o.adaptive) {
      AdaptOptions ao;
      ao.optimize = false;
      AdaptResult a = adapt_surface(terrain, layout, lv.h_max, lv.h_min, ao);
      for (const auto& w : a.warnings) out.warnings.push_back(w);
      record(a.mesh, true, false);
      if (o.optimize) {
        optimize_surface(a.mesh, *terrain, o.optimizer);
        record(a.mesh, true, true);
      }
    }
    return out;
  };

  std::vector<LevelOut> outs(levels.size());
  if (o.parallel) {
    std::vector<std::future<LevelOut>> fut;
    for (std::size_t i = 0; i < levels.size(); ++i)
      fut.push_back(std::async(std::launch::async, run_level, static_cast<int>(i)));
    for (std::size_t i = 0; i < levels.size(); ++i) outs[i] = fut[i].get();
  } else {
    for (std::size_t i = 0; i < levels.size(); ++i) outs[i] = run_level(static_cast<int>(i));
  }

  ConvergenceStudy s;
  for (auto& lo : outs) {
    for (auto& r : lo.recs) {
      if (o.log) {
        std::ostringstream os;
        os << "level=" << r.level << " h_max=" << r.h_max << " variant=" << (r.adaptive ? "adaptive" : "uniform")
           << (r.optimized ? "-opt" : "") << " N=" << r.nodes << " error=" << r.error;
        o.log(os.str());
      }
      s.records.push_back(r);
    }
    for (auto& w : lo.warnings) s.warnings.push_back(w);
  }
  for (bool adaptive : {false, true})
    for (bool optimized : {false, true}) {
      std::vector<double> x, y;
      for (const auto& r : s.records)
        if (r.adaptive == adaptive && r.optimized == optimized && r.error > 0.0) {
          x.push_back(r.size_indicator);
          y.push_back(r.error);
        }
      if (x.size() >= 2)
        s.slopes[std::string(adaptive ? "adaptive" : "uniform") + (optimized ? "-opt" : "")] = loglog_slope(x, y);
    }
  return s;
}

StructuredEstimate structured_node_estimate(const RegionLayout& layout, int sheets) {
  if (sheets < 2) throw ParameterError("structured estimate: need at least two sheets");
  StructuredEstimate e;
  e.surface_nodes = layout.buffer.area() / (layout.h_max * layout.h_max);
  e.sheets = sheets;
  e.nodes = e.surface_nodes * sheets;
  return e;
}

// ---------------------------------------------------------------------------
// Configuration

const std::vector<std::array<std::string, 3>>& RunConfig::keys() {
  static const std::vector<std::array<std::string, 3>> k{
      {"terrain", "TEXT", "terrain file or analytic:<flat|plane|paraboloid|gaussian|ridges|scarp>"},
      {"terrain-format", "TEXT", "grid | cloud | mesh (file terrains)"},
      {"terrain-spacing", "NUM", "analytic sampling step inside the farm (default h_min/4)"},
      {"farm-cx", "NUM", "farm center x"},
      {"farm-cy", "NUM", "farm center y"},
      {"farm-hx", "NUM", "farm half extent along its x axis"},
      {"farm-hy", "NUM", "farm half extent along its y axis"},
      {"farm-angle", "NUM", "farm rotation in degrees"},
      {"transition-factor", "NUM", "transition ellipse factor"},
      {"buffer-factor", "NUM", "buffer ellipse factor"},
      {"hmax", "NUM", "surface size in the farm"},
      {"hmin", "NUM", "minimum surface size"},
      {"hbuffer", "NUM", "surface size on the buffer boundary (default 5 hmax)"},
      {"h0", "NUM", "first prism layer height"},
      {"ratio", "NUM", "prism growth ratio"},
      {"h1", "NUM", "prism layer height cap (default mean surface edge)"},
      {"zbl", "NUM", "prism layer depth (default 20% of the domain height)"},
      {"ztop", "NUM", "ceiling height (default highest point + 2000)"},
      {"h2", "NUM", "size at the ceiling (default hbuffer)"},
      {"fill-ratio", "NUM", "tetrahedral fill growth ratio"},
      {"fill-backend", "TEXT", "builtin | external"},
      {"fill-file", "TEXT", "exchange file for the external fill"},
      {"sweeps", "INT", "optimizer Gauss-Seidel sweeps"},
      {"node-iters", "INT", "optimizer passes per node"},
      {"step-tol", "NUM", "optimizer stopping displacement (fraction of local edge)"},
      {"q-local", "NUM", "quality threshold for local patch optimization"},
      {"patch-layers", "INT", "neighbor layers added to a local patch"},
      {"delta", "NUM", "regularization, relative to the mean determinant"},
      {"adapt", "BOOL", "adapt the surface to the terrain"},
      {"optimize", "BOOL", "run the optimizers"},
      {"out", "TEXT", "output directory"},
      {"format", "TEXT", "exchange | vtk"},
      {"vtk", "BOOL", "also write a VTK file"},
      {"seed", "INT", "random seed"},
  };
  return k;
}

void RunConfig::set(const std::string& key, const std::string& v) {
  auto num = [&] { return parse_double(key, v); };
  auto opt = [&]() -> std::optional<double> {
    if (v == "auto" || v == "default") return std::nullopt;
    return parse_double(key, v);
  };
  if (key == "terrain") terrain = v;
  else if (key == "terrain-format") terrain_format = v;
  else if (key == "terrain-spacing") terrain_spacing = opt();
  else if (key == "farm-cx") farm_cx = num();
  else if (key == "farm-cy") farm_cy = num();
  else if (key == "farm-hx") farm_hx = num();
  else if (key == "farm-hy") farm_hy = num();
  else if (key == "farm-angle") farm_angle = num();
  else if (key == "transition-factor") transition_factor = num();
  else if (key == "buffer-factor") buffer_factor = num();
  else if (key == "hmax") h_max = num();
  else if (key == "hmin") h_min = num();
  else if (key == "hbuffer") h_buffer = opt();
  else if (key == "h0") h0 = num();
  else if (key == "ratio") r = num();
  else if (key == "h1") h1 = opt();
  else if (key == "zbl") z_bl = opt();
  else if (key == "ztop") z_top = opt();
  else if (key == "h2") h2 = opt();
  else if (key == "fill-ratio") fill_ratio = num();
  else if (key == "fill-backend") fill_backend = v;
  else if (key == "fill-file") fill_file = v;
  else if (key == "sweeps") optimizer.sweeps_max = parse_int(key, v);
  else if (key == "node-iters") optimizer.node_iters_max = parse_int(key, v);
  else if (key == "step-tol") optimizer.step_tolerance = num();
  else if (key == "q-local") optimizer.quality_threshold_local = num();
  else if (key == "patch-layers") optimizer.neighbor_layers_local = parse_int(key, v);
  else if (key == "delta") optimizer.regularization_delta = num();
  else if (key == "adapt") adapt = parse_bool(key, v);
  else if (key == "optimize") optimize = parse_bool(key, v);
  else if (key == "out") out = v;
  else if (key == "format") format = v;
  else if (key == "vtk") vtk = parse_bool(key, v);
  else if (key == "seed") {
    const int s = parse_int(key, v);
    if (s < 0) throw ParameterError("config: seed must be non-negative");
    seed = static_cast<unsigned>(s);
  } else
    throw ParameterError("config: unknown key '" + key + "'");
}

Rect2 RunConfig::farm() const { return {{farm_cx, farm_cy}, {farm_hx, farm_hy}, farm_angle * M_PI / 180.0}; }

void RunConfig::validate() const {
  if (!(farm_hx > 0.0) || !(farm_hy > 0.0)) throw ParameterError("farm half extents must be positive");
  if (!(h_max > 0.0) || !(h_min > 0.0) || h_min > h_max)
    throw ParameterError("surface sizes need 0 < hmin <= hmax");
  if (h_buffer && *h_buffer < h_max) throw ParameterError("hbuffer must be at least hmax");
  if (terrain_spacing && !(*terrain_spacing > 0.0)) throw ParameterError("terrain-spacing must be positive");
  if (!(h0 > 0.0)) throw ParameterError("h0 must be positive");
  if (!(r >= 1.0)) throw ParameterError("ratio must be at least 1");
  if (h1 && !(*h1 > 0.0)) throw ParameterError("h1 must be positive");
  if (z_bl && !(*z_bl > 0.0)) throw ParameterError("zbl must be positive");
  if (h2 && !(*h2 > 0.0)) throw ParameterError("h2 must be positive");
  if (!(fill_ratio >= 1.0)) throw ParameterError("fill-ratio must be at least 1");
  if (fill_backend != "builtin" && fill_backend != "external")
    throw ParameterError("fill-backend must be builtin or external");
  if (fill_backend == "external" && fill_file.empty()) throw ParameterError("external fill needs fill-file");
  if (terrain_format != "grid" && terrain_format != "cloud" && terrain_format != "mesh")
    throw ParameterError("terrain-format must be grid, cloud or mesh");
  parse_mesh_format(format);
  optimizer.validate();
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& name) {
  std::istringstream is(text);
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(name, n, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ParseError(name, n, "expected 'key = value'");
    try {
      cfg.set(key, value);
    } catch (const ParameterError& e) {
      throw ParseError(name, n, e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  apply_config_text(cfg, ss.str(), path);
}

// ---------------------------------------------------------------------------
// Pipelines

std::shared_ptr<const TerrainModel> load_config_terrain(const RunConfig& c, std::string* description) {
  const std::string prefix = "analytic:";
  if (c.terrain.rfind(prefix, 0) == 0) {
    const AnalyticTerrain a = analytic_terrain(c.terrain.substr(prefix.size()));
    const RegionLayout l = config_layout(c, nullptr);
    const double ca = std::cos(l.buffer.angle), sa = std::sin(l.buffer.angle);
    const double ax = l.buffer.semi_axes.x, ay = l.buffer.semi_axes.y;
    const double margin = 1.05;
    const double wx = margin * std::hypot(ax * ca, ay * sa) + l.h_buffer;
    const double wy = margin * std::hypot(ax * sa, ay * ca) + l.h_buffer;
    Box2 domain;
    domain.extend(l.buffer.center - Vec2{wx, wy});
    domain.extend(l.buffer.center + Vec2{wx, wy});
    Box2 fine;
    for (const auto& p : l.farm.corners()) fine.extend(p);
    const Vec2 pad{0.1 * fine.width(), 0.1 * fine.height()};
    fine.lo = fine.lo - pad;
    fine.hi = fine.hi + pad;
    const double hf = c.terrain_spacing.value_or(c.h_min / 4.0);
    const double hc = std::max(hf, c.h_max / 2.0);
    if (description) {
      std::ostringstream os;
      os << "analytic " << a.name << " sampled at " << hf << " in the farm, " << hc << " elsewhere";
      *description = os.str();
    }
    return std::make_shared<const TerrainModel>(sample_terrain(a.height, domain, fine, hf, hc));
  }
  const TerrainFormat f = c.terrain_format == "cloud"  ? TerrainFormat::point_cloud
                          : c.terrain_format == "mesh" ? TerrainFormat::triangle_mesh
                                                       : TerrainFormat::height_grid;
  if (description) *description = c.terrain_format + " file " + c.terrain;
  return std::make_shared<const TerrainModel>(load_terrain(c.terrain, f));
}

namespace {

struct SurfaceStage {
  SurfaceRun run;
  std::shared_ptr<const TerrainModel> terrain;
  json report;
};

SurfaceStage surface_stage(const RunConfig& c, const Logger& log, const std::string& command) {
  c.validate();
  const Clock clock;
  SurfaceStage st;
  std::string terrain_desc;
  st.terrain = load_config_terrain(c, &terrain_desc);
  log("terrain: " + terrain_desc + " (" + std::to_string(st.terrain->nodes().size()) + " nodes)");
  const RegionLayout layout = config_layout(c, st.terrain.get());
  st.run.layout = layout;
  json& j = st.report;
  j["command"] = command;
  j["config"] = config_json(c);
  j["terrain"] = {{"source", terrain_desc},
                  {"nodes", st.terrain->nodes().size()},
                  {"triangles", st.terrain->triangles().size()},
                  {"min_height", st.terrain->min_height()},
                  {"max_height", st.terrain->max_height()}};
  j["layout"] = layout_json(layout);

  json warnings = json::array();
  if (c.adapt) {
    AdaptOptions ao;
    ao.optimize = c.optimize;
    ao.optimizer = c.optimizer;
    ao.log = log;
    AdaptResult a = adapt_surface(st.terrain, layout, c.h_max, c.h_min, ao);
    json cycles = json::array();
    for (const auto& cy : a.cycles)
      cycles.push_back({{"cycle", cy.cycle}, {"nodes", cy.nodes}, {"elements", cy.elements}, {"flagged", cy.flagged}});
    j["adapt"] = {{"n_target", a.n_target},
                  {"c1", a.c1},
                  {"beta", opt_json(a.beta)},
                  {"curvature_complexity", a.curvature_complexity},
                  {"refine_cycles", a.refine_cycles()},
                  {"cycles", cycles}};
    for (const auto& w : a.warnings) warnings.push_back(w);
    st.run.mesh = a.mesh;
    st.run.adapt = std::move(a);
  } else {
    st.run.mesh = uniform_surface(*st.terrain, layout, c.h_max);
    log("adapt disabled: initial mesh at h_max lifted onto the terrain");
    j["adapt"] = nullptr;
    if (c.optimize) {
      const auto recs = optimize_surface(st.run.mesh, *st.terrain, c.optimizer);
      for (const auto& r : recs) log(to_log_line("surface-optim", r));
      j["surface_optimization"] = sweep_records_json(recs);
    }
  }
  st.run.quality = mesh_quality_stats(st.run.mesh);
  j["surface"] = {{"nodes", st.run.mesh.node_count()},
                  {"elements", st.run.mesh.element_count()},
                  {"farm_nodes", st.run.mesh.farm_node_count()},
                  {"quality", quality_json(st.run.quality)}};
  j["warnings"] = warnings;
  j["timings"] = {{"surface_seconds", clock.seconds()}};
  return st;
}

void finish_report(json& j, const std::vector<std::string>& lines, std::string& out) {
  j["log"] = lines;
  j["seed_note"] = "no randomized step is used; the seed is recorded for reproducibility";
  out = j.dump(2) + "\n";
}

}  // namespace

SurfaceRun run_surface(const RunConfig& cfg, const LogFn& sink) {
  std::vector<std::string> lines;
  const Logger log{&lines, &sink};
  SurfaceStage st = surface_stage(cfg, log, "mesh-surface");
  st.run.log = lines;
  finish_report(st.report, lines, st.run.report_json);
  return std::move(st.run);
}

AblRun run_abl(const RunConfig& c, const LogFn& sink) {
  std::vector<std::string> lines;
  const Logger log{&lines, &sink};
  const Clock clock;
  SurfaceStage st = surface_stage(c, log, "mesh-abl");
  json& j = st.report;
  AblRun out;
  const TriSurfaceMesh& surf = st.run.mesh;

  double zmin = 1e300, zmax = -1e300;
  for (const auto& p : surf.xyz) {
    zmin = std::min(zmin, p.z);
    zmax = std::max(zmax, p.z);
  }
  out.z_top = c.z_top.value_or(zmax + 2000.0);
  if (!(out.z_top > zmax)) throw ParameterError("ztop must lie above the highest surface point");
  out.z_bl = c.z_bl.value_or(0.2 * (out.z_top - zmin));
  const double h_buffer = st.run.layout.h_buffer;
  const double h2 = c.h2.value_or(h_buffer);

  SweepParams sp;
  sp.h0 = c.h0;
  sp.r = c.r;
  sp.h1 = c.h1;
  sp.z_bl = out.z_bl;
  sp.optimize = c.optimize;
  PrismLayerMesh pl = sweep_sbl(surf, sp, c.optimizer, log);
  out.sbl_layers = pl.layers;
  json layer_recs = json::array();
  for (const auto& r : pl.log)
    layer_recs.push_back({{"layer", r.layer},
                          {"nominal_height", r.nominal_height},
                          {"min_q_before", r.min_q_before},
                          {"mean_q_before", r.mean_q_before},
                          {"min_q_after", r.min_q_after},
                          {"mean_q_after", r.mean_q_after}});
  j["sweep"] = {{"z_bl", out.z_bl}, {"h0", sp.h0}, {"r", sp.r}, {"h1", pl.h1}, {"layers", pl.layers}, {"layer_log", layer_recs}};
  for (const auto& w : pl.warnings) j["warnings"].push_back(w);

  FillParams fp;
  fp.z_top = out.z_top;
  fp.h2 = h2;
  fp.first_height = pl.layer_heights.back() * c.fill_ratio;
  fp.ratio = c.fill_ratio;
  fp.h_interface = pl.h1;
  fp.backend = c.fill_backend == "external" ? FillBackend::external : FillBackend::builtin;
  fp.external_path = c.fill_file;
  const std::vector<Vec3> sheet(pl.mesh.nodes.begin() + static_cast<std::ptrdiff_t>(pl.layers * pl.sheet_size),
                                pl.mesh.nodes.end());
  out.fill = generate_tet_fill(sheet, surf.triangles, surf.boundary_nodes(), fp);
  const TetFill& fill = out.fill;
  out.fill_layers = static_cast<int>(fill.layer_heights.size());
  log("fill: " + std::to_string(fill.tets.size()) + " tetrahedra, " + std::to_string(out.fill_layers) + " layers");
  j["fill"] = {{"backend", c.fill_backend},
               {"z_top", out.z_top},
               {"h2", h2},
               {"first_height", fp.first_height},
               {"ratio", fp.ratio},
               {"h_interface", fp.h_interface},
               {"layer_heights", fill.layer_heights},
               {"tetrahedra", fill.tets.size()},
               {"notes", fill.notes}};

  out.mesh = merge_hybrid(pl, fill);
  out.quality_before = mesh_quality_stats(out.mesh);
  json hybrid_opt = nullptr;
  if (c.optimize) {
    const auto recs = optimize_volume(out.mesh, c.optimizer);
    for (const auto& r : recs) log(to_log_line("volume-optim", r));
    hybrid_opt = sweep_records_json(recs);
  }
  out.quality = mesh_quality_stats(out.mesh);
  out.audit = validate_conformity(out.mesh);
  log(std::string("audit: ") + (out.audit.ok ? "ok" : "FAILED"));

  const int sheets = pl.layers + out.fill_layers + 1;
  out.structured = structured_node_estimate(st.run.layout, sheets);
  const double hybrid_nodes = static_cast<double>(out.mesh.nodes.size());
  j["hybrid"] = {{"nodes", out.mesh.nodes.size()},
                 {"prisms", out.mesh.prisms.size()},
                 {"tetrahedra", out.mesh.tets.size()},
                 {"elements", out.mesh.element_count()},
                 {"volume", mesh_volume(out.mesh)},
                 {"quality_before_optimization", quality_json(out.quality_before)},
                 {"optimization", hybrid_opt},
                 {"quality", quality_json(out.quality)}};
  j["audit"] = {{"ok", out.audit.ok},
                {"faces", out.audit.faces},
                {"boundary_faces", out.audit.boundary_faces},
                {"nonmanifold_faces", out.audit.nonmanifold_faces},
                {"untagged_boundary_faces", out.audit.untagged_boundary_faces},
                {"nonpositive_elements", out.audit.nonpositive_elements},
                {"boundary_euler", out.audit.boundary_euler},
                {"failures", out.audit.failures}};
  j["structured_estimate"] = {{"surface_nodes", out.structured.surface_nodes},
                              {"sheets", out.structured.sheets},
                              {"nodes", out.structured.nodes},
                              {"hybrid_nodes", hybrid_nodes},
                              {"ratio", hybrid_nodes / out.structured.nodes}};
  {
    std::ostringstream os;
    os << "structured estimate: " << std::llround(out.structured.nodes) << " nodes (" << std::llround(out.structured.surface_nodes)
       << " x " << sheets << " sheets), hybrid " << out.mesh.nodes.size() << " nodes, ratio "
       << hybrid_nodes / out.structured.nodes;
    log(os.str());
  }
  j["fidelity_notes"] = {
      "builtin fill grades vertically only; no horizontal size transition inside the fill",
      "structured estimate is analytic: uniform h_max grid over the buffer ellipse times the hybrid sheet count"};
  j["timings"]["total_seconds"] = clock.seconds();

  out.surface = std::move(st.run);
  out.log = lines;
  finish_report(j, lines, out.report_json);
  return out;
}

std::string quality_report_json(const QualityReport& r) { return quality_json(r).dump(2) + "\n"; }

std::vector<std::string> write_outputs(const RunConfig& cfg, const std::string& stem, const TriSurfaceMesh* surface,
                                       const HybridMesh* hybrid) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
  const MeshFormat fmt = parse_mesh_format(cfg.format);
  std::vector<std::string> written;
  auto emit = [&](MeshFormat f) {
    const fs::path p = dir / (stem + (f == MeshFormat::exchange ? ".mesh" : ".vtk"));
    if (surface) write_mesh(*surface, p, f);
    if (hybrid) write_mesh(*hybrid, p, f);
    written.push_back(p.string());
  };
  emit(fmt);
  if (cfg.vtk && fmt != MeshFormat::vtk_legacy) emit(MeshFormat::vtk_legacy);
  return written;
}

}  // namespace ablmesh
