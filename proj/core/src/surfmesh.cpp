#include "ablmesh/surfmesh.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ablmesh/error.hpp"
#include "ablmesh/locator.hpp"
#include "ablmesh/optim.hpp"
#include "ablmesh/planar_triangulation.hpp"

namespace ablmesh {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kEquilateralArea = 0.433;

bool inside_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
  }
  return in;
}

// Closed polygon on the ellipse with spacing following `size` along the arc.
std::vector<Vec2> ellipse_polygon(const Ellipse2& e, const std::function<double(const Vec2&)>& size) {
  constexpr int kFine = 4096;
  std::vector<double> tau(kFine + 1, 0.0);
  Vec2 prev = e.point_at(0.0);
  for (int i = 1; i <= kFine; ++i) {
    const Vec2 p = e.point_at(2.0 * M_PI * i / kFine);
    tau[i] = tau[i - 1] + distance(prev, p) / size((prev + p) * 0.5);
    prev = p;
  }
  const int n = std::max(12, static_cast<int>(std::ceil(tau.back())));
  std::vector<Vec2> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double target = tau.back() * k / n;
    const auto it = std::lower_bound(tau.begin(), tau.end(), target);
    const int i = std::max(1, static_cast<int>(it - tau.begin()));
    const double f = (target - tau[i - 1]) / (tau[i] - tau[i - 1]);
    out.push_back(e.point_at(2.0 * M_PI * (i - 1 + f) / kFine));
  }
  return out;
}

Vec2 centroid_uv(const TriSurfaceMesh& m, int t) {
  const auto& v = m.triangles[t];
  return (m.uv[v[0]] + m.uv[v[1]] + m.uv[v[2]]) / 3.0;
}

TriSurfaceMesh from_planar(const PlanarMesh& pm) {
  TriSurfaceMesh m;
  m.uv = pm.points;
  m.xyz.reserve(pm.points.size());
  for (const auto& p : pm.points) m.xyz.push_back({p.x, p.y, 0.0});
  m.triangles = pm.triangles;
  m.region.reserve(pm.tags.size());
  for (int t : pm.tags) m.region.push_back(static_cast<Region>(t));
  return m;
}

void emit(const AdaptOptions& o, const std::string& line) {
  if (o.log) o.log(line);
}

}  // namespace

Region RegionLayout::region_of(const Vec2& p) const {
  if (farm.contains(p)) return Region::farm;
  if (transition.contains(p)) return Region::transition;
  return Region::buffer;
}

double RegionLayout::size_at(const Vec2& p) const {
  const Vec2 q = farm.to_local(p);
  const double s = std::max(std::abs(q.x) / farm.half_extents.x, std::abs(q.y) / farm.half_extents.y);
  if (s <= 1.0) return h_max;
  const double rho = buffer.radius_of(p);
  // Fraction of the way from the farm boundary to the buffer boundary along
  // the ray through p; both norms scale linearly with distance.
  const double t = s > rho ? std::clamp(rho * (s - 1.0) / (s - rho), 0.0, 1.0) : 1.0;
  return h_max * std::pow(h_buffer / h_max, t);
}

RegionLayout build_region_layout(const Rect2& farm, double transition_factor, double buffer_factor, double h_max,
                                 double h_buffer, const TerrainModel* terrain) {
  if (!(farm.half_extents.x > 0.0) || !(farm.half_extents.y > 0.0))
    throw ParameterError("region layout: farm half extents must be positive");
  if (!(transition_factor > 1.0) || !(buffer_factor > transition_factor))
    throw ParameterError("region layout: need 1 < transition_factor < buffer_factor");
  if (!(h_max > 0.0) || !(h_buffer > 0.0)) throw ParameterError("region layout: sizes must be positive");
  RegionLayout l;
  l.farm = farm;
  l.h_max = h_max;
  l.h_buffer = h_buffer;
  const Vec2 base = farm.half_extents * kSqrt2;
  l.transition = {farm.center, base * transition_factor, farm.angle};
  l.buffer = {farm.center, base * buffer_factor, farm.angle};
  if (terrain) {
    for (const auto& c : farm.corners()) {
      if (!terrain->contains(c)) {
        std::ostringstream os;
        os << "region layout: farm corner (" << c.x << ", " << c.y << ") is outside the terrain domain";
        throw ParameterError(os.str());
      }
    }
    for (int k = 0; k < 256; ++k) {
      const Vec2 p = l.buffer.point_at(2.0 * M_PI * k / 256);
      if (!terrain->contains(p)) {
        std::ostringstream os;
        os << "region layout: buffer ellipse leaves the terrain domain at (" << p.x << ", " << p.y
           << "); reduce buffer_factor";
        throw ParameterError(os.str());
      }
    }
  }
  return l;
}

TriSurfaceMesh initial_planar_mesh(const RegionLayout& layout, double h_max) {
  if (!(h_max > 0.0)) throw ParameterError("initial mesh: h_max must be positive");
  if (layout.h_buffer < h_max)
    throw ParameterError("initial mesh: h_buffer (" + std::to_string(layout.h_buffer) + ") is below h_max (" +
                         std::to_string(h_max) + ")");
  RegionLayout l = layout;
  l.h_max = h_max;
  const auto size = [&l](const Vec2& p) { return l.size_at(p); };

  std::vector<Vec2> pts;
  std::vector<std::array<int, 2>> segs;
  auto add_loop = [&](const std::vector<Vec2>& loop) {
    const int base = static_cast<int>(pts.size());
    const int n = static_cast<int>(loop.size());
    pts.insert(pts.end(), loop.begin(), loop.end());
    for (int i = 0; i < n; ++i) segs.push_back({base + i, base + (i + 1) % n});
  };

  const auto outer = ellipse_polygon(l.buffer, [&](const Vec2&) { return l.h_buffer; });
  const auto middle = ellipse_polygon(l.transition, size);
  std::vector<Vec2> farm_loop;
  const auto corners = l.farm.corners();
  for (int c = 0; c < 4; ++c) {
    const Vec2 a = corners[c], b = corners[(c + 1) % 4];
    const int n = std::max(1, static_cast<int>(std::ceil(distance(a, b) / h_max - 1e-9)));
    for (int k = 0; k < n; ++k) farm_loop.push_back(a + (b - a) * (static_cast<double>(k) / n));
  }
  for (const auto& c : corners)
    if (!inside_polygon(middle, c)) throw ParameterError("initial mesh: transition polygon cuts the farm corners");
  add_loop(outer);
  add_loop(middle);
  add_loop(farm_loop);

  auto classify = [&](const Vec2& p) {
    if (!inside_polygon(outer, p)) return PlanarTriangulation::kOutside;
    if (inside_polygon(farm_loop, p)) return static_cast<int>(Region::farm);
    if (inside_polygon(middle, p)) return static_cast<int>(Region::transition);
    return static_cast<int>(Region::buffer);
  };
  auto tr = PlanarTriangulation::from_pslg(pts, segs, classify);
  RefineOptions opts;
  opts.size = size;
  tr.refine(opts);
  TriSurfaceMesh m = from_planar(tr.extract());
  m.target_size.resize(m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) m.target_size[t] = l.size_at(centroid_uv(m, static_cast<int>(t)));
  return m;
}

std::vector<int> find_elems_to_refine(const TriSurfaceMesh& mesh, const MetricField2& tangent,
                                      const MetricField2* curvature, double h_min) {
  std::vector<int> out;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (mesh.region[t] != Region::farm) continue;
    const auto& v = mesh.triangles[t];
    bool small = false;
    for (int k = 0; k < 3; ++k)
      if (distance(mesh.uv[v[k]], mesh.uv[v[(k + 1) % 3]]) < 2.0 * h_min) small = true;
    if (small) continue;
    bool long_edge = false;
    for (int k = 0; k < 3 && !long_edge; ++k) {
      const Vec2 a = mesh.uv[v[k]], b = mesh.uv[v[(k + 1) % 3]];
      if (edge_length_under_metric(a, b, tangent) > kSqrt2) long_edge = true;
      else if (curvature && edge_length_under_metric(a, b, *curvature) > kSqrt2) long_edge = true;
    }
    if (long_edge) out.push_back(static_cast<int>(t));
  }
  return out;
}

TriSurfaceMesh refine_planar_mesh(const TriSurfaceMesh& mesh, const std::vector<int>& flagged) {
  if (flagged.empty()) return mesh;
  // Background size: the longest edge of each element, halved where flagged.
  std::vector<double> target(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& v = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) target[t] = std::max(target[t], distance(mesh.uv[v[k]], mesh.uv[v[(k + 1) % 3]]));
  }
  for (int t : flagged) target[t] *= 0.5;
  const TriangleLocator background(mesh.uv, mesh.triangles);
  auto size = [&](const Vec2& p) {
    const int t = background.locate(p, 1e-9);
    if (t >= 0) return target[t];
    // Outside the background (boundary round-off): nearest-vertex element.
    double best = 1e300;
    int bt = 0;
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
      const double d = distance(centroid_uv(mesh, static_cast<int>(i)), p);
      if (d < best) best = d, bt = static_cast<int>(i);
    }
    return target[bt];
  };

  PlanarMesh pm;
  pm.points = mesh.uv;
  pm.triangles = mesh.triangles;
  pm.tags.reserve(mesh.region.size());
  for (auto r : mesh.region) pm.tags.push_back(static_cast<int>(r));
  auto tr = PlanarTriangulation::from_mesh(pm);
  RefineOptions opts;
  opts.size = size;
  opts.edge_factor = 1.0;
  tr.refine(opts);
  TriSurfaceMesh out = from_planar(tr.extract());
  out.target_size.resize(out.triangles.size());
  for (std::size_t t = 0; t < out.triangles.size(); ++t) out.target_size[t] = size(centroid_uv(out, static_cast<int>(t)));
  return out;
}

void map_to_surface(TriSurfaceMesh& mesh, const TerrainModel& terrain) {
  mesh.xyz.resize(mesh.uv.size());
  for (std::size_t i = 0; i < mesh.uv.size(); ++i) mesh.xyz[i] = terrain.surface_point(mesh.uv[i]);
}

TriSurfaceMesh uniform_surface(const TerrainModel& terrain, const RegionLayout& layout, double h_max) {
  TriSurfaceMesh m = initial_planar_mesh(layout, h_max);
  map_to_surface(m, terrain);
  return m;
}

AdaptResult adapt_surface(std::shared_ptr<const TerrainModel> terrain, const RegionLayout& layout, double h_max,
                          double h_min, const AdaptOptions& opts) {
  if (!(h_min > 0.0) || h_min > h_max) throw ParameterError("adapt: need 0 < h_min <= h_max");
  AdaptResult r;
  const double h_avg = 0.5 * (h_max + h_min);
  r.n_target = layout.farm.area() / (kEquilateralArea * h_avg * h_avg);

  const auto fits = std::make_shared<const FitCache>(terrain);
  const auto tangent = MetricField2::tangent(fits, h_max);
  const auto c1 = metric_complexity(MetricField2::curvature(fits, 1.0, std::nullopt), layout.farm);
  r.c1 = c1.value;
  if (!c1.warning.empty()) r.warnings.push_back(c1.warning);
  r.beta = beta_star(r.n_target, opts.alpha, r.c1);
  std::optional<MetricField2> curvature;
  if (r.beta) {
    curvature = MetricField2::curvature(fits, *r.beta, ClampBounds{h_min, h_max});
    const auto ck = metric_complexity(*curvature, layout.farm);
    r.curvature_complexity = ck.value;
    if (!ck.warning.empty()) r.warnings.push_back(ck.warning);
  }
  {
    std::ostringstream os;
    os << "adapt n_target=" << r.n_target << " c1=" << r.c1 << " beta="
       << (r.beta ? std::to_string(*r.beta) : std::string("inactive")) << " c_kappa=" << r.curvature_complexity;
    emit(opts, os.str());
  }

  TriSurfaceMesh mesh = initial_planar_mesh(layout, h_max);
  const MetricField2* kappa = curvature ? &*curvature : nullptr;
  for (int cycle = 0;; ++cycle) {
    const auto flagged = find_elems_to_refine(mesh, tangent, kappa, h_min);
    r.cycles.push_back({cycle, mesh.node_count(), mesh.element_count(), flagged.size()});
    std::ostringstream os;
    os << "cycle=" << cycle << " nodes=" << mesh.node_count() << " elements=" << mesh.element_count()
       << " flagged=" << flagged.size();
    emit(opts, os.str());
    if (flagged.empty()) break;
    if (cycle >= opts.max_cycles)
      throw MeshingError("adapt: " + std::to_string(flagged.size()) + " elements still flagged after " +
                         std::to_string(opts.max_cycles) + " refine cycles");
    mesh = refine_planar_mesh(mesh, flagged);
  }
  map_to_surface(mesh, *terrain);
  if (opts.optimize) {
    const auto records = optimize_surface(mesh, *terrain, opts.optimizer);
    for (const auto& rec : records) emit(opts, to_log_line("surface-optim", rec));
  }
  r.mesh = std::move(mesh);
  return r;
}

}  // namespace ablmesh
