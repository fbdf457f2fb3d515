#include "ablmesh/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ablmesh/error.hpp"
#include "ablmesh/quality.hpp"

namespace ablmesh {

namespace {

struct QStat {
  double min = 1.0;
  double mean = 0.0;
};

QStat layer_stats(const HybridMesh& m, std::size_t first, std::size_t count) {
  QStat s;
  for (std::size_t e = first; e < first + count; ++e) {
    std::array<Vec3, 6> x;
    for (int k = 0; k < 6; ++k) x[k] = m.nodes[m.prisms[e][k]];
    const auto& g = m.ground_triangles[m.prism_base[e]];
    const auto ideal = IdealElement::prism({m.nodes[g[0]], m.nodes[g[1]], m.nodes[g[2]]}, m.prism_height[e]);
    const double q = elem_distortion(x, ideal).quality;
    s.min = std::min(s.min, q);
    s.mean += q;
  }
  if (count) s.mean /= count;
  return s;
}

}  // namespace

std::string SweepParams::validate() const {
  if (!(h0 > 0.0)) throw ParameterError("sweep: h0 must be positive");
  if (!(r >= 1.0)) throw ParameterError("sweep: growth ratio must be >= 1");
  if (h1 && !(*h1 >= h0)) throw ParameterError("sweep: h1 must be >= h0");
  if (!(z_bl > 0.0)) throw ParameterError("sweep: z_bl must be positive");
  if (r < 1.05 || r > 1.2) {
    std::ostringstream os;
    os << "sweep: growth ratio " << r << " outside the recommended interval [1.05, 1.2]";
    return os.str();
  }
  return {};
}

Vec3 pseudo_normal(const Vec3& x, std::span<const Vec3> ring, bool closed, bool* degenerate) {
  Vec3 s{0, 0, 0};
  const std::size_t n = ring.size();
  const std::size_t m = closed ? n : (n == 0 ? 0 : n - 1);
  for (std::size_t i = 0; i < m; ++i) s += cross(ring[i] - x, ring[(i + 1) % n] - x);
  const double len = norm(s);
  const double scale = n ? std::max(1e-300, norm(ring[0] - x)) : 1.0;
  if (degenerate) *degenerate = false;
  if (!(len > 1e-14 * scale * scale)) {
    if (degenerate) *degenerate = true;
    return {0, 0, 1};
  }
  s = s / len;
  if (s.z < 0.0) s = s * -1.0;
  return s;
}

Vec3 extrusion_direction(const Vec3& pn, double z_frac) {
  const double w = std::clamp(z_frac, 0.0, 1.0);
  if (w == 1.0) return {0, 0, 1};
  return normalized(pn * (1.0 - w) + Vec3{0, 0, w});
}

double layer_height(int n, double h0, double r, double h1) {
  if (n < 1) throw ParameterError("layer_height: layer index must be >= 1");
  return std::min(h0 * std::pow(r, n - 1), h1);
}

PrismLayerMesh sweep_sbl(const TriSurfaceMesh& surface, const SweepParams& params, const OptimizerSettings& settings,
                         const std::function<void(const std::string&)>& log) {
  const std::string warn = params.validate();
  if (surface.triangles.empty()) throw InputError("sweep: empty surface mesh");
  PrismLayerMesh out;
  if (!warn.empty()) {
    out.warnings.push_back(warn);
    if (log) log(warn);
  }
  const std::size_t ns = surface.xyz.size();
  out.sheet_size = ns;
  HybridMesh& m = out.mesh;

  double h1 = 0.0;
  if (params.h1) {
    h1 = *params.h1;
  } else {
    double sum = 0.0;
    for (const auto& t : surface.triangles)
      for (int k = 0; k < 3; ++k) sum += distance(surface.xyz[t[k]], surface.xyz[t[(k + 1) % 3]]);
    h1 = std::max(params.h0, sum / (3.0 * surface.triangles.size()));
  }
  out.h1 = h1;

  const auto rings = surface.ordered_rings();
  const auto boundary = surface.boundary_nodes();
  m.nodes = surface.xyz;
  m.node_flags.assign(ns, node_flag::ground);
  for (std::size_t i = 0; i < ns; ++i)
    if (boundary[i]) m.node_flags[i] |= node_flag::lateral;
  m.ground_triangles = surface.triangles;
  const std::size_t nt = surface.triangles.size();

  std::vector<Vec3> dirs(ns, Vec3{0, 0, 1});
  std::vector<Vec3> ring_pts;
  std::size_t degenerate_count = 0;
  for (int n = 1;; ++n) {
    if (n > params.max_layers)
      throw MeshingError("sweep: layer limit " + std::to_string(params.max_layers) + " reached before z_bl");
    const double h = layer_height(n, params.h0, params.r, h1);
    const std::size_t prev = (n - 1) * ns;
    m.nodes.resize(prev + 2 * ns);
    m.node_flags.resize(prev + 2 * ns);
    for (std::size_t i = 0; i < ns; ++i) {
      const Vec3 x = m.nodes[prev + i];
      Vec3 pn{0, 0, 1};
      if (!boundary[i]) {
        ring_pts.clear();
        for (int j : rings[i]) ring_pts.push_back(m.nodes[prev + j]);
        bool degenerate = false;
        pn = pseudo_normal(x, ring_pts, true, &degenerate);
        if (degenerate) ++degenerate_count;
      }
      const double height = x.z - m.nodes[i].z;
      dirs[i] = extrusion_direction(pn, (height + h) / params.z_bl);
      m.nodes[prev + ns + i] = x + dirs[i] * h;
      m.node_flags[prev + ns + i] = boundary[i] ? node_flag::lateral : 0u;
    }
    const std::size_t first = m.prisms.size();
    for (std::size_t t = 0; t < nt; ++t) {
      const auto& v = surface.triangles[t];
      const int b = static_cast<int>(prev), u = static_cast<int>(prev + ns);
      m.prisms.push_back({b + v[0], b + v[1], b + v[2], u + v[0], u + v[1], u + v[2]});
      m.prism_layer.push_back(n);
      m.prism_base.push_back(static_cast<int>(t));
      m.prism_height.push_back(h);
    }
    out.layers = n;
    out.layer_heights.push_back(h);

    LayerRecord rec;
    rec.layer = n;
    rec.nominal_height = h;
    const QStat before = layer_stats(m, first, nt);
    rec.min_q_before = before.min;
    rec.mean_q_before = before.mean;
    if (params.optimize && before.min < settings.quality_threshold_local) {
      // Patch relaxation on the newest layers only: expansion by k element
      // layers never reaches below sheet n-k-1, which is held fixed.
      const int k = settings.neighbor_layers_local + 1;
      const int lo = std::max(0, n - k);
      HybridMesh sub;
      const std::size_t base = lo * ns;
      sub.nodes.assign(m.nodes.begin() + base, m.nodes.end());
      sub.node_flags.assign(m.node_flags.begin() + base, m.node_flags.end());
      for (std::size_t i = 0; i < ns; ++i) sub.node_flags[i] |= node_flag::ground;
      sub.ground_triangles = m.ground_triangles;
      // Ideal prisms are built from ground-sheet coordinates, which live
      // outside the window; carry them as extra fixed nodes.
      const int extra = static_cast<int>(sub.nodes.size());
      if (lo > 0) {
        sub.nodes.insert(sub.nodes.end(), m.nodes.begin(), m.nodes.begin() + ns);
        sub.node_flags.insert(sub.node_flags.end(), ns, node_flag::ground);
        for (auto& g : sub.ground_triangles)
          for (int& v : g) v += extra;
      }
      const std::size_t pfirst = static_cast<std::size_t>(lo) * nt;
      std::vector<int> candidates;
      for (std::size_t e = pfirst; e < m.prisms.size(); ++e) {
        auto p = m.prisms[e];
        for (int& v : p) v -= static_cast<int>(base);
        sub.prisms.push_back(p);
        sub.prism_layer.push_back(m.prism_layer[e]);
        sub.prism_base.push_back(m.prism_base[e]);
        sub.prism_height.push_back(m.prism_height[e]);
        if (e >= first) candidates.push_back(static_cast<int>(e - pfirst));
      }
      optimize_local_patch(sub, settings, candidates);
      std::copy(sub.nodes.begin(), sub.nodes.begin() + (m.nodes.size() - base), m.nodes.begin() + base);
    }
    const QStat after = layer_stats(m, first, nt);
    rec.min_q_after = after.min;
    rec.mean_q_after = after.mean;
    out.log.push_back(rec);
    if (log) {
      std::ostringstream os;
      os << "layer=" << n << " height=" << h << " min_q_before=" << rec.min_q_before
         << " mean_q_before=" << rec.mean_q_before << " min_q_after=" << rec.min_q_after
         << " mean_q_after=" << rec.mean_q_after;
      log(os.str());
    }
    // Inversion check over the full window that may have moved.
    const std::size_t check_from = (params.optimize ? static_cast<std::size_t>(std::max(0, n - settings.neighbor_layers_local - 1)) : static_cast<std::size_t>(n - 1)) * nt;
    const auto ideals_end = m.prisms.size();
    for (std::size_t e = check_from; e < ideals_end; ++e) {
      std::array<Vec3, 6> x;
      for (int c = 0; c < 6; ++c) x[c] = m.nodes[m.prisms[e][c]];
      const auto& g = m.ground_triangles[m.prism_base[e]];
      const auto ideal = IdealElement::prism({m.nodes[g[0]], m.nodes[g[1]], m.nodes[g[2]]}, m.prism_height[e]);
      if (elem_distortion(x, ideal).quality == 0.0) {
        std::ostringstream os;
        os << "sweep: prism " << e << " (layer " << m.prism_layer[e] << ", surface triangle " << m.prism_base[e]
           << ") is inverted after layer " << n << (params.optimize ? " patch optimization" : " (optimization disabled)");
        throw MeshingError(os.str());
      }
    }

    double min_height = 1e300;
    for (std::size_t i = 0; i < ns; ++i) min_height = std::min(min_height, m.nodes[n * ns + i].z - m.nodes[i].z);
    if (min_height >= params.z_bl) break;
  }
  out.last_directions = dirs;
  if (degenerate_count) {
    const std::string w = "sweep: " + std::to_string(degenerate_count) + " degenerate rings extruded vertically";
    out.warnings.push_back(w);
    if (log) log(w);
  }
  // The last sheet becomes the prism/tetrahedron interface.
  for (std::size_t i = 0; i < ns; ++i) m.node_flags[out.layers * ns + i] |= node_flag::interface;
  return out;
}

}  // namespace ablmesh
