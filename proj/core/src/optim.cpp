#include "ablmesh/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ablmesh/error.hpp"

namespace ablmesh {

namespace {

// Element-node incidence plus what the relaxation loop needs per element.
struct ElementSet {
  std::vector<std::vector<int>> nodes;  // per element
  std::vector<IdealElement> ideals;
  std::vector<std::vector<int>> node_elems;  // per mesh node
  std::vector<std::vector<int>> node_nbrs;   // edge neighbors per mesh node
};

void build_incidence(ElementSet& es, std::size_t node_count,
                     const std::function<void(int, std::vector<std::array<int, 2>>&)>& edges_of) {
  es.node_elems.assign(node_count, {});
  es.node_nbrs.assign(node_count, {});
  std::vector<std::array<int, 2>> edges;
  for (std::size_t e = 0; e < es.nodes.size(); ++e) {
    for (int v : es.nodes[e]) es.node_elems[v].push_back(static_cast<int>(e));
    edges.clear();
    edges_of(static_cast<int>(e), edges);
    for (auto [a, b] : edges) {
      es.node_nbrs[a].push_back(b);
      es.node_nbrs[b].push_back(a);
    }
  }
  for (auto& n : es.node_nbrs) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
}

ElementSet hybrid_elements(const HybridMesh& m) {
  ElementSet es;
  es.ideals = ideal_elements(m);
  es.nodes.reserve(m.element_count());
  for (const auto& p : m.prisms) es.nodes.emplace_back(p.begin(), p.end());
  for (const auto& t : m.tets) es.nodes.emplace_back(t.begin(), t.end());
  const std::size_t np = m.prisms.size();
  build_incidence(es, m.nodes.size(), [&](int e, std::vector<std::array<int, 2>>& out) {
    const auto& v = es.nodes[e];
    if (static_cast<std::size_t>(e) < np) {
      for (int k = 0; k < 3; ++k) {
        out.push_back({v[k], v[(k + 1) % 3]});
        out.push_back({v[3 + k], v[3 + (k + 1) % 3]});
        out.push_back({v[k], v[k + 3]});
      }
    } else {
      for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) out.push_back({v[a], v[b]});
    }
  });
  return es;
}

ElementSet surface_elements(const TriSurfaceMesh& m) {
  ElementSet es;
  es.ideals = ideal_elements(m);
  es.nodes.reserve(m.triangles.size());
  for (const auto& t : m.triangles) es.nodes.emplace_back(t.begin(), t.end());
  build_incidence(es, m.uv.size(), [&](int e, std::vector<std::array<int, 2>>& out) {
    const auto& v = es.nodes[e];
    for (int k = 0; k < 3; ++k) out.push_back({v[k], v[(k + 1) % 3]});
  });
  return es;
}

ElemEval evaluate(const ElementSet& es, const std::vector<Vec3>& x, int e, double delta) {
  const auto& ids = es.nodes[e];
  std::array<Vec3, 6> buf;
  for (std::size_t k = 0; k < ids.size(); ++k) buf[k] = x[ids[k]];
  return elem_evaluate(std::span<const Vec3>(buf.data(), ids.size()), es.ideals[e], delta);
}

// delta for a set of elements: rel * mean |det|, guarded against zero.
double patch_delta(const ElementSet& es, const std::vector<Vec3>& x, std::span<const int> elems, double rel) {
  double sum = 0.0;
  for (int e : elems) sum += std::abs(evaluate(es, x, e, 0.0).mean_det);
  const double mean = elems.empty() ? 1.0 : sum / elems.size();
  return rel * (mean > 0.0 ? mean : 1.0);
}

struct Local {
  double f = 0.0;
  double qmin = 1.0;
  double qsum = 0.0;
};

Local local_eval(const ElementSet& es, const std::vector<Vec3>& x, int node, double delta) {
  Local l;
  for (int e : es.node_elems[node]) {
    const auto v = evaluate(es, x, e, delta);
    l.f += v.eta_regularized * v.eta_regularized;
    l.qmin = std::min(l.qmin, v.quality);
    l.qsum += v.quality;
  }
  return l;
}

// Physical coordinates are `x`; for surfaces, positions live in (u, v) and
// `place` lifts a parametric candidate into x. Returns false if inadmissible.
using Placer = std::function<bool(int node, const Vec3& param)>;

struct NodeJob {
  int node;
  std::vector<Vec3> axes;
};

struct RunContext {
  const ElementSet& es;
  std::vector<Vec3>& x;       // physical coordinates, evaluated
  std::vector<Vec3>& param;   // coordinates being optimized
  Placer place;               // writes x[node] from param; false rejects
  const OptimizerSettings& s;
  double delta;
  std::size_t accepted = 0;
};

// Coordinate descent with backtracking. Returns the displacement relative
// to the local mean edge and adds the absolute one to `abs_move`.
double relax_node(RunContext& c, const NodeJob& job, double& abs_move) {
  const int n = job.node;
  double edge = 0.0;
  for (int j : c.es.node_nbrs[n]) edge += distance(c.param[n], c.param[j]);
  if (c.es.node_nbrs[n].empty()) return 0.0;
  edge /= c.es.node_nbrs[n].size();
  const Vec3 start = c.param[n];
  const Vec3 start_x = c.x[n];
  Local cur = local_eval(c.es, c.x, n, c.delta);
  double step = 0.05 * edge;
  for (int it = 0; it < c.s.node_iters_max; ++it) {
    bool improved = false;
    for (const Vec3& a : job.axes) {
      for (double sign : {1.0, -1.0}) {
        const Vec3 saved_p = c.param[n], saved_x = c.x[n];
        c.param[n] = saved_p + a * (sign * step);
        if (!c.place(n, c.param[n])) {
          c.param[n] = saved_p;
          c.x[n] = saved_x;
          continue;
        }
        const Local trial = local_eval(c.es, c.x, n, c.delta);
        if (trial.f < cur.f && trial.qmin >= cur.qmin && trial.qsum >= cur.qsum) {
          if (c.s.on_accept) c.s.on_accept(n, cur.f, trial.f);
          cur = trial;
          improved = true;
          ++c.accepted;
          break;
        }
        c.param[n] = saved_p;
        c.x[n] = saved_x;
      }
    }
    if (!improved) step *= 0.5;
  }
  const double d = distance(c.param[n], start);
  abs_move = std::max(abs_move, distance(c.x[n], start_x));
  return d / edge;
}

SweepRecord stats_record(const ElementSet& es, const std::vector<Vec3>& x, std::span<const int> elems, double delta,
                         int sweep) {
  SweepRecord r;
  r.sweep = sweep;
  r.min_quality = elems.empty() ? 1.0 : 1e300;
  for (int e : elems) {
    const auto v = evaluate(es, x, e, delta);
    r.f += v.eta_regularized * v.eta_regularized;
    r.min_quality = std::min(r.min_quality, v.quality);
    r.mean_quality += v.quality;
  }
  if (!elems.empty()) r.mean_quality /= elems.size();
  return r;
}

std::vector<SweepRecord> run(RunContext& c, const std::vector<NodeJob>& jobs, std::span<const int> elems) {
  std::vector<SweepRecord> out;
  out.push_back(stats_record(c.es, c.x, elems, c.delta, 0));
  if (jobs.empty()) return out;
  for (int sweep = 1; sweep <= c.s.sweeps_max; ++sweep) {
    c.accepted = 0;
    double rel = 0.0, abs_move = 0.0;
    for (const auto& job : jobs) rel = std::max(rel, relax_node(c, job, abs_move));
    auto r = stats_record(c.es, c.x, elems, c.delta, sweep);
    r.max_displacement = abs_move;
    r.accepted_moves = c.accepted;
    out.push_back(r);
    if (rel <= c.s.step_tolerance) break;
  }
  return out;
}

std::vector<Vec3> volume_axes(unsigned flags) {
  using namespace node_flag;
  if (flags & ground) return {};
  if ((flags & ceiling) && (flags & lateral)) return {};
  if (flags & ceiling) return {{1, 0, 0}, {0, 1, 0}};
  if (flags & lateral) return {{0, 0, 1}};
  return {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
}

std::vector<SweepRecord> optimize_hybrid(HybridMesh& mesh, const OptimizerSettings& s, const ElementSet& es,
                                         const std::vector<int>& nodes, std::span<const int> elems) {
  std::vector<NodeJob> jobs;
  for (int n : nodes) {
    auto axes = volume_axes(mesh.node_flags.empty() ? 0u : mesh.node_flags[n]);
    if (!axes.empty()) jobs.push_back({n, std::move(axes)});
  }
  const double delta = patch_delta(es, mesh.nodes, elems, s.regularization_delta);
  RunContext c{es, mesh.nodes, mesh.nodes, [](int, const Vec3&) { return true; }, s, delta};
  return run(c, jobs, elems);
}

template <class Mesh>
double functional_impl(const Mesh& mesh, const ElementSet& es, const std::vector<Vec3>& x, std::span<const int> nodes,
                       double rel) {
  std::vector<int> elems;
  if (nodes.empty()) {
    elems.resize(es.nodes.size());
    std::iota(elems.begin(), elems.end(), 0);
  } else {
    for (int n : nodes) elems.insert(elems.end(), es.node_elems[n].begin(), es.node_elems[n].end());
    std::sort(elems.begin(), elems.end());
    elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
  }
  (void)mesh;
  const double delta = patch_delta(es, x, elems, rel);
  double f = 0.0;
  for (int e : elems) {
    const double eta = evaluate(es, x, e, delta).eta_regularized;
    f += eta * eta;
  }
  return f;
}

}  // namespace

void OptimizerSettings::validate() const {
  if (sweeps_max <= 0 || node_iters_max <= 0 || !(step_tolerance > 0.0) || neighbor_layers_local < 0 ||
      !(regularization_delta > 0.0))
    throw ParameterError("optimizer settings must be positive");
  if (!(quality_threshold_local > 0.0 && quality_threshold_local < 1.0))
    throw ParameterError("optimizer: quality_threshold_local must lie in (0, 1)");
}

std::string to_log_line(const std::string& tag, const SweepRecord& r) {
  std::ostringstream os;
  os << tag << " sweep=" << r.sweep << " f=" << r.f << " min_q=" << r.min_quality << " mean_q=" << r.mean_quality
     << " max_move=" << r.max_displacement << " accepted=" << r.accepted_moves;
  return os.str();
}

double mesh_distortion_functional(const HybridMesh& mesh, std::span<const int> nodes, double rel_delta) {
  const auto es = hybrid_elements(mesh);
  return functional_impl(mesh, es, mesh.nodes, nodes, rel_delta);
}

double mesh_distortion_functional(const TriSurfaceMesh& mesh, std::span<const int> nodes, double rel_delta) {
  const auto es = surface_elements(mesh);
  return functional_impl(mesh, es, mesh.xyz, nodes, rel_delta);
}

std::vector<SweepRecord> optimize_volume(HybridMesh& mesh, const OptimizerSettings& s) {
  s.validate();
  const auto es = hybrid_elements(mesh);
  std::vector<int> nodes(mesh.nodes.size());
  std::iota(nodes.begin(), nodes.end(), 0);
  std::vector<int> elems(es.nodes.size());
  std::iota(elems.begin(), elems.end(), 0);
  return optimize_hybrid(mesh, s, es, nodes, elems);
}

std::vector<SweepRecord> optimize_local_patch(HybridMesh& mesh, const OptimizerSettings& s,
                                              std::span<const int> candidates) {
  s.validate();
  const auto es = hybrid_elements(mesh);
  const std::size_t ne = es.nodes.size();
  std::vector<char> in_patch(ne, 0);
  std::vector<int> frontier;
  auto test = [&](int e) {
    if (evaluate(es, mesh.nodes, e, 0.0).quality < s.quality_threshold_local && !in_patch[e]) {
      in_patch[e] = 1;
      frontier.push_back(e);
    }
  };
  if (candidates.empty())
    for (std::size_t e = 0; e < ne; ++e) test(static_cast<int>(e));
  else
    for (int e : candidates) test(e);
  if (frontier.empty()) return {};

  for (int layer = 0; layer < s.neighbor_layers_local; ++layer) {
    std::vector<int> next;
    for (int e : frontier)
      for (int v : es.nodes[e])
        for (int f : es.node_elems[v])
          if (!in_patch[f]) {
            in_patch[f] = 1;
            next.push_back(f);
          }
    frontier = std::move(next);
  }
  std::vector<int> elems;
  for (std::size_t e = 0; e < ne; ++e)
    if (in_patch[e]) elems.push_back(static_cast<int>(e));
  // Interior nodes: every incident element lies in the patch.
  std::vector<int> nodes;
  std::vector<char> seen(mesh.nodes.size(), 0);
  for (int e : elems)
    for (int v : es.nodes[e]) {
      if (seen[v]) continue;
      seen[v] = 1;
      const auto& inc = es.node_elems[v];
      if (std::all_of(inc.begin(), inc.end(), [&](int f) { return in_patch[f] != 0; })) nodes.push_back(v);
    }
  std::sort(nodes.begin(), nodes.end());
  return optimize_hybrid(mesh, s, es, nodes, elems);
}

std::vector<SweepRecord> optimize_surface(TriSurfaceMesh& mesh, const TerrainModel& terrain,
                                          const OptimizerSettings& s) {
  s.validate();
  const auto es = surface_elements(mesh);
  const auto fixed = mesh.interface_nodes();
  std::vector<NodeJob> jobs;
  for (std::size_t n = 0; n < mesh.uv.size(); ++n)
    if (!fixed[n]) jobs.push_back({static_cast<int>(n), {{1, 0, 0}, {0, 1, 0}}});
  std::vector<Vec3> param(mesh.uv.size());
  for (std::size_t n = 0; n < mesh.uv.size(); ++n) param[n] = {mesh.uv[n].x, mesh.uv[n].y, 0.0};
  std::vector<int> elems(es.nodes.size());
  std::iota(elems.begin(), elems.end(), 0);
  const double delta = patch_delta(es, mesh.xyz, elems, s.regularization_delta);
  auto place = [&](int n, const Vec3& p) {
    const Vec2 uv{p.x, p.y};
    const int t = terrain.locate(uv);
    if (t < 0) return false;
    mesh.xyz[n] = {uv.x, uv.y, terrain.height_at(uv)};
    return true;
  };
  RunContext c{es, mesh.xyz, param, place, s, delta};
  auto records = run(c, jobs, elems);
  for (std::size_t n = 0; n < mesh.uv.size(); ++n) mesh.uv[n] = {param[n].x, param[n].y};
  return records;
}

}  // namespace ablmesh
