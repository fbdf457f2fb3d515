#include "ablmesh/planar_triangulation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <unordered_map>

#include "ablmesh/error.hpp"

namespace ablmesh {

namespace {

inline int next3(int i) { return i == 2 ? 0 : i + 1; }
inline int prev3(int i) { return i == 0 ? 2 : i - 1; }

inline std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

}  // namespace

int PlanarTriangulation::new_tri() {
  if (!free_.empty()) {
    const int t = free_.back();
    free_.pop_back();
    tris_[t] = Tri{};
    return t;
  }
  tris_.emplace_back();
  return static_cast<int>(tris_.size()) - 1;
}

Vec2 PlanarTriangulation::centroid(int t) const {
  const auto& v = tris_[t].v;
  return (pts_[v[0]] + pts_[v[1]] + pts_[v[2]]) / 3.0;
}

void PlanarTriangulation::set_neighbor_back(int outside, int old_tri, int nt) {
  if (outside < 0) return;
  for (int j = 0; j < 3; ++j) {
    if (tris_[outside].nbr[j] == old_tri) {
      tris_[outside].nbr[j] = nt;
      return;
    }
  }
}

std::vector<int> PlanarTriangulation::triangles_around(int v) const {
  std::vector<int> out;
  const int start = vtri_[v];
  if (start < 0) return out;
  auto index_of = [&](int t) {
    for (int k = 0; k < 3; ++k)
      if (tris_[t].v[k] == v) return k;
    return -1;
  };
  // Counter-clockwise until the loop closes or a boundary is hit.
  int t = start;
  bool closed = false;
  while (true) {
    out.push_back(t);
    const int k = index_of(t);
    const int n = tris_[t].nbr[next3(k)];
    if (n < 0) break;
    if (n == start) {
      closed = true;
      break;
    }
    t = n;
  }
  if (!closed) {
    t = start;
    while (true) {
      const int k = index_of(t);
      const int n = tris_[t].nbr[prev3(k)];
      if (n < 0) break;
      out.push_back(n);
      t = n;
    }
  }
  return out;
}

bool PlanarTriangulation::edge_exists(int a, int b) const {
  for (int t : triangles_around(a)) {
    for (int k = 0; k < 3; ++k)
      if (tris_[t].v[k] == b) return true;
  }
  return false;
}

PlanarTriangulation::Location PlanarTriangulation::walk(int start, const Vec2& p,
                                                        bool respect_constraints) const {
  Location loc;
  int t = start;
  const Vec2 s = centroid(start);
  const std::size_t guard = tris_.size() * 4 + 16;
  for (std::size_t step = 0; step < guard; ++step) {
    const Tri& tri = tris_[t];
    int exit_edge = -1;
    bool exit_straddles = false;
    int zero_edges[3];
    int nzero = 0;
    for (int i = 0; i < 3; ++i) {
      const Vec2& a = pts_[tri.v[next3(i)]];
      const Vec2& b = pts_[tri.v[prev3(i)]];
      const double o = orient2d(a, b, p);
      if (o < 0.0) {
        // Prefer the edge actually crossed by the segment s->p.
        const bool straddles = orient2d(s, p, a) * orient2d(s, p, b) <= 0.0;
        if (exit_edge < 0 || (straddles && !exit_straddles)) {
          exit_edge = i;
          exit_straddles = straddles;
        }
      } else if (o == 0.0) {
        zero_edges[nzero++] = i;
      }
    }
    if (exit_edge < 0) {
      loc.tri = t;
      if (nzero == 1) {
        loc.on_edge = zero_edges[0];
      } else if (nzero >= 2) {
        // Coincides with the vertex shared by both zero edges.
        const int k = 3 - zero_edges[0] - zero_edges[1];
        loc.on_vertex = tri.v[k];
      }
      return loc;
    }
    const int n = tri.nbr[exit_edge];
    if (n < 0 || (respect_constraints && tri.fixed[exit_edge])) {
      loc.blocked = true;
      loc.block_tri = t;
      loc.block_edge = exit_edge;
      return loc;
    }
    t = n;
  }
  throw MeshingError("planar triangulation: point location did not terminate");
}

PlanarTriangulation::Cavity PlanarTriangulation::cavity(const Vec2& p, const Location& loc,
                                                        int split_tri, int split_edge) const {
  Cavity cav;
  std::vector<int> stack;
  std::unordered_map<int, bool> mark;
  auto add = [&](int t) {
    if (mark.emplace(t, true).second) {
      cav.tris.push_back(t);
      stack.push_back(t);
    }
  };
  add(loc.tri);
  int split_other = -1;
  if (split_tri >= 0) {
    split_other = tris_[split_tri].nbr[split_edge];
    add(split_tri);
    if (split_other >= 0) add(split_other);
  } else if (loc.on_edge >= 0) {
    const int n = tris_[loc.tri].nbr[loc.on_edge];
    if (n >= 0) add(n);
  }
  while (!stack.empty()) {
    const int t = stack.back();
    stack.pop_back();
    const Tri& tri = tris_[t];
    for (int i = 0; i < 3; ++i) {
      const int n = tri.nbr[i];
      if (n >= 0 && mark.count(n)) continue;
      const bool is_split = (t == split_tri && i == split_edge) ||
                            (t == split_other && n == split_tri && split_tri >= 0);
      if (is_split) continue;
      if (n < 0 || tri.fixed[i]) {
        cav.boundary.emplace_back(t, i);
        continue;
      }
      const Tri& nt = tris_[n];
      if (incircle(pts_[nt.v[0]], pts_[nt.v[1]], pts_[nt.v[2]], p) > 0.0) {
        add(n);
      } else {
        cav.boundary.emplace_back(t, i);
      }
    }
  }
  // Edges between two cavity triangles discovered before the second joined.
  std::erase_if(cav.boundary, [&](const std::pair<int, int>& e) {
    const int n = tris_[e.first].nbr[e.second];
    return n >= 0 && mark.count(n) && !tris_[e.first].fixed[e.second];
  });
  return cav;
}

int PlanarTriangulation::insert(const Vec2& p, const Location& loc, int split_tri, int split_edge,
                                std::vector<int>* created) {
  int s0 = -1, s1 = -1;
  if (split_tri >= 0) {
    s0 = tris_[split_tri].v[next3(split_edge)];
    s1 = tris_[split_tri].v[prev3(split_edge)];
  }
  const Cavity cav = cavity(p, loc, split_tri, split_edge);
  const int pid = static_cast<int>(pts_.size());
  pts_.push_back(p);
  vtri_.push_back(-1);

  struct NewEdge {
    int a, b, outside, owner;
    bool fixed;
    int tag;
  };
  std::vector<NewEdge> edges;
  edges.reserve(cav.boundary.size());
  for (const auto& [t, i] : cav.boundary) {
    const Tri& tri = tris_[t];
    edges.push_back({tri.v[next3(i)], tri.v[prev3(i)], tri.nbr[i], t, tri.fixed[i], tri.tag});
  }
  // Validate before mutating: every new triangle must be positively oriented.
  for (const auto& e : edges) {
    if (orient2d(p, pts_[e.a], pts_[e.b]) <= 0.0) {
      pts_.pop_back();
      vtri_.pop_back();
      throw MeshingError("planar triangulation: degenerate cavity during insertion");
    }
  }
  for (int t : cav.tris) {
    tris_[t].alive = false;
  }
  std::vector<int> made;
  made.reserve(edges.size());
  std::unordered_map<int, int> by_start;
  for (const auto& e : edges) {
    const int nt = new_tri();
    Tri& tri = tris_[nt];
    tri.v = {pid, e.a, e.b};
    tri.nbr = {e.outside, -1, -1};
    tri.fixed = {e.fixed, false, false};
    tri.tag = e.tag;
    set_neighbor_back(e.outside, e.owner, nt);
    by_start[e.a] = nt;
    vtri_[e.a] = nt;
    vtri_[e.b] = nt;
    made.push_back(nt);
  }
  vtri_[pid] = made.front();
  for (int nt : made) {
    Tri& tri = tris_[nt];
    const int b = tri.v[2];
    auto it = by_start.find(b);
    if (it != by_start.end()) {
      tri.nbr[1] = it->second;
      tris_[it->second].nbr[2] = nt;
    }
  }
  for (int nt : made) {
    Tri& tri = tris_[nt];
    // Edge 1 is (b, p), edge 2 is (p, a).
    if (tri.nbr[1] < 0) tri.fixed[1] = true;
    if (tri.nbr[2] < 0) tri.fixed[2] = true;
    if (split_tri >= 0) {
      if (tri.v[2] == s0 || tri.v[2] == s1) tri.fixed[1] = true;
      if (tri.v[1] == s0 || tri.v[1] == s1) tri.fixed[2] = true;
    }
  }
  for (int t : cav.tris) free_.push_back(t);
  if (created) created->insert(created->end(), made.begin(), made.end());
  return pid;
}

int PlanarTriangulation::split_segment(int t, int e, std::vector<int>* created) {
  const Tri& tri = tris_[t];
  const Vec2 a = pts_[tri.v[next3(e)]];
  const Vec2 b = pts_[tri.v[prev3(e)]];
  const Vec2 m = (a + b) * 0.5;
  Location loc;
  loc.tri = t;
  loc.on_edge = e;
  return insert(m, loc, t, e, created);
}

PlanarTriangulation PlanarTriangulation::from_mesh(const PlanarMesh& mesh) {
  PlanarTriangulation tr;
  tr.pts_ = mesh.points;
  tr.vtri_.assign(mesh.points.size(), -1);
  tr.tris_.resize(mesh.triangles.size());
  std::unordered_map<std::uint64_t, std::pair<int, int>> open;
  open.reserve(mesh.triangles.size() * 2);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    Tri& tri = tr.tris_[t];
    tri.v = mesh.triangles[t];
    tri.tag = mesh.tags.empty() ? 0 : mesh.tags[t];
    for (int k = 0; k < 3; ++k) tr.vtri_[tri.v[k]] = static_cast<int>(t);
    for (int i = 0; i < 3; ++i) {
      const int a = tri.v[next3(i)], b = tri.v[prev3(i)];
      const auto key = edge_key(a, b);
      auto it = open.find(key);
      if (it == open.end()) {
        open.emplace(key, std::make_pair(static_cast<int>(t), i));
      } else {
        const auto [ot, oi] = it->second;
        tri.nbr[i] = ot;
        tr.tris_[ot].nbr[oi] = static_cast<int>(t);
        open.erase(it);
      }
    }
  }
  for (auto& tri : tr.tris_) {
    for (int i = 0; i < 3; ++i) {
      const int n = tri.nbr[i];
      tri.fixed[i] = n < 0 || tr.tris_[n].tag != tri.tag;
    }
  }
  return tr;
}

PlanarTriangulation PlanarTriangulation::from_pslg(const std::vector<Vec2>& points,
                                                   const std::vector<std::array<int, 2>>& segments,
                                                   const Classifier& classify) {
  if (points.size() < 3) throw InputError("planar triangulation: need at least 3 points");
  Box2 box;
  for (const auto& p : points) box.extend(p);
  const double span = std::max(box.width(), box.height());
  const Vec2 c = box.center();
  const double r = 50.0 * span + 1.0;

  PlanarTriangulation tr;
  tr.pts_ = {{c.x - r, c.y - r}, {c.x + r, c.y - r}, {c.x + r, c.y + r}, {c.x - r, c.y + r}};
  tr.vtri_ = {0, 0, 1, 1};
  tr.tris_.resize(2);
  tr.tris_[0].v = {0, 1, 2};
  tr.tris_[0].nbr = {-1, 1, -1};
  tr.tris_[1].v = {0, 2, 3};
  tr.tris_[1].nbr = {-1, -1, 0};
  tr.vtri_[0] = 0;

  std::vector<int> id(points.size(), -1);
  int hint = 0;
  std::map<std::pair<double, double>, int> seen;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto key = std::make_pair(points[i].x, points[i].y);
    if (auto it = seen.find(key); it != seen.end()) {
      id[i] = it->second;
      continue;
    }
    Location loc = tr.walk(hint, points[i], false);
    if (loc.on_vertex >= 0) {
      id[i] = loc.on_vertex;
    } else {
      id[i] = tr.insert(points[i], loc, -1, -1, nullptr);
    }
    seen.emplace(key, id[i]);
    hint = tr.vtri_[id[i]];
  }

  // Conforming recovery: split missing segments at their midpoints.
  std::vector<std::array<int, 2>> segs;
  for (const auto& s : segments) segs.push_back({id[s[0]], id[s[1]]});
  for (int pass = 0;; ++pass) {
    if (pass > 64) throw MeshingError("planar triangulation: segment recovery did not converge");
    bool all = true;
    std::vector<std::array<int, 2>> next;
    for (const auto& s : segs) {
      if (tr.edge_exists(s[0], s[1])) {
        next.push_back(s);
        continue;
      }
      all = false;
      const Vec2 m = (tr.pts_[s[0]] + tr.pts_[s[1]]) * 0.5;
      Location loc = tr.walk(tr.vtri_[s[0]], m, false);
      const int mid = loc.on_vertex >= 0 ? loc.on_vertex : tr.insert(m, loc, -1, -1, nullptr);
      next.push_back({s[0], mid});
      next.push_back({mid, s[1]});
    }
    segs = std::move(next);
    if (all) break;
  }
  std::unordered_map<std::uint64_t, bool> seg_set;
  for (const auto& s : segs) seg_set[edge_key(s[0], s[1])] = true;

  // Classify and carve.
  PlanarMesh keep;
  keep.points = tr.pts_;
  for (std::size_t t = 0; t < tr.tris_.size(); ++t) {
    const Tri& tri = tr.tris_[t];
    if (!tri.alive) continue;
    if (tri.v[0] < 4 || tri.v[1] < 4 || tri.v[2] < 4) continue;
    const int tag = classify(tr.centroid(static_cast<int>(t)));
    if (tag == kOutside) continue;
    keep.triangles.push_back(tri.v);
    keep.tags.push_back(tag);
  }
  PlanarTriangulation out = from_mesh(keep);
  // Segments between equally tagged triangles stay constrained.
  for (auto& tri : out.tris_) {
    for (int i = 0; i < 3; ++i) {
      if (seg_set.count(edge_key(tri.v[next3(i)], tri.v[prev3(i)]))) tri.fixed[i] = true;
    }
  }
  return out;
}

PlanarMesh PlanarTriangulation::delaunay(const std::vector<Vec2>& points) {
  if (points.size() < 3) throw InputError("delaunay: need at least 3 points");
  Box2 box;
  for (const auto& p : points) box.extend(p);
  const double span = std::max(box.width(), box.height());
  const Vec2 c = box.center();
  const double r = 1000.0 * span + 1.0;

  PlanarTriangulation tr;
  tr.pts_ = {{c.x - r, c.y - r}, {c.x + r, c.y - r}, {c.x + r, c.y + r}, {c.x - r, c.y + r}};
  tr.vtri_ = {0, 0, 1, 1};
  tr.tris_.resize(2);
  tr.tris_[0].v = {0, 1, 2};
  tr.tris_[0].nbr = {-1, 1, -1};
  tr.tris_[1].v = {0, 2, 3};
  tr.tris_[1].nbr = {-1, -1, 0};

  int hint = 0;
  for (const auto& p : points) {
    Location loc = tr.walk(hint, p, false);
    if (loc.on_vertex >= 0) {
      throw InputError("delaunay: duplicate point (" + std::to_string(p.x) + ", " +
                       std::to_string(p.y) + ")");
    }
    const int id = tr.insert(p, loc, -1, -1, nullptr);
    hint = tr.vtri_[id];
  }

  std::vector<std::array<int, 3>> tris;
  for (const auto& tri : tr.tris_) {
    if (!tri.alive) continue;
    if (tri.v[0] < 4 || tri.v[1] < 4 || tri.v[2] < 4) continue;
    tris.push_back({tri.v[0] - 4, tri.v[1] - 4, tri.v[2] - 4});
  }
  if (tris.empty()) throw InputError("delaunay: points are collinear");

  // Fill reflex boundary pockets left by the finite enclosing box.
  for (int pass = 0; pass < 1000; ++pass) {
    std::unordered_map<std::uint64_t, int> count;
    for (const auto& t : tris)
      for (int i = 0; i < 3; ++i) ++count[edge_key(t[next3(i)], t[prev3(i)])];
    std::unordered_map<int, int> next_of, prev_of;
    for (const auto& t : tris) {
      for (int i = 0; i < 3; ++i) {
        const int a = t[next3(i)], b = t[prev3(i)];
        if (count[edge_key(a, b)] == 1) {
          next_of[a] = b;
          prev_of[b] = a;
        }
      }
    }
    bool changed = false;
    std::vector<int> order;
    for (const auto& [v, n] : next_of) order.push_back(v);
    std::sort(order.begin(), order.end());
    for (int b : order) {
      const int a = prev_of[b], cn = next_of[b];
      if (a == cn) continue;
      const Vec2 pa = points[a], pb = points[b], pc = points[cn];
      if (orient2d(pa, pb, pc) < 0.0) {
        tris.push_back({a, cn, b});
        changed = true;
        break;
      }
    }
    if (!changed) break;
  }
  PlanarMesh out;
  out.points = points;
  out.triangles = std::move(tris);
  out.tags.assign(out.triangles.size(), 0);
  return out;
}

std::size_t PlanarTriangulation::refine(const RefineOptions& opts) {
  if (!opts.size) throw ParameterError("refine: size function required");
  const double min_angle = opts.min_angle_deg * M_PI / 180.0;
  Box2 box;
  for (const auto& p : pts_) box.extend(p);
  const double tiny = 1e-9 * std::max(box.width(), box.height());
  const std::size_t start_count = pts_.size();

  std::deque<int> bad;
  std::deque<std::pair<int, int>> segq;

  auto queue_tri = [&](int t) {
    bad.push_back(t);
    for (int i = 0; i < 3; ++i)
      if (tris_[t].fixed[i]) segq.emplace_back(t, i);
  };
  for (std::size_t t = 0; t < tris_.size(); ++t)
    if (tris_[t].alive) queue_tri(static_cast<int>(t));

  auto encroaches = [&](int s0, int s1, const Vec2& q) {
    const Vec2 a = pts_[s0], b = pts_[s1];
    return dot(a - q, b - q) < 0.0;
  };
  auto is_bad = [&](int t) {
    const auto& v = tris_[t].v;
    const Vec2 a = pts_[v[0]], b = pts_[v[1]], c = pts_[v[2]];
    const double lab = distance(a, b), lbc = distance(b, c), lca = distance(c, a);
    if (std::min({lab, lbc, lca}) < tiny) return false;
    if (min_angle > 0.0 && ablmesh::min_angle(a, b, c) < min_angle) return true;
    const double h = opts.size((a + b + c) / 3.0);
    return std::max({lab, lbc, lca}) > opts.edge_factor * h;
  };

  std::vector<int> made;
  auto split_and_queue = [&](int t, int e) {
    made.clear();
    split_segment(t, e, &made);
    for (int nt : made) queue_tri(nt);
  };

  while (true) {
    if (pts_.size() >= opts.max_vertices) {
      throw MeshingError("planar refinement exceeded the vertex limit");
    }
    if (!segq.empty()) {
      const auto [t, e] = segq.front();
      segq.pop_front();
      if (!tris_[t].alive || !tris_[t].fixed[e]) continue;
      const Tri& tri = tris_[t];
      const int s0 = tri.v[next3(e)], s1 = tri.v[prev3(e)];
      if (distance(pts_[s0], pts_[s1]) < 2.0 * tiny) continue;
      bool enc = encroaches(s0, s1, pts_[tri.v[e]]);
      const int n = tri.nbr[e];
      if (!enc && n >= 0) {
        for (int k = 0; k < 3; ++k) {
          const int w = tris_[n].v[k];
          if (w != s0 && w != s1) enc = encroaches(s0, s1, pts_[w]);
        }
      }
      if (enc) split_and_queue(t, e);
      continue;
    }
    if (bad.empty()) break;
    const int t = bad.front();
    bad.pop_front();
    if (!tris_[t].alive || !is_bad(t)) continue;
    const auto& v = tris_[t].v;
    const Vec2 c = circumcenter(pts_[v[0]], pts_[v[1]], pts_[v[2]]);
    Location loc = walk(t, c, true);
    if (loc.blocked) {
      const Tri& bt = tris_[loc.block_tri];
      const double len = distance(pts_[bt.v[next3(loc.block_edge)]], pts_[bt.v[prev3(loc.block_edge)]]);
      if (len < 2.0 * tiny) continue;
      split_and_queue(loc.block_tri, loc.block_edge);
      if (tris_[t].alive) bad.push_back(t);
      continue;
    }
    if (loc.on_vertex >= 0) continue;
    if (loc.on_edge >= 0 && tris_[loc.tri].fixed[loc.on_edge]) {
      split_and_queue(loc.tri, loc.on_edge);
      if (tris_[t].alive) bad.push_back(t);
      continue;
    }
    const Cavity cav = cavity(c, loc, -1, -1);
    int enc_tri = -1, enc_edge = -1;
    for (const auto& [bt, be] : cav.boundary) {
      if (!tris_[bt].fixed[be]) continue;
      const int s0 = tris_[bt].v[next3(be)], s1 = tris_[bt].v[prev3(be)];
      if (encroaches(s0, s1, c)) {
        enc_tri = bt;
        enc_edge = be;
        break;
      }
    }
    if (enc_tri >= 0) {
      split_and_queue(enc_tri, enc_edge);
      if (tris_[t].alive) bad.push_back(t);
      continue;
    }
    made.clear();
    insert(c, loc, -1, -1, &made);
    for (int nt : made) queue_tri(nt);
  }
  return pts_.size() - start_count;
}

PlanarMesh PlanarTriangulation::extract() const {
  PlanarMesh out;
  std::vector<int> remap(pts_.size(), -1);
  for (const auto& tri : tris_) {
    if (!tri.alive) continue;
    for (int k = 0; k < 3; ++k) remap[tri.v[k]] = 0;
  }
  int n = 0;
  for (std::size_t i = 0; i < pts_.size(); ++i) {
    if (remap[i] < 0) continue;
    remap[i] = n++;
    out.points.push_back(pts_[i]);
  }
  for (const auto& tri : tris_) {
    if (!tri.alive) continue;
    out.triangles.push_back({remap[tri.v[0]], remap[tri.v[1]], remap[tri.v[2]]});
    out.tags.push_back(tri.tag);
  }
  return out;
}

}  // namespace ablmesh
