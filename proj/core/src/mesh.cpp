#include "ablmesh/mesh.hpp"

#include <algorithm>
#include <map>

namespace ablmesh {

const char* to_string(Region r) {
  switch (r) {
    case Region::farm: return "farm";
    case Region::transition: return "transition";
    case Region::buffer: return "buffer";
  }
  return "?";
}

std::size_t TriSurfaceMesh::farm_node_count() const {
  std::vector<char> in(uv.size(), 0);
  for (std::size_t t = 0; t < triangles.size(); ++t)
    if (region[t] == Region::farm)
      for (int v : triangles[t]) in[v] = 1;
  return static_cast<std::size_t>(std::count(in.begin(), in.end(), 1));
}

std::vector<bool> TriSurfaceMesh::boundary_nodes() const {
  std::map<std::pair<int, int>, int> edges;
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      ++edges[{std::min(a, b), std::max(a, b)}];
    }
  std::vector<bool> out(uv.size(), false);
  for (const auto& [e, n] : edges)
    if (n == 1) out[e.first] = out[e.second] = true;
  return out;
}

std::vector<bool> TriSurfaceMesh::interface_nodes() const {
  std::vector<bool> out = boundary_nodes();
  std::vector<int> first(uv.size(), -1);
  for (std::size_t t = 0; t < triangles.size(); ++t)
    for (int v : triangles[t]) {
      const int r = static_cast<int>(region[t]);
      if (first[v] < 0) first[v] = r;
      else if (first[v] != r) out[v] = true;
    }
  return out;
}

std::vector<std::vector<int>> TriSurfaceMesh::ordered_rings() const {
  // For node v in triangle (v, a, b) counter-clockwise, a precedes b in the ring.
  std::vector<std::vector<std::pair<int, int>>> fans(uv.size());
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k) fans[t[k]].emplace_back(t[(k + 1) % 3], t[(k + 2) % 3]);
  std::vector<std::vector<int>> rings(uv.size());
  for (std::size_t v = 0; v < uv.size(); ++v) {
    const auto& f = fans[v];
    if (f.empty()) continue;
    std::map<int, int> next;
    std::map<int, int> indeg;
    for (const auto& [a, b] : f) {
      next[a] = b;
      ++indeg[b];
    }
    // Open fan: start at the neighbor with no predecessor.
    int start = f.front().first;
    for (const auto& [a, b] : f)
      if (!indeg.count(a)) {
        start = a;
        break;
      }
    auto& ring = rings[v];
    int cur = start;
    for (std::size_t guard = 0; guard <= f.size(); ++guard) {
      ring.push_back(cur);
      auto it = next.find(cur);
      if (it == next.end() || it->second == start) break;
      cur = it->second;
    }
  }
  return rings;
}

std::vector<int> HybridMesh::element_nodes(std::size_t e) const {
  if (e < prisms.size()) return {prisms[e].begin(), prisms[e].end()};
  const auto& t = tets[e - prisms.size()];
  return {t.begin(), t.end()};
}

}  // namespace ablmesh
