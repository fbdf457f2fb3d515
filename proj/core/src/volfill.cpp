#include "ablmesh/volfill.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "ablmesh/error.hpp"
#include "ablmesh/exchange.hpp"
#include "ablmesh/quality.hpp"

namespace ablmesh {

namespace {

// Vertex maps that rotate a prism so that any chosen vertex becomes `a`
// while keeping (a, b, c) below (d, e, f) and the orientation positive.
constexpr std::array<std::array<int, 6>, 6> kPrismRotations{{
    {0, 1, 2, 3, 4, 5},
    {1, 2, 0, 4, 5, 3},
    {2, 0, 1, 5, 3, 4},
    {3, 5, 4, 0, 2, 1},
    {4, 3, 5, 1, 0, 2},
    {5, 4, 3, 2, 1, 0},
}};

using FaceKey = std::array<int, 4>;  // sorted ids, -1 padded for triangles

FaceKey key_of(std::initializer_list<int> ids) {
  FaceKey k{-1, -1, -1, -1};
  int i = 0;
  for (int v : ids) k[i++] = v;
  std::sort(k.begin(), k.begin() + i);
  return k;
}

struct FaceUse {
  int count = 0;
  int element = -1;
  std::array<int, 4> nodes{-1, -1, -1, -1};  // in element order
};

void collect_faces(const HybridMesh& m, std::map<FaceKey, FaceUse>& faces) {
  auto add = [&](int e, std::initializer_list<int> ids) {
    auto& u = faces[key_of(ids)];
    ++u.count;
    u.element = e;
    int i = 0;
    for (int v : ids) u.nodes[i++] = v;
  };
  for (std::size_t e = 0; e < m.prisms.size(); ++e) {
    const auto& p = m.prisms[e];
    const int id = static_cast<int>(e);
    add(id, {p[0], p[2], p[1]});
    add(id, {p[3], p[4], p[5]});
    add(id, {p[0], p[1], p[4], p[3]});
    add(id, {p[1], p[2], p[5], p[4]});
    add(id, {p[2], p[0], p[3], p[5]});
  }
  for (std::size_t e = 0; e < m.tets.size(); ++e) {
    const auto& t = m.tets[e];
    const int id = static_cast<int>(m.prisms.size() + e);
    add(id, {t[0], t[2], t[1]});
    add(id, {t[0], t[1], t[3]});
    add(id, {t[1], t[2], t[3]});
    add(id, {t[2], t[0], t[3]});
  }
}

TetFill builtin_fill(const std::vector<Vec3>& sheet, const std::vector<std::array<int, 3>>& tris,
                     const std::vector<bool>& lateral, const FillParams& p) {
  const std::size_t ns = sheet.size();
  double z_min = 1e300, z_max = -1e300;
  for (const auto& x : sheet) {
    z_min = std::min(z_min, x.z);
    z_max = std::max(z_max, x.z);
  }
  if (!(p.z_top > z_max)) {
    std::ostringstream os;
    os << "tet fill: z_top " << p.z_top << " is not above the interface sheet (max z " << z_max << ")";
    throw ParameterError(os.str());
  }
  const double gap = p.z_top - z_min;
  auto cap = [&](double z) {
    double c = p.h2;
    if (p.h_interface > 0.0) c = std::min(c, lateral_size_field(z_min + z, z_min, p.z_top, p.h_interface, p.h2));
    return c;
  };
  TetFill f;
  f.layer_heights = fill_layer_heights(gap, p.first_height, p.ratio, cap);
  const int layers = static_cast<int>(f.layer_heights.size());
  std::vector<double> frac(layers + 1, 0.0);
  for (int k = 1; k <= layers; ++k) frac[k] = frac[k - 1] + f.layer_heights[k - 1] / gap;
  f.interface_size = ns;
  f.nodes = sheet;
  f.node_flags.assign(ns, 0u);
  for (int k = 1; k <= layers; ++k) {
    for (std::size_t i = 0; i < ns; ++i) {
      const Vec3& b = sheet[i];
      const double z = k == layers ? p.z_top : b.z + frac[k] * (p.z_top - b.z);
      f.nodes.push_back({b.x, b.y, z});
      unsigned flags = lateral[i] ? node_flag::lateral : 0u;
      if (k == layers) flags |= node_flag::ceiling;
      f.node_flags.push_back(flags);
    }
  }
  for (int k = 0; k < layers; ++k) {
    const int lo = k * static_cast<int>(ns), hi = (k + 1) * static_cast<int>(ns);
    for (std::size_t t = 0; t < tris.size(); ++t) {
      const auto& v = tris[t];
      const std::array<int, 6> prism{lo + v[0], lo + v[1], lo + v[2], hi + v[0], hi + v[1], hi + v[2]};
      for (const auto& tet : split_prism(prism)) {
        if (!(tet_volume(f.nodes[tet[0]], f.nodes[tet[1]], f.nodes[tet[2]], f.nodes[tet[3]]) > 0.0)) {
          std::ostringstream os;
          os << "tet fill: non-positive tetrahedron from column prism over triangle " << t << " in fill layer "
             << k + 1;
          throw MeshingError(os.str());
        }
        f.tets.push_back(tet);
      }
    }
  }
  f.notes.push_back("builtin column fill: vertical grading only, no horizontal size transition");
  return f;
}

TetFill external_fill(const std::vector<Vec3>& sheet, const std::vector<std::array<int, 3>>& tris,
                      const std::vector<bool>& lateral, const FillParams& p) {
  const ExchangeDocument doc = read_exchange(p.external_path);
  const std::size_t ns = sheet.size();
  std::vector<std::string> problems;
  auto note = [&](const std::string& s) {
    if (problems.size() < 20) problems.push_back(s);
  };
  if (doc.tetrahedra.empty()) note("no tetrahedra in external fill");
  if (doc.nodes.size() < ns) {
    note("external fill has " + std::to_string(doc.nodes.size()) + " nodes, interface needs " + std::to_string(ns));
  } else {
    for (std::size_t i = 0; i < ns; ++i)
      if (!(doc.nodes[i] == sheet[i])) {
        std::ostringstream os;
        os << "node " << i << " (" << format_double(doc.nodes[i].x) << ", " << format_double(doc.nodes[i].y) << ", "
           << format_double(doc.nodes[i].z) << ") differs from interface node (" << format_double(sheet[i].x)
           << ", " << format_double(sheet[i].y) << ", " << format_double(sheet[i].z) << ")";
        note(os.str());
      }
  }
  TetFill f;
  f.interface_size = ns;
  f.nodes = doc.nodes;
  f.tets = doc.tetrahedra;
  f.node_flags.assign(f.nodes.size(), 0u);
  HybridMesh probe;
  probe.nodes = f.nodes;
  probe.tets = f.tets;
  std::map<FaceKey, FaceUse> faces;
  collect_faces(probe, faces);
  // Every interface triangle must be a boundary face of the fill.
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const auto it = faces.find(key_of({tris[t][0], tris[t][1], tris[t][2]}));
    if (it == faces.end() || it->second.count != 1)
      note("interface triangle " + std::to_string(t) + " is not a boundary face of the external fill");
  }
  for (std::size_t e = 0; e < f.tets.size(); ++e) {
    const auto& t = f.tets[e];
    if (!(tet_volume(f.nodes[t[0]], f.nodes[t[1]], f.nodes[t[2]], f.nodes[t[3]]) > 0.0))
      note("external tetrahedron " + std::to_string(e) + " has non-positive volume");
  }
  if (!problems.empty()) {
    std::ostringstream os;
    os << "external fill " << p.external_path.string() << " does not conform to the interface:";
    for (const auto& s : problems) os << "\n  " << s;
    throw InputError(os.str());
  }
  // Boundary classification: ceiling at z_top, everything else off the
  // interface is lateral.
  for (std::size_t i = 0; i < f.nodes.size(); ++i)
    if (f.nodes[i].z == p.z_top) f.node_flags[i] |= node_flag::ceiling;
  for (std::size_t i = 0; i < ns; ++i)
    if (lateral[i]) f.node_flags[i] |= node_flag::lateral;
  for (const auto& [k, u] : faces) {
    if (u.count != 1) continue;
    const int n = k[3] < 0 ? 3 : 4;
    bool on_interface = true, on_ceiling = true;
    for (int i = 0; i < n; ++i) {
      on_interface = on_interface && k[i] < static_cast<int>(ns);
      on_ceiling = on_ceiling && (f.node_flags[k[i]] & node_flag::ceiling);
    }
    if (on_interface || on_ceiling) continue;
    for (int i = 0; i < n; ++i) f.node_flags[k[i]] |= node_flag::lateral;
  }
  f.notes.push_back("external fill read from " + p.external_path.string());
  return f;
}

}  // namespace

double lateral_size_field(double z, double z_interface, double z_top, double h_interface, double h2) {
  if (!(z_top > z_interface)) throw ParameterError("lateral size field: z_top must exceed z_interface");
  const double t = std::clamp((z - z_interface) / (z_top - z_interface), 0.0, 1.0);
  return h_interface + t * (h2 - h_interface);
}

std::array<std::array<int, 4>, 3> split_prism(const std::array<int, 6>& p) {
  const int lowest = static_cast<int>(std::min_element(p.begin(), p.end()) - p.begin());
  const auto& r = kPrismRotations[lowest];
  const int a = p[r[0]], b = p[r[1]], c = p[r[2]], d = p[r[3]], e = p[r[4]], f = p[r[5]];
  if (std::min(b, f) < std::min(c, e)) return {{{a, b, c, f}, {a, b, f, e}, {a, e, f, d}}};
  return {{{a, b, c, e}, {a, e, c, f}, {a, e, f, d}}};
}

std::vector<double> fill_layer_heights(double gap, double first_height, double ratio,
                                       const std::function<double(double)>& cap) {
  if (!(gap > 0.0) || !(first_height > 0.0) || !(ratio >= 1.0))
    throw ParameterError("fill layers: need gap > 0, first height > 0, ratio >= 1");
  std::vector<double> h;
  double z = 0.0, next = first_height;
  while (z < gap) {
    double step = next;
    if (cap) step = std::min(step, cap(z));
    if (!(step > 0.0)) throw ParameterError("fill layers: size cap is not positive");
    if (z + step >= gap) step = gap - z;
    h.push_back(step);
    z += step;
    next *= ratio;
    if (h.size() > 100000) throw MeshingError("fill layers: too many layers");
  }
  return h;
}

TetFill generate_tet_fill(const std::vector<Vec3>& sheet, const std::vector<std::array<int, 3>>& triangles,
                          const std::vector<bool>& lateral, const FillParams& params) {
  if (sheet.empty() || triangles.empty()) throw InputError("tet fill: empty interface sheet");
  if (lateral.size() != sheet.size()) throw InputError("tet fill: lateral flags do not match the sheet");
  if (!(params.h2 > 0.0)) throw ParameterError("tet fill: h2 must be positive");
  return params.backend == FillBackend::builtin ? builtin_fill(sheet, triangles, lateral, params)
                                                : external_fill(sheet, triangles, lateral, params);
}

HybridMesh merge_hybrid(const PrismLayerMesh& prisms, const TetFill& fill) {
  if (fill.interface_size != prisms.sheet_size)
    throw InputError("merge: fill interface has " + std::to_string(fill.interface_size) + " nodes, prism top sheet has " +
                     std::to_string(prisms.sheet_size));
  HybridMesh m = prisms.mesh;
  const int ns = static_cast<int>(prisms.sheet_size);
  const int top = prisms.top_node(0);
  const int base = static_cast<int>(m.nodes.size());
  auto map = [&](int i) { return i < ns ? top + i : base + (i - ns); };
  for (std::size_t i = 0; i < fill.nodes.size(); ++i) {
    if (static_cast<int>(i) < ns) {
      m.node_flags[top + i] |= fill.node_flags[i];
      continue;
    }
    m.nodes.push_back(fill.nodes[i]);
    m.node_flags.push_back(fill.node_flags[i]);
  }
  m.tets.reserve(fill.tets.size());
  for (const auto& t : fill.tets) m.tets.push_back({map(t[0]), map(t[1]), map(t[2]), map(t[3])});
  return m;
}

std::string AuditReport::to_text() const {
  std::ostringstream os;
  os << "ok: " << (ok ? "true" : "false") << '\n';
  os << "faces: " << faces << '\n';
  os << "boundary_faces: " << boundary_faces << '\n';
  os << "nonmanifold_faces: " << nonmanifold_faces << '\n';
  os << "untagged_boundary_faces: " << untagged_boundary_faces << '\n';
  os << "nonpositive_elements: " << nonpositive_elements << '\n';
  os << "boundary_euler: " << boundary_euler << '\n';
  for (const auto& f : failures) os << "failure: " << f << '\n';
  return os.str();
}

AuditReport validate_conformity(const HybridMesh& m) {
  AuditReport r;
  const int nn = static_cast<int>(m.nodes.size());
  auto bad_index = [&](int v) { return v < 0 || v >= nn; };
  for (std::size_t e = 0; e < m.element_count(); ++e)
    for (int v : m.element_nodes(e))
      if (bad_index(v)) {
        r.ok = false;
        r.failures.push_back("element " + std::to_string(e) + " references missing node " + std::to_string(v));
        return r;
      }

  for (std::size_t e = 0; e < m.prisms.size(); ++e) {
    std::array<Vec3, 6> x;
    for (int k = 0; k < 6; ++k) x[k] = m.nodes[m.prisms[e][k]];
    if (!(prism_min_det(x) > 0.0) || !(prism_volume(x) > 0.0)) r.bad_elements.push_back(static_cast<int>(e));
  }
  for (std::size_t e = 0; e < m.tets.size(); ++e) {
    const auto& t = m.tets[e];
    if (!(tet_volume(m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]], m.nodes[t[3]]) > 0.0))
      r.bad_elements.push_back(static_cast<int>(m.prisms.size() + e));
  }
  r.nonpositive_elements = r.bad_elements.size();
  if (!r.bad_elements.empty()) {
    r.ok = false;
    r.failures.push_back(std::to_string(r.bad_elements.size()) + " elements with non-positive volume, first " +
                         std::to_string(r.bad_elements.front()));
  }

  std::map<FaceKey, FaceUse> faces;
  collect_faces(m, faces);
  r.faces = faces.size();
  std::set<std::pair<int, int>> edges;
  std::set<int> verts;
  const unsigned tags[] = {node_flag::ground, node_flag::ceiling, node_flag::lateral};
  for (const auto& [k, u] : faces) {
    if (u.count > 2) {
      ++r.nonmanifold_faces;
      continue;
    }
    if (u.count != 1) continue;
    ++r.boundary_faces;
    const int n = k[3] < 0 ? 3 : 4;
    // Lateral faces must also be vertical and ceiling faces horizontal, or a
    // hole next to the boundary would pass on flags alone.
    const Vec3& p0 = m.nodes[u.nodes[0]];
    const Vec3 normal = n == 3 ? cross(m.nodes[u.nodes[1]] - p0, m.nodes[u.nodes[2]] - p0)
                               : cross(m.nodes[u.nodes[2]] - p0, m.nodes[u.nodes[3]] - m.nodes[u.nodes[1]]);
    const double tol = 1e-8 * norm(normal);
    bool tagged = false;
    for (unsigned tag : tags) {
      bool all = !m.node_flags.empty();
      for (int i = 0; i < n && all; ++i) all = (m.node_flags[k[i]] & tag) != 0;
      if (tag == node_flag::lateral) all = all && std::abs(normal.z) <= tol;
      if (tag == node_flag::ceiling) all = all && std::hypot(normal.x, normal.y) <= tol;
      tagged = tagged || all;
    }
    if (!tagged) ++r.untagged_boundary_faces;
    for (int i = 0; i < n; ++i) {
      const int a = u.nodes[i], b = u.nodes[(i + 1) % n];
      edges.insert({std::min(a, b), std::max(a, b)});
      verts.insert(a);
    }
  }
  r.boundary_euler = static_cast<int>(verts.size()) - static_cast<int>(edges.size()) + static_cast<int>(r.boundary_faces);
  if (r.nonmanifold_faces) {
    r.ok = false;
    r.failures.push_back(std::to_string(r.nonmanifold_faces) + " faces shared by more than two elements");
  }
  if (r.untagged_boundary_faces) {
    r.ok = false;
    r.failures.push_back(std::to_string(r.untagged_boundary_faces) +
                         " boundary faces are not on ground, ceiling or lateral boundary (hole or hanging face)");
  }
  if (r.boundary_euler != 2) {
    r.ok = false;
    r.failures.push_back("boundary surface Euler characteristic is " + std::to_string(r.boundary_euler) + ", expected 2");
  }
  return r;
}

double mesh_volume(const HybridMesh& m) {
  double v = 0.0;
  for (const auto& p : m.prisms) {
    std::array<Vec3, 6> x;
    for (int k = 0; k < 6; ++k) x[k] = m.nodes[p[k]];
    v += prism_volume(x);
  }
  for (const auto& t : m.tets) v += tet_volume(m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]], m.nodes[t[3]]);
  return v;
}

}  // namespace ablmesh
