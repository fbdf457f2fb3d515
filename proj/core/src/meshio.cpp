#include "ablmesh/meshio.hpp"

#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "ablmesh/error.hpp"
#include "ablmesh/quality.hpp"

namespace ablmesh {

namespace {

template <class T>
const std::vector<T>& require(const std::map<std::string, FieldBlock<T>>& fields, const std::string& key,
                              FieldTarget target, const std::string& name) {
  const auto it = fields.find(key);
  if (it == fields.end() || it->second.target != target)
    throw InputError(name + ": missing " + to_string(target) + " field '" + key + "'");
  return it->second.values;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open '" + path.string() + "' for writing");
  return os;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw InputError("write failed: '" + path.string() + "'");
}

void vtk_header(std::ostream& os, const char* title, const std::vector<Vec3>& pts) {
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << pts.size() << " double\n";
  for (const auto& p : pts) os << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z) << '\n';
}

void vtk_scalars(std::ostream& os, const char* name, const std::vector<double>& v) {
  os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (double x : v) os << format_double(x) << '\n';
}

}  // namespace

MeshFormat parse_mesh_format(const std::string& s) {
  if (s == "exchange") return MeshFormat::exchange;
  if (s == "vtk" || s == "vtk-legacy") return MeshFormat::vtk_legacy;
  throw ParameterError("unknown mesh format '" + s + "' (expected exchange or vtk)");
}

ExchangeDocument to_exchange(const TriSurfaceMesh& m) {
  ExchangeDocument d;
  d.meta["kind"] = "surface";
  d.nodes = m.xyz;
  d.triangles = m.triangles;
  auto& u = d.real_fields["u"];
  auto& v = d.real_fields["v"];
  u.target = v.target = FieldTarget::node;
  for (const auto& p : m.uv) {
    u.values.push_back(p.x);
    v.values.push_back(p.y);
  }
  auto& region = d.int_fields["region"];
  region.target = FieldTarget::triangle;
  for (auto r : m.region) region.values.push_back(static_cast<int>(r));
  auto& size = d.real_fields["target_size"];
  size.target = FieldTarget::triangle;
  size.values = m.target_size;
  return d;
}

ExchangeDocument to_exchange(const HybridMesh& m) {
  ExchangeDocument d;
  d.meta["kind"] = "hybrid";
  d.nodes = m.nodes;
  d.triangles = m.ground_triangles;
  d.prisms = m.prisms;
  d.tetrahedra = m.tets;
  auto& flags = d.int_fields["node_flags"];
  flags.target = FieldTarget::node;
  flags.values.assign(m.node_flags.begin(), m.node_flags.end());
  auto& layer = d.int_fields["layer"];
  auto& base = d.int_fields["base_triangle"];
  layer.target = base.target = FieldTarget::prism;
  layer.values.assign(m.prism_layer.begin(), m.prism_layer.end());
  base.values.assign(m.prism_base.begin(), m.prism_base.end());
  auto& height = d.real_fields["nominal_height"];
  height.target = FieldTarget::prism;
  height.values = m.prism_height;
  return d;
}

std::string exchange_mesh_kind(const ExchangeDocument& doc) {
  const auto it = doc.meta.find("kind");
  if (it != doc.meta.end()) return it->second;
  return doc.prisms.empty() && doc.tetrahedra.empty() ? "surface" : "hybrid";
}

TriSurfaceMesh surface_from_exchange(const ExchangeDocument& d, const std::string& name) {
  if (exchange_mesh_kind(d) != "surface") throw InputError(name + ": not a surface mesh");
  TriSurfaceMesh m;
  m.xyz = d.nodes;
  m.triangles = d.triangles;
  const auto& u = require(d.real_fields, "u", FieldTarget::node, name);
  const auto& v = require(d.real_fields, "v", FieldTarget::node, name);
  for (std::size_t i = 0; i < u.size(); ++i) m.uv.push_back({u[i], v[i]});
  for (long long r : require(d.int_fields, "region", FieldTarget::triangle, name)) {
    if (r < 0 || r > 2) throw InputError(name + ": region tag out of range");
    m.region.push_back(static_cast<Region>(r));
  }
  m.target_size = require(d.real_fields, "target_size", FieldTarget::triangle, name);
  return m;
}

HybridMesh hybrid_from_exchange(const ExchangeDocument& d, const std::string& name) {
  if (exchange_mesh_kind(d) != "hybrid") throw InputError(name + ": not a hybrid mesh");
  HybridMesh m;
  m.nodes = d.nodes;
  m.ground_triangles = d.triangles;
  m.prisms = d.prisms;
  m.tets = d.tetrahedra;
  for (long long f : require(d.int_fields, "node_flags", FieldTarget::node, name))
    m.node_flags.push_back(static_cast<unsigned>(f));
  for (long long l : require(d.int_fields, "layer", FieldTarget::prism, name)) m.prism_layer.push_back(static_cast<int>(l));
  for (long long b : require(d.int_fields, "base_triangle", FieldTarget::prism, name)) {
    if (b < 0 || b >= static_cast<long long>(m.ground_triangles.size()))
      throw InputError(name + ": prism base triangle out of range");
    m.prism_base.push_back(static_cast<int>(b));
  }
  m.prism_height = require(d.real_fields, "nominal_height", FieldTarget::prism, name);
  return m;
}

void write_vtk(const TriSurfaceMesh& m, std::ostream& os) {
  vtk_header(os, "ablmesh surface", m.xyz);
  os << "CELLS " << m.triangles.size() << ' ' << 4 * m.triangles.size() << '\n';
  for (const auto& t : m.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << m.triangles.size() << '\n';
  for (std::size_t i = 0; i < m.triangles.size(); ++i) os << "5\n";
  os << "CELL_DATA " << m.triangles.size() << '\n';
  vtk_scalars(os, "quality", element_qualities(m));
  os << "SCALARS region int 1\nLOOKUP_TABLE default\n";
  for (auto r : m.region) os << static_cast<int>(r) << '\n';
}

void write_vtk(const HybridMesh& m, std::ostream& os) {
  vtk_header(os, "ablmesh hybrid", m.nodes);
  const std::size_t n = m.element_count();
  os << "CELLS " << n << ' ' << 7 * m.prisms.size() + 5 * m.tets.size() << '\n';
  for (const auto& p : m.prisms) {
    os << '6';
    for (int v : p) os << ' ' << v;
    os << '\n';
  }
  for (const auto& t : m.tets) os << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  os << "CELL_TYPES " << n << '\n';
  for (std::size_t i = 0; i < m.prisms.size(); ++i) os << "13\n";
  for (std::size_t i = 0; i < m.tets.size(); ++i) os << "10\n";
  os << "CELL_DATA " << n << '\n';
  vtk_scalars(os, "quality", element_qualities(m));
  os << "SCALARS layer int 1\nLOOKUP_TABLE default\n";
  for (int l : m.prism_layer) os << l << '\n';
  for (std::size_t i = 0; i < m.tets.size(); ++i) os << "0\n";
}

void write_mesh(const TriSurfaceMesh& mesh, const std::filesystem::path& path, MeshFormat format) {
  auto os = open_out(path);
  if (format == MeshFormat::exchange) write_exchange(to_exchange(mesh), os);
  else write_vtk(mesh, os);
  finish(os, path);
}

void write_mesh(const HybridMesh& mesh, const std::filesystem::path& path, MeshFormat format) {
  auto os = open_out(path);
  if (format == MeshFormat::exchange) write_exchange(to_exchange(mesh), os);
  else write_vtk(mesh, os);
  finish(os, path);
}

TriSurfaceMesh read_surface_mesh(const std::filesystem::path& path) {
  const auto doc = read_exchange(path);
  TriSurfaceMesh m = surface_from_exchange(doc, path.string());
  std::map<std::pair<int, int>, int> directed;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& v = m.triangles[t];
    if (!(orient2d(m.uv[v[0]], m.uv[v[1]], m.uv[v[2]]) > 0.0))
      throw InputError(path.string() + ": triangle " + std::to_string(t) + " is not positively oriented");
    for (int k = 0; k < 3; ++k)
      if (++directed[{v[k], v[(k + 1) % 3]}] > 1)
        throw InputError(path.string() + ": edge (" + std::to_string(v[k]) + ", " + std::to_string(v[(k + 1) % 3]) +
                         ") is used twice in the same direction");
  }
  return m;
}

HybridMesh read_hybrid_mesh(const std::filesystem::path& path, AuditReport* audit) {
  const auto doc = read_exchange(path);
  HybridMesh m = hybrid_from_exchange(doc, path.string());
  const AuditReport r = validate_conformity(m);
  if (audit) *audit = r;
  else if (!r.ok) throw InputError(path.string() + ": conformity audit failed\n" + r.to_text());
  return m;
}

}  // namespace ablmesh
