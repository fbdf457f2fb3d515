#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "ablmesh/exchange.hpp"
#include "ablmesh/mesh.hpp"
#include "ablmesh/volfill.hpp"

namespace ablmesh {

enum class MeshFormat { exchange, vtk_legacy };

/// Parses "exchange" or "vtk"; throws ParameterError.
MeshFormat parse_mesh_format(const std::string& s);

ExchangeDocument to_exchange(const TriSurfaceMesh& mesh);
ExchangeDocument to_exchange(const HybridMesh& mesh);

/// Throws InputError when the document does not describe that mesh type.
TriSurfaceMesh surface_from_exchange(const ExchangeDocument& doc, const std::string& name = "<document>");
HybridMesh hybrid_from_exchange(const ExchangeDocument& doc, const std::string& name = "<document>");

/// VTK legacy ASCII unstructured grid with per-cell quality.
void write_vtk(const TriSurfaceMesh& mesh, std::ostream& os);
void write_vtk(const HybridMesh& mesh, std::ostream& os);

void write_mesh(const TriSurfaceMesh& mesh, const std::filesystem::path& path, MeshFormat format);
void write_mesh(const HybridMesh& mesh, const std::filesystem::path& path, MeshFormat format);

/// "surface" or "hybrid", from the file's kind metadata.
std::string exchange_mesh_kind(const ExchangeDocument& doc);

/// Reads and audits a surface mesh (edge manifoldness, positive orientation).
TriSurfaceMesh read_surface_mesh(const std::filesystem::path& path);

/// Reads a hybrid mesh and runs validate_conformity. Without `audit` a
/// failing audit throws InputError; with it, the report is returned there.
HybridMesh read_hybrid_mesh(const std::filesystem::path& path, AuditReport* audit = nullptr);

}  // namespace ablmesh
