#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "ablmesh/mesh.hpp"
#include "ablmesh/sweep.hpp"

namespace ablmesh {

/// Linear in z from h_interface at z_interface to h2 at z_top, clamped.
double lateral_size_field(double z, double z_interface, double z_top, double h_interface, double h2);

enum class FillBackend { builtin, external };

struct FillParams {
  double z_top = 0.0;
  double h2 = 0.0;
  double first_height = 1.0;
  double ratio = 1.2;
  /// Horizontal size at the interface; when positive, layer heights are
  /// also capped by lateral_size_field.
  double h_interface = 0.0;
  FillBackend backend = FillBackend::builtin;
  std::filesystem::path external_path;
};

/// Tetrahedra above the interface sheet. Local node ids below
/// interface_size are the interface sheet nodes in sheet order.
struct TetFill {
  std::vector<Vec3> nodes;
  std::vector<unsigned> node_flags;
  std::size_t interface_size = 0;
  std::vector<std::array<int, 4>> tets;
  std::vector<double> layer_heights;  // builtin: reference (largest gap) column
  std::vector<std::string> notes;
};

/// Splits prism (a, b, c, d, e, f) into three positively oriented
/// tetrahedra; every quad diagonal passes through the quad's lowest id.
std::array<std::array<int, 4>, 3> split_prism(const std::array<int, 6>& p);

/// Geometric layer heights from first_height with the given ratio, capped by
/// `cap(z)` at the layer bottom, the last one shrunk to end exactly at gap.
std::vector<double> fill_layer_heights(double gap, double first_height, double ratio,
                                       const std::function<double(double)>& cap);

/// Builtin column fill or external exchange file checked against the sheet.
TetFill generate_tet_fill(const std::vector<Vec3>& sheet, const std::vector<std::array<int, 3>>& triangles,
                          const std::vector<bool>& lateral, const FillParams& params);

/// Joins prisms and tetrahedra; interface nodes are shared by index.
HybridMesh merge_hybrid(const PrismLayerMesh& prisms, const TetFill& fill);

struct AuditReport {
  bool ok = true;
  std::size_t faces = 0;
  std::size_t boundary_faces = 0;
  std::size_t nonmanifold_faces = 0;
  std::size_t untagged_boundary_faces = 0;
  std::size_t nonpositive_elements = 0;
  int boundary_euler = 0;
  std::vector<int> bad_elements;
  std::vector<std::string> failures;

  std::string to_text() const;
};

/// Face matching, positive volumes, watertight tagged boundary and a
/// boundary surface of Euler characteristic 2.
AuditReport validate_conformity(const HybridMesh& mesh);

/// Sum of element volumes.
double mesh_volume(const HybridMesh& mesh);

}  // namespace ablmesh
