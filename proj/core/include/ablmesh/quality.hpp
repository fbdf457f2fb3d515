#pragma once

#include <Eigen/Core>

#include <array>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ablmesh/exchange.hpp"
#include "ablmesh/geometry.hpp"
#include "ablmesh/mesh.hpp"

namespace ablmesh {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// ||J||_F^2 / (d |det J|^(2/d)); +inf when det J <= 0.
double shape_distortion(const Eigen::Matrix2d& j);
double shape_distortion(const Eigen::Matrix3d& j);

/// 0.5 (det + sqrt(det^2 + 4 delta^2)): positive, ~det for det >> delta.
inline double regularized_det(double det, double delta) {
  return 0.5 * (det + std::sqrt(det * det + 4.0 * delta * delta));
}

struct DistortionValue {
  double eta = 1.0;
  double quality = 1.0;

  static DistortionValue from_eta(double eta) {
    return {eta, std::isfinite(eta) ? 1.0 / eta : 0.0};
  }
};

/// Reference configuration that defines zero distortion. The inverse
/// reference Jacobian is cached: top-left 2x2 block for triangles.
struct IdealElement {
  ElementKind kind = ElementKind::triangle;
  std::vector<Vec3> nodes;
  Eigen::Matrix3d inv_ref = Eigen::Matrix3d::Identity();

  /// Equilateral triangle with edge h.
  static IdealElement triangle(double h);
  /// Regular tetrahedron with edge h.
  static IdealElement tetrahedron(double h);
  /// Base triangle extruded orthogonally by `height`.
  static IdealElement prism(const std::array<Vec3, 3>& base, double height);
};

/// L2-mean shape distortion of the ideal-to-physical map. Triangles may be
/// embedded in 3D. Prisms use 3 in-base x 2 through-thickness points.
DistortionValue elem_distortion(std::span<const Vec3> nodes, const IdealElement& ideal);

/// Same as elem_distortion with |det|_delta in place of |det| so inverted
/// elements keep a finite, decreasing-with-untangling value.
double elem_eta_regularized(std::span<const Vec3> nodes, const IdealElement& ideal, double delta);

struct ElemEval {
  double eta_regularized = 1.0;
  double quality = 1.0;
  double mean_det = 1.0;
};

/// Regularized eta, reporting quality and mean determinant in one pass.
ElemEval elem_evaluate(std::span<const Vec3> nodes, const IdealElement& ideal, double delta);

/// Mean determinant of the ideal-to-physical Jacobian over the quadrature points.
double elem_mean_det(std::span<const Vec3> nodes, const IdealElement& ideal);

/// Volume of a prism from the exact 6-point integral of det(dx/dxi).
double prism_volume(const std::array<Vec3, 6>& p);
/// Smallest det(dx/dxi) over the prism quadrature points and corners.
double prism_min_det(const std::array<Vec3, 6>& p);
double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

struct QualityStats {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t inverted = 0;  // quality == 0
  std::array<std::size_t, 20> histogram{};  // bins of width 0.05 over [0, 1]
};

QualityStats compute_stats(std::span<const double> qualities);

struct QualityReport {
  QualityStats overall;
  std::map<std::string, QualityStats> by_kind;

  /// "key: value" lines and one row per histogram bin.
  std::string to_text() const;
};

/// Ideal elements of each mesh element.
std::vector<IdealElement> ideal_elements(const TriSurfaceMesh& mesh);
std::vector<IdealElement> ideal_elements(const HybridMesh& mesh);

/// Per-element quality, surface triangles measured on the lifted mesh.
std::vector<double> element_qualities(const TriSurfaceMesh& mesh);
/// Prisms first, then tetrahedra.
std::vector<double> element_qualities(const HybridMesh& mesh);

/// Throws InputError on an empty mesh.
QualityReport mesh_quality_stats(const TriSurfaceMesh& mesh);
QualityReport mesh_quality_stats(const HybridMesh& mesh);

}  // namespace ablmesh
