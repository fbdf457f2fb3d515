#include "ablmesh/quality.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ablmesh/error.hpp"

namespace ablmesh {

namespace {

using Mat3 = Eigen::Matrix3d;

Eigen::Vector3d ev(const Vec3& v) { return {v.x, v.y, v.z}; }

// Prism quadrature: in-base points (1/6,1/6), (2/3,1/6), (1/6,2/3) times
// two Gauss points through the thickness; equal weights.
constexpr double kG = 0.21132486540518711775;  // 0.5 - 0.5/sqrt(3)
constexpr std::array<std::array<double, 3>, 6> kPrismPoints{{
    {1.0 / 6, 1.0 / 6, kG},
    {2.0 / 3, 1.0 / 6, kG},
    {1.0 / 6, 2.0 / 3, kG},
    {1.0 / 6, 1.0 / 6, 1.0 - kG},
    {2.0 / 3, 1.0 / 6, 1.0 - kG},
    {1.0 / 6, 2.0 / 3, 1.0 - kG},
}};

Mat3 prism_jacobian(std::span<const Vec3> x, double r, double s, double t) {
  const Vec3 dr = (x[1] - x[0]) * (1.0 - t) + (x[4] - x[3]) * t;
  const Vec3 ds = (x[2] - x[0]) * (1.0 - t) + (x[5] - x[3]) * t;
  const Vec3 dt = (x[3] - x[0]) * (1.0 - r - s) + (x[4] - x[1]) * r + (x[5] - x[2]) * s;
  Mat3 j;
  j.col(0) = ev(dr);
  j.col(1) = ev(ds);
  j.col(2) = ev(dt);
  return j;
}

// Frobenius norm squared and signed determinant of the map from the ideal
// triangle to a (possibly 3D) physical triangle, via the Gram matrix.
void triangle_invariants(std::span<const Vec3> x, const Mat3& inv_ref, double& frob2, double& det) {
  const Vec3 a = x[1] - x[0], b = x[2] - x[0];
  Eigen::Matrix2d g;
  g << dot(a, a), dot(a, b), dot(a, b), dot(b, b);
  const Eigen::Matrix2d w = inv_ref.topLeftCorner<2, 2>();
  frob2 = (w.transpose() * g * w).trace();
  const double n_z = cross(a, b).z;
  const double area2 = std::sqrt(std::max(0.0, g.determinant()));
  det = (n_z > 0.0 ? 1.0 : -1.0) * area2 * std::abs(w.determinant());
  if (n_z == 0.0) det = 0.0;
}

double eta_from(double frob2, double det, int d) {
  if (!(det > 0.0)) return kInfinity;
  return frob2 / (d * std::pow(det, 2.0 / d));
}

double eta_reg(double frob2, double det, int d, double delta) {
  return frob2 / (d * std::pow(regularized_det(det, delta), 2.0 / d));
}

// Calls f(frob2, det) for each quadrature point (one for affine kinds).
template <class F>
void for_each_point(std::span<const Vec3> x, const IdealElement& ideal, F&& f) {
  switch (ideal.kind) {
    case ElementKind::triangle: {
      double frob2, det;
      triangle_invariants(x, ideal.inv_ref, frob2, det);
      f(frob2, det, 2);
      return;
    }
    case ElementKind::tetrahedron: {
      Mat3 j;
      j.col(0) = ev(x[1] - x[0]);
      j.col(1) = ev(x[2] - x[0]);
      j.col(2) = ev(x[3] - x[0]);
      const Mat3 m = j * ideal.inv_ref;
      f(m.squaredNorm(), m.determinant(), 3);
      return;
    }
    case ElementKind::prism: {
      for (const auto& q : kPrismPoints) {
        const Mat3 m = prism_jacobian(x, q[0], q[1], q[2]) * ideal.inv_ref;
        f(m.squaredNorm(), m.determinant(), 3);
      }
      return;
    }
  }
}

std::size_t expected_nodes(ElementKind k) {
  switch (k) {
    case ElementKind::triangle: return 3;
    case ElementKind::tetrahedron: return 4;
    case ElementKind::prism: return 6;
  }
  return 0;
}

}  // namespace

double shape_distortion(const Eigen::Matrix2d& j) { return eta_from(j.squaredNorm(), j.determinant(), 2); }

double shape_distortion(const Eigen::Matrix3d& j) { return eta_from(j.squaredNorm(), j.determinant(), 3); }

IdealElement IdealElement::triangle(double h) {
  if (!(h > 0.0)) throw ParameterError("ideal triangle: size must be positive");
  IdealElement e;
  e.kind = ElementKind::triangle;
  e.nodes = {{0, 0, 0}, {h, 0, 0}, {0.5 * h, 0.5 * std::sqrt(3.0) * h, 0}};
  Eigen::Matrix2d w;
  w << h, 0.5 * h, 0.0, 0.5 * std::sqrt(3.0) * h;
  e.inv_ref.setIdentity();
  e.inv_ref.topLeftCorner<2, 2>() = w.inverse();
  return e;
}

IdealElement IdealElement::tetrahedron(double h) {
  if (!(h > 0.0)) throw ParameterError("ideal tetrahedron: size must be positive");
  IdealElement e;
  e.kind = ElementKind::tetrahedron;
  const double s3 = std::sqrt(3.0);
  e.nodes = {{0, 0, 0}, {h, 0, 0}, {0.5 * h, 0.5 * s3 * h, 0}, {0.5 * h, s3 / 6.0 * h, std::sqrt(2.0 / 3.0) * h}};
  Mat3 w;
  for (int k = 0; k < 3; ++k) w.col(k) = ev(e.nodes[k + 1] - e.nodes[0]);
  e.inv_ref = w.inverse();
  return e;
}

IdealElement IdealElement::prism(const std::array<Vec3, 3>& base, double height) {
  if (!(height > 0.0)) throw ParameterError("ideal prism: height must be positive");
  const Vec3 ab = base[1] - base[0], ac = base[2] - base[0];
  const double lab = norm(ab);
  const Vec3 n = cross(ab, ac);
  if (!(lab > 0.0) || !(norm(n) > 0.0)) throw ParameterError("ideal prism: degenerate base triangle");
  const Vec3 e1 = ab / lab;
  const Vec3 e2 = normalized(cross(normalized(n), e1));
  IdealElement e;
  e.kind = ElementKind::prism;
  const Vec3 a{0, 0, 0}, b{lab, 0, 0}, c{dot(ac, e1), dot(ac, e2), 0};
  const Vec3 up{0, 0, height};
  e.nodes = {a, b, c, a + up, b + up, c + up};
  Mat3 w;
  w.col(0) = ev(b - a);
  w.col(1) = ev(c - a);
  w.col(2) = ev(up);
  e.inv_ref = w.inverse();
  return e;
}

// The prism map is not affine: a corner can fold while every quadrature
// point keeps a positive determinant.
static bool prism_corner_folded(std::span<const Vec3> nodes, const IdealElement& ideal) {
  if (ideal.kind != ElementKind::prism) return false;
  std::array<Vec3, 6> p;
  std::copy(nodes.begin(), nodes.end(), p.begin());
  return prism_min_det(p) <= 0.0;
}

DistortionValue elem_distortion(std::span<const Vec3> nodes, const IdealElement& ideal) {
  if (nodes.size() != expected_nodes(ideal.kind))
    throw ParameterError(std::string("elem_distortion: wrong node count for ") + to_string(ideal.kind));
  double sum = 0.0;
  int n = 0;
  bool inverted = false;
  for_each_point(nodes, ideal, [&](double frob2, double det, int d) {
    const double eta = eta_from(frob2, det, d);
    if (!std::isfinite(eta)) inverted = true;
    sum += eta * eta;
    ++n;
  });
  if (inverted || prism_corner_folded(nodes, ideal)) return DistortionValue::from_eta(kInfinity);
  return DistortionValue::from_eta(n == 1 ? std::sqrt(sum) : std::sqrt(sum / n));
}

double elem_eta_regularized(std::span<const Vec3> nodes, const IdealElement& ideal, double delta) {
  double sum = 0.0;
  int n = 0;
  for_each_point(nodes, ideal, [&](double frob2, double det, int d) {
    const double eta = eta_reg(frob2, det, d, delta);
    sum += eta * eta;
    ++n;
  });
  return std::sqrt(sum / n);
}

ElemEval elem_evaluate(std::span<const Vec3> nodes, const IdealElement& ideal, double delta) {
  double reg = 0.0, sum = 0.0, det_sum = 0.0;
  int n = 0;
  bool inverted = false;
  for_each_point(nodes, ideal, [&](double frob2, double det, int d) {
    const double er = eta_reg(frob2, det, d, delta);
    reg += er * er;
    const double e = eta_from(frob2, det, d);
    if (!std::isfinite(e)) inverted = true;
    sum += e * e;
    det_sum += det;
    ++n;
  });
  ElemEval out;
  out.eta_regularized = std::sqrt(reg / n);
  out.quality = inverted || prism_corner_folded(nodes, ideal) ? 0.0 : 1.0 / std::sqrt(sum / n);
  out.mean_det = det_sum / n;
  return out;
}

double elem_mean_det(std::span<const Vec3> nodes, const IdealElement& ideal) {
  double sum = 0.0;
  int n = 0;
  for_each_point(nodes, ideal, [&](double, double det, int) {
    sum += det;
    ++n;
  });
  return sum / n;
}

double prism_volume(const std::array<Vec3, 6>& p) {
  double v = 0.0;
  for (const auto& q : kPrismPoints) v += prism_jacobian(p, q[0], q[1], q[2]).determinant();
  // Reference prism volume 1/2, six equal weights.
  return v * 0.5 / 6.0;
}

double prism_min_det(const std::array<Vec3, 6>& p) {
  double m = 1e300;
  for (const auto& q : kPrismPoints) m = std::min(m, prism_jacobian(p, q[0], q[1], q[2]).determinant());
  for (double t : {0.0, 1.0}) {
    m = std::min(m, prism_jacobian(p, 0, 0, t).determinant());
    m = std::min(m, prism_jacobian(p, 1, 0, t).determinant());
    m = std::min(m, prism_jacobian(p, 0, 1, t).determinant());
  }
  return m;
}

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return dot(cross(b - a, c - a), d - a) / 6.0;
}

QualityStats compute_stats(std::span<const double> q) {
  QualityStats s;
  s.count = q.size();
  if (q.empty()) return s;
  s.min = q[0];
  s.max = q[0];
  double sum = 0.0;
  for (double v : q) {
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    sum += v;
    if (v == 0.0) ++s.inverted;
    const int bin = std::clamp(static_cast<int>(v * 20.0), 0, 19);
    ++s.histogram[bin];
  }
  s.mean = sum / q.size();
  double var = 0.0;
  for (double v : q) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / q.size());
  return s;
}

std::string QualityReport::to_text() const {
  std::ostringstream os;
  auto block = [&os](const std::string& prefix, const QualityStats& s) {
    os << prefix << ".count: " << s.count << '\n';
    os << prefix << ".min: " << format_double(s.min) << '\n';
    os << prefix << ".max: " << format_double(s.max) << '\n';
    os << prefix << ".mean: " << format_double(s.mean) << '\n';
    os << prefix << ".stddev: " << format_double(s.stddev) << '\n';
    os << prefix << ".inverted: " << s.inverted << '\n';
    for (int b = 0; b < 20; ++b) {
      char range[32];
      std::snprintf(range, sizeof range, "[%.2f,%.2f%c", b * 0.05, (b + 1) * 0.05, b == 19 ? ']' : ')');
      os << prefix << ".histogram " << range << ' ' << s.histogram[b] << '\n';
    }
  };
  block("overall", overall);
  for (const auto& [k, s] : by_kind) block(k, s);
  return os.str();
}

std::vector<IdealElement> ideal_elements(const TriSurfaceMesh& mesh) {
  std::vector<IdealElement> out;
  out.reserve(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double h = mesh.target_size.empty() ? 1.0 : mesh.target_size[t];
    out.push_back(IdealElement::triangle(h > 0.0 ? h : 1.0));
  }
  return out;
}

std::vector<IdealElement> ideal_elements(const HybridMesh& mesh) {
  std::vector<IdealElement> out;
  out.reserve(mesh.element_count());
  for (std::size_t e = 0; e < mesh.prisms.size(); ++e) {
    const auto& g = mesh.ground_triangles[mesh.prism_base[e]];
    out.push_back(IdealElement::prism({mesh.nodes[g[0]], mesh.nodes[g[1]], mesh.nodes[g[2]]}, mesh.prism_height[e]));
  }
  const IdealElement tet = IdealElement::tetrahedron(1.0);
  for (std::size_t e = 0; e < mesh.tets.size(); ++e) out.push_back(tet);
  return out;
}

std::vector<double> element_qualities(const TriSurfaceMesh& mesh) {
  const auto ideals = ideal_elements(mesh);
  std::vector<double> q(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& v = mesh.triangles[t];
    const std::array<Vec3, 3> x{mesh.xyz[v[0]], mesh.xyz[v[1]], mesh.xyz[v[2]]};
    q[t] = elem_distortion(x, ideals[t]).quality;
  }
  return q;
}

std::vector<double> element_qualities(const HybridMesh& mesh) {
  const auto ideals = ideal_elements(mesh);
  std::vector<double> q(mesh.element_count());
  for (std::size_t e = 0; e < mesh.prisms.size(); ++e) {
    std::array<Vec3, 6> x;
    for (int k = 0; k < 6; ++k) x[k] = mesh.nodes[mesh.prisms[e][k]];
    q[e] = elem_distortion(x, ideals[e]).quality;
  }
  for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
    std::array<Vec3, 4> x;
    for (int k = 0; k < 4; ++k) x[k] = mesh.nodes[mesh.tets[e][k]];
    q[mesh.prisms.size() + e] = elem_distortion(x, ideals[mesh.prisms.size() + e]).quality;
  }
  return q;
}

QualityReport mesh_quality_stats(const TriSurfaceMesh& mesh) {
  if (mesh.triangles.empty()) throw InputError("quality report: empty mesh");
  const auto q = element_qualities(mesh);
  QualityReport r;
  r.overall = compute_stats(q);
  r.by_kind["triangle"] = r.overall;
  return r;
}

QualityReport mesh_quality_stats(const HybridMesh& mesh) {
  if (mesh.element_count() == 0) throw InputError("quality report: empty mesh");
  const auto q = element_qualities(mesh);
  QualityReport r;
  r.overall = compute_stats(q);
  const std::span<const double> all(q);
  if (!mesh.prisms.empty()) r.by_kind["prism"] = compute_stats(all.first(mesh.prisms.size()));
  if (!mesh.tets.empty()) r.by_kind["tetrahedron"] = compute_stats(all.subspan(mesh.prisms.size()));
  return r;
}

}  // namespace ablmesh
