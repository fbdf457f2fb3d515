#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ablmesh/geometry.hpp"
#include "ablmesh/terrain.hpp"

namespace ablmesh {

using Metric2 = Sym2;

/// [[1 + zx^2, zx zy], [zx zy, 1 + zy^2]]
Metric2 first_fundamental_form(const Vec2& grad);

/// fff / h^2. Throws ParameterError for h <= 0.
Metric2 tangent_metric(const Metric2& fff, double h);

/// Eigenvalue bounds [1/h_max^2, 1/h_min^2].
struct ClampBounds {
  double h_min = 0.0;
  double h_max = 0.0;
};

/// V (beta |D|) V^T, eigenvalues clamped when bounds are given.
Metric2 curvature_metric(const Sym2& hessian, double beta, std::optional<ClampBounds> clamp);

/// Eigenvalues (ascending) and unit eigenvector of the first one.
struct Eigen2 {
  double l1 = 0.0;
  double l2 = 0.0;
  Vec2 v1{1.0, 0.0};
};
Eigen2 eigen_sym2(const Sym2& m);

/// Evaluates a metric tensor at parametric points. Copies share state and
/// evaluation is safe from several threads.
class MetricField2 {
 public:
  enum class Kind { tangent, curvature, constant };

  static MetricField2 constant(const Metric2& m);
  /// M_t = M_FF(grad z_p) / h^2 with gradients from cached local fits.
  static MetricField2 tangent(std::shared_ptr<const FitCache> fits, double h);
  /// clamp(beta |H(z_p)|); no clamping when clamp is empty.
  static MetricField2 curvature(std::shared_ptr<const FitCache> fits, double beta,
                                std::optional<ClampBounds> clamp);
  /// Arbitrary evaluator, e.g. an analytic Hessian.
  static MetricField2 from_function(Kind kind, std::function<Metric2(const Vec2&)> f);

  Metric2 operator()(const Vec2& p) const { return eval_(p); }
  Kind kind() const { return kind_; }

 private:
  MetricField2(Kind k, std::function<Metric2(const Vec2&)> f) : kind_(k), eval_(std::move(f)) {}
  Kind kind_;
  std::function<Metric2(const Vec2&)> eval_;
};

struct ComplexityResult {
  double value = 0.0;
  int levels = 0;         // grid refinements performed
  int resolution = 0;     // cells per side at the final level
  bool converged = false;
  std::string warning;    // set when 6 levels did not reach 1% agreement
};

/// Midpoint-rule integral of sqrt(det M) over the rectangle, doubling the
/// grid from `resolution` cells per side until two levels agree to 1%.
ComplexityResult metric_complexity(const MetricField2& field, const Rect2& domain, int resolution = 8);

/// N / (alpha C1); nullopt ("curvature metric inactive") when C1 <= 0.
std::optional<double> beta_star(double n, double alpha, double c1);

/// Gauss-Legendre nodes and weights on [0, 1].
struct Quadrature1D {
  std::vector<double> x;
  std::vector<double> w;
};
Quadrature1D gauss_legendre(int n);

/// Integral over t in [0,1] of sqrt(e^T M(p1 + t e) e), e = p2 - p1.
double edge_length_under_metric(const Vec2& p1, const Vec2& p2, const MetricField2& field, int points = 3);

}  // namespace ablmesh
