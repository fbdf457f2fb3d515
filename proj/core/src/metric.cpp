#include "ablmesh/metric.hpp"

#include <cmath>

#include "ablmesh/error.hpp"

namespace ablmesh {

Metric2 first_fundamental_form(const Vec2& g) {
  return {1.0 + g.x * g.x, g.x * g.y, 1.0 + g.y * g.y};
}

Metric2 tangent_metric(const Metric2& fff, double h) {
  if (!(h > 0.0)) throw ParameterError("tangent_metric: h must be positive");
  return fff * (1.0 / (h * h));
}

Eigen2 eigen_sym2(const Sym2& m) {
  const double half_tr = 0.5 * (m.m11 + m.m22);
  const double d = 0.5 * (m.m11 - m.m22);
  const double r = std::hypot(d, m.m12);
  Eigen2 e;
  e.l1 = half_tr - r;
  e.l2 = half_tr + r;
  if (r == 0.0) return e;
  // Eigenvector of l1; pick the better conditioned of the two forms.
  Vec2 v = d <= 0.0 ? Vec2{r - d, -m.m12} : Vec2{-m.m12, r + d};
  const double n = norm(v);
  e.v1 = v / n;
  return e;
}

Metric2 curvature_metric(const Sym2& hessian, double beta, std::optional<ClampBounds> clamp) {
  if (!(beta > 0.0)) throw ParameterError("curvature_metric: beta must be positive");
  const Eigen2 e = eigen_sym2(hessian);
  double a = beta * std::abs(e.l1), b = beta * std::abs(e.l2);
  if (clamp) {
    if (!(clamp->h_min > 0.0) || clamp->h_max < clamp->h_min)
      throw ParameterError("curvature_metric: need 0 < h_min <= h_max");
    const double lo = 1.0 / (clamp->h_max * clamp->h_max), hi = 1.0 / (clamp->h_min * clamp->h_min);
    a = std::clamp(a, lo, hi);
    b = std::clamp(b, lo, hi);
  }
  const Vec2 v1 = e.v1, v2{-v1.y, v1.x};
  return {a * v1.x * v1.x + b * v2.x * v2.x, a * v1.x * v1.y + b * v2.x * v2.y,
          a * v1.y * v1.y + b * v2.y * v2.y};
}

MetricField2 MetricField2::constant(const Metric2& m) {
  return MetricField2(Kind::constant, [m](const Vec2&) { return m; });
}

MetricField2 MetricField2::tangent(std::shared_ptr<const FitCache> fits, double h) {
  if (!(h > 0.0)) throw ParameterError("tangent metric field: h must be positive");
  return MetricField2(Kind::tangent, [fits = std::move(fits), h](const Vec2& p) {
    return tangent_metric(first_fundamental_form(gradient_at(fits->at(p), p)), h);
  });
}

MetricField2 MetricField2::curvature(std::shared_ptr<const FitCache> fits, double beta,
                                     std::optional<ClampBounds> clamp) {
  if (!(beta > 0.0)) throw ParameterError("curvature metric field: beta must be positive");
  return MetricField2(Kind::curvature, [fits = std::move(fits), beta, clamp](const Vec2& p) {
    return curvature_metric(hessian_at(fits->at(p), p), beta, clamp);
  });
}

MetricField2 MetricField2::from_function(Kind kind, std::function<Metric2(const Vec2&)> f) {
  return MetricField2(kind, std::move(f));
}

ComplexityResult metric_complexity(const MetricField2& field, const Rect2& domain, int resolution) {
  if (resolution < 1) throw ParameterError("metric_complexity: resolution must be >= 1");
  auto integrate = [&](int n) {
    const double hx = 2.0 * domain.half_extents.x / n, hy = 2.0 * domain.half_extents.y / n;
    double sum = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Vec2 q{-domain.half_extents.x + (i + 0.5) * hx, -domain.half_extents.y + (j + 0.5) * hy};
        sum += std::sqrt(std::max(0.0, field(domain.to_global(q)).det()));
      }
    return sum * hx * hy;
  };
  ComplexityResult r;
  int n = resolution;
  double prev = integrate(n);
  constexpr int kMaxLevels = 6;
  for (int level = 1; level <= kMaxLevels; ++level) {
    n *= 2;
    const double cur = integrate(n);
    r.value = cur;
    r.levels = level;
    r.resolution = n;
    const double scale = std::max(std::abs(cur), std::abs(prev));
    if (scale == 0.0 || std::abs(cur - prev) <= 0.01 * scale) {
      r.converged = true;
      return r;
    }
    prev = cur;
  }
  r.warning = "metric complexity did not reach 1% agreement after " + std::to_string(kMaxLevels) +
              " refinements";
  return r;
}

std::optional<double> beta_star(double n, double alpha, double c1) {
  if (!(n > 0.0) || !(alpha > 0.0)) throw ParameterError("beta_star: N and alpha must be positive");
  if (!(c1 > 0.0)) return std::nullopt;
  return n / (alpha * c1);
}

Quadrature1D gauss_legendre(int n) {
  if (n < 1) throw ParameterError("gauss_legendre: n must be >= 1");
  Quadrature1D q;
  q.x.resize(n);
  q.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Map [-1, 1] to [0, 1].
    q.x[i] = 0.5 * (1.0 - x);
    q.x[n - 1 - i] = 0.5 * (1.0 + x);
    q.w[i] = q.w[n - 1 - i] = 0.5 * w;
  }
  return q;
}

double edge_length_under_metric(const Vec2& p1, const Vec2& p2, const MetricField2& field, int points) {
  static const Quadrature1D q3 = gauss_legendre(3);
  const Quadrature1D q = points == 3 ? q3 : gauss_legendre(points);
  const Vec2 e = p2 - p1;
  double s = 0.0;
  for (std::size_t k = 0; k < q.x.size(); ++k)
    s += q.w[k] * std::sqrt(std::max(0.0, field(p1 + e * q.x[k]).quad(e)));
  return s;
}

}  // namespace ablmesh
