#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace ablmesh {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr bool operator==(const Vec2& o) const = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr bool operator==(const Vec3& o) const = default;

  constexpr Vec2 xy() const { return {x, y}; }
};

inline constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(b - a); }

inline constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(b - a); }

inline Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  return n > 0.0 ? a / n : a;
}

/// Symmetric 2x2 matrix [[m11, m12], [m12, m22]].
struct Sym2 {
  double m11 = 0.0;
  double m12 = 0.0;
  double m22 = 0.0;

  constexpr Sym2 operator*(double s) const { return {m11 * s, m12 * s, m22 * s}; }
  constexpr Sym2 operator+(const Sym2& o) const { return {m11 + o.m11, m12 + o.m12, m22 + o.m22}; }
  constexpr bool operator==(const Sym2& o) const = default;

  constexpr double det() const { return m11 * m22 - m12 * m12; }
  constexpr double trace() const { return m11 + m22; }
  /// e^T M e
  constexpr double quad(const Vec2& e) const { return m11 * e.x * e.x + 2.0 * m12 * e.x * e.y + m22 * e.y * e.y; }
  static constexpr Sym2 identity() { return {1.0, 0.0, 1.0}; }
};

/// Twice the signed area of (a, b, c); positive when counter-clockwise.
/// Falls back to quad precision when the double result is within its
/// rounding error bound.
double orient2d(const Vec2& a, const Vec2& b, const Vec2& c);

/// Positive when d lies strictly inside the circumcircle of the
/// counter-clockwise triangle (a, b, c).
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c);
double circumradius(const Vec2& a, const Vec2& b, const Vec2& c);

/// Smallest interior angle of a planar triangle, radians.
double min_angle(const Vec2& a, const Vec2& b, const Vec2& c);

/// Barycentric coordinates of p with respect to (a, b, c).
std::array<double, 3> barycentric(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p);

Vec2 closest_point_on_segment(const Vec2& a, const Vec2& b, const Vec2& p);

/// Axis-aligned bounding box in the plane.
struct Box2 {
  Vec2 lo{1e300, 1e300};
  Vec2 hi{-1e300, -1e300};

  void extend(const Vec2& p) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
  }
  bool empty() const { return lo.x > hi.x; }
  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  Vec2 center() const { return (lo + hi) * 0.5; }
};

/// Rotated rectangle: center, half extents along its local axes and the
/// rotation of the local x axis from the global x axis (radians).
struct Rect2 {
  Vec2 center;
  Vec2 half_extents;
  double angle = 0.0;

  Vec2 to_local(const Vec2& p) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const Vec2 d = p - center;
    return {c * d.x + s * d.y, -s * d.x + c * d.y};
  }
  Vec2 to_global(const Vec2& q) const {
    const double c = std::cos(angle), s = std::sin(angle);
    return {center.x + c * q.x - s * q.y, center.y + s * q.x + c * q.y};
  }
  bool contains(const Vec2& p, double tol = 0.0) const {
    const Vec2 q = to_local(p);
    return std::abs(q.x) <= half_extents.x + tol && std::abs(q.y) <= half_extents.y + tol;
  }
  double area() const { return 4.0 * half_extents.x * half_extents.y; }
  std::array<Vec2, 4> corners() const {
    const Vec2 h = half_extents;
    return {to_global({-h.x, -h.y}), to_global({h.x, -h.y}), to_global({h.x, h.y}),
            to_global({-h.x, h.y})};
  }
};

/// Ellipse with semi-axes along a rotated frame.
struct Ellipse2 {
  Vec2 center;
  Vec2 semi_axes;
  double angle = 0.0;

  /// Normalized radius: 1 on the ellipse, < 1 inside.
  double radius_of(const Vec2& p) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const Vec2 d = p - center;
    const double u = (c * d.x + s * d.y) / semi_axes.x;
    const double v = (-s * d.x + c * d.y) / semi_axes.y;
    return std::hypot(u, v);
  }
  bool contains(const Vec2& p, double tol = 0.0) const { return radius_of(p) <= 1.0 + tol; }
  Vec2 point_at(double theta) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = semi_axes.x * std::cos(theta), v = semi_axes.y * std::sin(theta);
    return {center.x + c * u - s * v, center.y + s * u + c * v};
  }
  double area() const { return M_PI * semi_axes.x * semi_axes.y; }
};

}  // namespace ablmesh
