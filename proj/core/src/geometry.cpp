#include "ablmesh/geometry.hpp"

#include <algorithm>
#include <limits>

namespace ablmesh {

namespace {

using quad = __float128;

constexpr double kEps = std::numeric_limits<double>::epsilon();

}  // namespace

double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double l = (a.x - c.x) * (b.y - c.y);
  const double r = (a.y - c.y) * (b.x - c.x);
  const double det = l - r;
  const double bound = 3.4 * kEps * (std::abs(l) + std::abs(r));
  if (std::abs(det) > bound) return det;
  const quad qx = static_cast<quad>(a.x) - c.x;
  const quad qy = static_cast<quad>(b.y) - c.y;
  const quad rx = static_cast<quad>(a.y) - c.y;
  const quad ry = static_cast<quad>(b.x) - c.x;
  return static_cast<double>(qx * qy - rx * ry);
}

double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  const double t1 = bdx * cdy - cdx * bdy;
  const double t2 = cdx * ady - adx * cdy;
  const double t3 = adx * bdy - bdx * ady;
  const double det = alift * t1 + blift * t2 + clift * t3;
  const double perm = alift * (std::abs(bdx * cdy) + std::abs(cdx * bdy)) +
                      blift * (std::abs(cdx * ady) + std::abs(adx * cdy)) +
                      clift * (std::abs(adx * bdy) + std::abs(bdx * ady));
  if (std::abs(det) > 11.0 * kEps * perm) return det;
  const quad qadx = static_cast<quad>(a.x) - d.x, qady = static_cast<quad>(a.y) - d.y;
  const quad qbdx = static_cast<quad>(b.x) - d.x, qbdy = static_cast<quad>(b.y) - d.y;
  const quad qcdx = static_cast<quad>(c.x) - d.x, qcdy = static_cast<quad>(c.y) - d.y;
  const quad qa = qadx * qadx + qady * qady;
  const quad qb = qbdx * qbdx + qbdy * qbdy;
  const quad qc = qcdx * qcdx + qcdy * qcdy;
  const quad q = qa * (qbdx * qcdy - qcdx * qbdy) + qb * (qcdx * qady - qadx * qcdy) +
                 qc * (qadx * qbdy - qbdx * qady);
  return static_cast<double>(q);
}

Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 ba = b - a, ca = c - a;
  const double bl = dot(ba, ba), cl = dot(ca, ca);
  const double d = 2.0 * cross(ba, ca);
  return {a.x + (ca.y * bl - ba.y * cl) / d, a.y + (ba.x * cl - ca.x * bl) / d};
}

double circumradius(const Vec2& a, const Vec2& b, const Vec2& c) {
  return distance(circumcenter(a, b, c), a);
}

double min_angle(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double la = distance(b, c), lb = distance(a, c), lc = distance(a, b);
  // The smallest angle faces the shortest edge.
  double s = la, p = lb, q = lc;
  if (lb < s) std::swap(s, p);
  if (lc < s) std::swap(s, q);
  const double cosv = std::clamp((p * p + q * q - s * s) / (2.0 * p * q), -1.0, 1.0);
  return std::acos(cosv);
}

std::array<double, 3> barycentric(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  const double area = cross(b - a, c - a);
  const double l1 = cross(c - b, p - b) / area;
  const double l2 = cross(a - c, p - c) / area;
  return {l1, l2, 1.0 - l1 - l2};
}

Vec2 closest_point_on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + ab * t;
}

}  // namespace ablmesh
