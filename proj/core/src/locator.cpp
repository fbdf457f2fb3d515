#include "ablmesh/locator.hpp"

#include <algorithm>
#include <cmath>

namespace ablmesh {

TriangleLocator::TriangleLocator(std::vector<Vec2> points, std::vector<std::array<int, 3>> triangles)
    : pts_(std::move(points)), tris_(std::move(triangles)) {
  if (tris_.empty()) return;
  for (const auto& t : tris_)
    for (int v : t) box_.extend(pts_[v]);
  const double w = std::max(box_.width(), 1e-300), h = std::max(box_.height(), 1e-300);
  // About one triangle per bucket.
  cell_ = std::sqrt(w * h / static_cast<double>(tris_.size()));
  if (!(cell_ > 0.0)) cell_ = std::max(w, h);
  nx_ = std::clamp(static_cast<int>(std::ceil(w / cell_)), 1, 4096);
  ny_ = std::clamp(static_cast<int>(std::ceil(h / cell_)), 1, 4096);
  cell_ = std::max(w / nx_, h / ny_);
  nx_ = std::max(1, static_cast<int>(std::ceil(w / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil(h / cell_)));

  std::vector<int> count(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
  auto range = [&](const std::array<int, 3>& t, int& i0, int& i1, int& j0, int& j1) {
    Box2 b;
    for (int v : t) b.extend(pts_[v]);
    i0 = cell_of(b.lo.x, box_.lo.x, nx_);
    i1 = cell_of(b.hi.x, box_.lo.x, nx_);
    j0 = cell_of(b.lo.y, box_.lo.y, ny_);
    j1 = cell_of(b.hi.y, box_.lo.y, ny_);
  };
  for (const auto& t : tris_) {
    int i0, i1, j0, j1;
    range(t, i0, i1, j0, j1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) ++count[j * nx_ + i + 1];
  }
  for (std::size_t k = 1; k < count.size(); ++k) count[k] += count[k - 1];
  start_ = count;
  items_.resize(count.back());
  for (std::size_t t = 0; t < tris_.size(); ++t) {
    int i0, i1, j0, j1;
    range(tris_[t], i0, i1, j0, j1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) items_[count[j * nx_ + i]++] = static_cast<int>(t);
  }
}

int TriangleLocator::cell_of(double v, double lo, int n) const {
  return std::clamp(static_cast<int>(std::floor((v - lo) / cell_)), 0, n - 1);
}

bool TriangleLocator::inside(int t, const Vec2& p, double tol) const {
  const auto& v = tris_[t];
  const Vec2 a = pts_[v[0]], b = pts_[v[1]], c = pts_[v[2]];
  const double o1 = orient2d(a, b, p), o2 = orient2d(b, c, p), o3 = orient2d(c, a, p);
  if (o1 >= 0.0 && o2 >= 0.0 && o3 >= 0.0) return true;
  if (tol <= 0.0) return false;
  // Relative slack: orient is twice the area, scale by edge length.
  const double s = tol * std::max({dot(b - a, b - a), dot(c - b, c - b), dot(a - c, a - c)});
  return o1 >= -s && o2 >= -s && o3 >= -s;
}

int TriangleLocator::locate(const Vec2& p, double tol) const {
  if (tris_.empty()) return -1;
  const double slack = cell_ * 1e-9;
  if (p.x < box_.lo.x - slack || p.x > box_.hi.x + slack || p.y < box_.lo.y - slack ||
      p.y > box_.hi.y + slack)
    return -1;
  const int i = cell_of(p.x, box_.lo.x, nx_), j = cell_of(p.y, box_.lo.y, ny_);
  const int k = j * nx_ + i;
  for (int n = start_[k]; n < start_[k + 1]; ++n)
    if (inside(items_[n], p, 0.0)) return items_[n];
  if (tol > 0.0)
    for (int n = start_[k]; n < start_[k + 1]; ++n)
      if (inside(items_[n], p, tol)) return items_[n];
  return -1;
}

std::vector<int> TriangleLocator::locate_all(const Vec2& p, double tol) const {
  std::vector<int> out;
  if (tris_.empty()) return out;
  const int i = cell_of(p.x, box_.lo.x, nx_), j = cell_of(p.y, box_.lo.y, ny_);
  const int k = j * nx_ + i;
  for (int n = start_[k]; n < start_[k + 1]; ++n)
    if (inside(items_[n], p, tol)) out.push_back(items_[n]);
  return out;
}

}  // namespace ablmesh
