#pragma once

#include <array>
#include <vector>

#include "ablmesh/geometry.hpp"

namespace ablmesh {

/// Uniform bucket grid over the planar bounding boxes of a triangle set.
/// Holds copies of the geometry so it stays valid independently of the
/// caller's containers.
class TriangleLocator {
 public:
  TriangleLocator() = default;
  TriangleLocator(std::vector<Vec2> points, std::vector<std::array<int, 3>> triangles);

  /// Index of a triangle containing p (closed), or -1. Points within
  /// tol * local edge scale of an edge are accepted.
  int locate(const Vec2& p, double tol = 1e-12) const;

  /// All triangles whose closure contains p.
  std::vector<int> locate_all(const Vec2& p, double tol = 1e-12) const;

  const Box2& bounds() const { return box_; }
  bool empty() const { return tris_.empty(); }

 private:
  int cell_of(double v, double lo, int n) const;
  bool inside(int t, const Vec2& p, double tol) const;

  std::vector<Vec2> pts_;
  std::vector<std::array<int, 3>> tris_;
  Box2 box_;
  int nx_ = 0;
  int ny_ = 0;
  double cell_ = 1.0;
  std::vector<int> start_;  // CSR offsets into items_
  std::vector<int> items_;
};

}  // namespace ablmesh
