#include "ablmesh/terrain.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "ablmesh/error.hpp"
#include "ablmesh/exchange.hpp"
#include "ablmesh/planar_triangulation.hpp"

namespace ablmesh {

namespace {

std::vector<Vec2> planar(const std::vector<Vec3>& nodes) {
  std::vector<Vec2> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(n.xy());
  return out;
}

std::string coord_text(double x, double y) {
  std::ostringstream ss;
  ss.precision(17);
  ss << "(" << x << ", " << y << ")";
  return ss.str();
}

}  // namespace

TerrainModel::TerrainModel(std::vector<Vec3> nodes, std::vector<std::array<int, 3>> triangles)
    : nodes_(std::move(nodes)), tris_(std::move(triangles)) {
  if (nodes_.size() < 3 || tris_.empty()) throw InputError("terrain: need at least one triangle");
  for (const auto& n : nodes_)
    if (!std::isfinite(n.x) || !std::isfinite(n.y) || !std::isfinite(n.z))
      throw InputError("terrain: non-finite coordinate");
  node_tris_.assign(nodes_.size(), {});
  std::map<std::pair<int, int>, int> directed;
  for (std::size_t t = 0; t < tris_.size(); ++t) {
    const auto& v = tris_[t];
    for (int k : v)
      if (k < 0 || k >= static_cast<int>(nodes_.size()))
        throw InputError("terrain: triangle " + std::to_string(t) + " references a missing node");
    const double area = orient2d(nodes_[v[0]].xy(), nodes_[v[1]].xy(), nodes_[v[2]].xy());
    if (!(area > 0.0))
      throw InputError("terrain: triangle " + std::to_string(t) +
                       " is not counter-clockwise with positive planar area (non-graph input)");
    for (int k = 0; k < 3; ++k) {
      node_tris_[v[k]].push_back(static_cast<int>(t));
      if (++directed[{v[k], v[(k + 1) % 3]}] > 1)
        throw InputError("terrain: edge repeated with the same orientation (overlap in plan view)");
    }
  }
  for (const auto& [e, n] : directed)
    if (!directed.count({e.second, e.first})) boundary_.push_back({e.first, e.second});

  locator_ = TriangleLocator(planar(nodes_), tris_);
  for (std::size_t t = 0; t < tris_.size(); ++t) {
    const auto& v = tris_[t];
    const Vec2 c = (nodes_[v[0]].xy() + nodes_[v[1]].xy() + nodes_[v[2]].xy()) / 3.0;
    if (locator_.locate_all(c, 0.0).size() != 1)
      throw InputError("terrain: triangles overlap in plan view near " + coord_text(c.x, c.y) +
                       " (non-graph input)");
  }
  zmin_ = zmax_ = nodes_[0].z;
  for (const auto& n : nodes_) {
    zmin_ = std::min(zmin_, n.z);
    zmax_ = std::max(zmax_, n.z);
  }
}

double TerrainModel::height_at(const Vec2& p) const {
  const int t = locate(p);
  if (t < 0) {
    throw OutOfDomainError("terrain: point " + coord_text(p.x, p.y) + " outside the domain", p,
                           closest_boundary_point(p));
  }
  const auto& v = tris_[t];
  const Vec3 &a = nodes_[v[0]], &b = nodes_[v[1]], &c = nodes_[v[2]];
  const auto l = barycentric(a.xy(), b.xy(), c.xy(), p);
  return l[0] * a.z + l[1] * b.z + l[2] * c.z;
}

Vec2 TerrainModel::closest_boundary_point(const Vec2& p) const {
  Vec2 best = nodes_[boundary_.front()[0]].xy();
  double bd = distance(best, p);
  for (const auto& e : boundary_) {
    const Vec2 q = closest_point_on_segment(nodes_[e[0]].xy(), nodes_[e[1]].xy(), p);
    const double d = distance(q, p);
    if (d < bd) {
      bd = d;
      best = q;
    }
  }
  return best;
}

TerrainModel terrain_from_grid(const std::vector<Vec3>& s) {
  if (s.size() < 4) throw InputError("height grid: need at least 2x2 samples");
  std::size_t nx = 1;
  while (nx < s.size() && s[nx].y == s[0].y) ++nx;
  if (nx < 2 || s.size() % nx != 0) throw InputError("height grid: rows of unequal length");
  const std::size_t ny = s.size() / nx;
  if (ny < 2) throw InputError("height grid: need at least two rows");
  const double dx = s[1].x - s[0].x;
  const double dy = s[nx].y - s[0].y;
  if (dx == 0.0 || dy == 0.0) throw InputError("height grid: zero spacing");
  const double tol = 1e-6;
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const Vec3& p = s[j * nx + i];
      if (!std::isfinite(p.z)) throw InputError("height grid: non-finite height at " + coord_text(p.x, p.y));
      const double ex = s[0].x + dx * static_cast<double>(i);
      const double ey = s[0].y + dy * static_cast<double>(j);
      if (std::abs(p.x - ex) > tol * std::abs(dx) * (1.0 + i) ||
          std::abs(p.y - ey) > tol * std::abs(dy) * (1.0 + j))
        throw InputError("height grid: spacing is not uniform at " + coord_text(p.x, p.y));
    }
  }
  std::vector<std::array<int, 3>> tris;
  tris.reserve(2 * (nx - 1) * (ny - 1));
  const bool ccw = dx * dy > 0.0;
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const int a = static_cast<int>(j * nx + i);  // lowest-index corner
      const int b = a + 1;
      const int c = static_cast<int>((j + 1) * nx + i + 1);
      const int d = c - 1;
      if (ccw) {
        tris.push_back({a, b, c});
        tris.push_back({a, c, d});
      } else {
        tris.push_back({a, c, b});
        tris.push_back({a, d, c});
      }
    }
  }
  return TerrainModel(s, std::move(tris));
}

TerrainModel terrain_from_cloud(const std::vector<Vec3>& samples) {
  std::map<std::pair<double, double>, double> seen;
  std::vector<Vec3> pts;
  pts.reserve(samples.size());
  for (const auto& p : samples) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
      throw InputError("point cloud: non-finite coordinate");
    auto [it, fresh] = seen.emplace(std::make_pair(p.x, p.y), p.z);
    if (!fresh) {
      if (it->second != p.z)
        throw InputError("point cloud: conflicting heights at " + coord_text(p.x, p.y));
      continue;
    }
    pts.push_back(p);
  }
  if (pts.size() < 3) throw InputError("point cloud: need at least 3 distinct points");
  const PlanarMesh m = PlanarTriangulation::delaunay(planar(pts));
  return TerrainModel(std::move(pts), m.triangles);
}

TerrainModel terrain_from_function(const std::function<double(double, double)>& f,
                                   const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() < 2 || ys.size() < 2) throw ParameterError("terrain_from_function: need 2x2 samples");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw ParameterError("terrain_from_function: xs not increasing");
  for (std::size_t j = 1; j < ys.size(); ++j)
    if (!(ys[j] > ys[j - 1])) throw ParameterError("terrain_from_function: ys not increasing");
  const int nx = static_cast<int>(xs.size()), ny = static_cast<int>(ys.size());
  std::vector<Vec3> s;
  s.reserve(xs.size() * ys.size());
  for (double y : ys)
    for (double x : xs) s.push_back({x, y, f(x, y)});
  std::vector<std::array<int, 3>> tris;
  tris.reserve(2 * static_cast<std::size_t>(nx - 1) * (ny - 1));
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) {
      const int a = j * nx + i, b = a + 1, c = a + nx + 1, d = c - 1;
      tris.push_back({a, b, c});
      tris.push_back({a, c, d});
    }
  return TerrainModel(std::move(s), std::move(tris));
}

TerrainModel terrain_from_function(const std::function<double(double, double)>& f, const Box2& box,
                                   int nx, int ny) {
  if (nx < 1 || ny < 1 || box.empty()) throw ParameterError("terrain_from_function: bad grid");
  std::vector<double> xs(nx + 1), ys(ny + 1);
  for (int i = 0; i <= nx; ++i) xs[i] = i == nx ? box.hi.x : box.lo.x + box.width() * i / nx;
  for (int j = 0; j <= ny; ++j) ys[j] = j == ny ? box.hi.y : box.lo.y + box.height() * j / ny;
  return terrain_from_function(f, xs, ys);
}

namespace {

std::vector<Vec3> read_triples(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open '" + path.string() + "'");
  std::vector<Vec3> out;
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::string tok[3], extra;
    if (!(ss >> tok[0] >> tok[1] >> tok[2]) || (ss >> extra))
      throw ParseError(path.string(), n, "expected 'x y z'");
    double v[3];
    for (int k = 0; k < 3; ++k) {
      const auto [p, ec] = std::from_chars(tok[k].data(), tok[k].data() + tok[k].size(), v[k]);
      if (ec != std::errc() || p != tok[k].data() + tok[k].size())
        throw ParseError(path.string(), n, "invalid number '" + tok[k] + "'");
    }
    out.push_back({v[0], v[1], v[2]});
  }
  return out;
}

}  // namespace

TerrainModel load_terrain(const std::filesystem::path& path, TerrainFormat format) {
  switch (format) {
    case TerrainFormat::height_grid: return terrain_from_grid(read_triples(path));
    case TerrainFormat::point_cloud: return terrain_from_cloud(read_triples(path));
    case TerrainFormat::triangle_mesh: {
      ExchangeDocument doc = read_exchange(path);
      if (doc.triangles.empty()) throw InputError("'" + path.string() + "' has no triangles");
      return TerrainModel(std::move(doc.nodes), std::move(doc.triangles));
    }
  }
  throw ParameterError("load_terrain: unknown format");
}

// ---------------------------------------------------------------------------
// Local polynomial fits

namespace {

// Exponent pairs (i, j) in storage order.
std::vector<std::array<int, 2>> exponents(int q) {
  std::vector<std::array<int, 2>> e;
  for (int d = 0; d <= q; ++d)
    for (int j = 0; j <= d; ++j) e.push_back({d - j, j});
  return e;
}

double ipow(double x, int n) {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}

}  // namespace

double PolyFit::coefficient(int i, int j) const {
  const int d = i + j;
  if (i < 0 || j < 0 || d > degree) return 0.0;
  return coefficients[static_cast<std::size_t>(d * (d + 1) / 2 + j)];
}

double PolyFit::value(const Vec2& p) const {
  const double dx = p.x - center.x, dy = p.y - center.y;
  double s = 0.0;
  std::size_t k = 0;
  for (int d = 0; d <= degree; ++d)
    for (int j = 0; j <= d; ++j) s += coefficients[k++] * ipow(dx, d - j) * ipow(dy, j);
  return s;
}

Vec2 gradient_at(const PolyFit& fit, const Vec2& p) {
  const double dx = p.x - fit.center.x, dy = p.y - fit.center.y;
  Vec2 g;
  std::size_t k = 0;
  for (int d = 0; d <= fit.degree; ++d)
    for (int j = 0; j <= d; ++j) {
      const int i = d - j;
      const double a = fit.coefficients[k++];
      if (i > 0) g.x += a * i * ipow(dx, i - 1) * ipow(dy, j);
      if (j > 0) g.y += a * j * ipow(dx, i) * ipow(dy, j - 1);
    }
  return g;
}

Sym2 hessian_at(const PolyFit& fit, const Vec2& p) {
  const double dx = p.x - fit.center.x, dy = p.y - fit.center.y;
  Sym2 h;
  std::size_t k = 0;
  for (int d = 0; d <= fit.degree; ++d)
    for (int j = 0; j <= d; ++j) {
      const int i = d - j;
      const double a = fit.coefficients[k++];
      if (i > 1) h.m11 += a * i * (i - 1) * ipow(dx, i - 2) * ipow(dy, j);
      if (i > 0 && j > 0) h.m12 += a * i * j * ipow(dx, i - 1) * ipow(dy, j - 1);
      if (j > 1) h.m22 += a * j * (j - 1) * ipow(dx, i) * ipow(dy, j - 2);
    }
  return h;
}

PolyFit fit_local_polynomial(const TerrainModel& t, const Vec2& p, int degree, int layers) {
  if (degree < 1) throw ParameterError("fit_local_polynomial: degree must be >= 1");
  const int container = t.locate(p);
  if (container < 0)
    throw OutOfDomainError("fit_local_polynomial: point " + coord_text(p.x, p.y) + " outside the domain",
                           p, t.closest_boundary_point(p));
  if (layers < 0) layers = degree;
  const int need = poly_term_count(degree);
  const auto& nodes = t.nodes();
  const auto& tris = t.triangles();
  const auto& ntri = t.node_triangles();

  // Ring 0: the container's vertices. Each further ring adds every vertex of
  // a triangle touching the current set.
  std::vector<int> pts;
  std::unordered_set<int> in_set;
  std::unordered_set<int> tri_set;
  std::vector<int> start = t.locate_all(p);
  if (start.empty()) start.push_back(container);
  for (int c : start) {
    tri_set.insert(c);
    for (int v : tris[c])
      if (in_set.insert(v).second) pts.push_back(v);
  }
  std::size_t frontier_begin = 0;
  auto grow = [&]() {
    const std::size_t end = pts.size();
    for (std::size_t k = frontier_begin; k < end; ++k)
      for (int tt : ntri[pts[k]]) {
        tri_set.insert(tt);
        for (int v : tris[tt])
          if (in_set.insert(v).second) pts.push_back(v);
      }
    frontier_begin = end;
    return pts.size() > end;
  };
  for (int l = 0; l < layers; ++l) grow();
  while (static_cast<int>(pts.size()) < need)
    if (!grow()) break;

  const auto ex = exponents(degree);
  for (int attempt = 0;; ++attempt) {
    if (static_cast<int>(pts.size()) >= need) {
      // Local mean edge length of the gathered triangles.
      double len = 0.0;
      int ne = 0;
      for (int tt : tri_set)
        for (int k = 0; k < 3; ++k) {
          len += distance(nodes[tris[tt][k]].xy(), nodes[tris[tt][(k + 1) % 3]].xy());
          ++ne;
        }
      const double scale = len / ne;
      Eigen::MatrixXd A(pts.size(), need);
      Eigen::VectorXd b(pts.size());
      double rmax = 0.0;
      for (std::size_t r = 0; r < pts.size(); ++r) {
        const Vec3& q = nodes[pts[r]];
        const double u = (q.x - p.x) / scale, v = (q.y - p.y) / scale;
        rmax = std::max(rmax, std::hypot(q.x - p.x, q.y - p.y));
        for (int c = 0; c < need; ++c) A(r, c) = ipow(u, ex[c][0]) * ipow(v, ex[c][1]);
        b(r) = q.z;
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
      qr.setThreshold(1e-10);
      if (qr.rank() == need) {
        const Eigen::VectorXd x = qr.solve(b);
        PolyFit fit;
        fit.degree = degree;
        fit.center = p;
        fit.support_count = static_cast<int>(pts.size());
        fit.support_radius = 2.0 * rmax;
        fit.coefficients.resize(need);
        for (int c = 0; c < need; ++c) fit.coefficients[c] = x(c) / ipow(scale, ex[c][0] + ex[c][1]);
        return fit;
      }
    }
    if (attempt >= 8 || !grow())
      throw DegenerateFitError("fit_local_polynomial: rank-deficient system at " + coord_text(p.x, p.y) +
                               " with " + std::to_string(pts.size()) + " support points");
  }
}

std::size_t FitCache::size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

const PolyFit& FitCache::at(const Vec2& p) const {
  const int t = terrain_->locate(p);
  if (t < 0)
    throw OutOfDomainError("fit cache: point " + coord_text(p.x, p.y) + " outside the domain", p,
                           terrain_->closest_boundary_point(p));
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(t);
    if (it != cache_.end()) return it->second;
  }
  const auto& v = terrain_->triangles()[t];
  const auto& n = terrain_->nodes();
  const Vec2 c = (n[v[0]].xy() + n[v[1]].xy() + n[v[2]].xy()) / 3.0;
  PolyFit fit;
  try {
    fit = fit_local_polynomial(*terrain_, c, degree_);
  } catch (const DegenerateFitError&) {
    fit = fit_local_polynomial(*terrain_, c, 1);
  }
  std::lock_guard lock(mutex_);
  // Node-based map: references survive later insertions.
  return cache_.emplace(t, std::move(fit)).first->second;
}

}  // namespace ablmesh
