#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include <random>
#include <sstream>

#include "ablmesh/exchange.hpp"
#include "ablmesh/harness.hpp"
#include "ablmesh/meshio.hpp"
#include "ablmesh/optim.hpp"
#include "ablmesh/quality.hpp"
#include "ablmesh/surfmesh.hpp"
#include "ablmesh/sweep.hpp"
#include "ablmesh/terrain.hpp"

using namespace ablmesh;

namespace {

std::shared_ptr<const TerrainModel> gaussian_terrain() {
  static const auto t = std::make_shared<const TerrainModel>(sample_terrain(
      analytic_terrain("gaussian").height, Box2{{-9, -9}, {9, 9}}, Box2{{-2.2, -2.2}, {2.2, 2.2}}, 0.0125, 0.1));
  return t;
}

RegionLayout gaussian_layout(double h) {
  return build_region_layout(Rect2{{0, 0}, {2, 2}, 0.0}, kDefaultTransitionFactor, kDefaultBufferFactor, h, 4 * h,
                             gaussian_terrain().get());
}

const TriSurfaceMesh& gaussian_surface() {
  static const auto m = uniform_surface(*gaussian_terrain(), gaussian_layout(0.2), 0.2);
  return m;
}

PrismLayerMesh gaussian_prisms() {
  SweepParams p;
  p.h0 = 0.01;
  p.z_bl = 0.3;
  p.optimize = false;
  return sweep_sbl(gaussian_surface(), p);
}

}  // namespace

static void BM_ShapeDistortion3(benchmark::State& st) {
  Eigen::Matrix3d j;
  j << 1.1, 0.2, -0.1, 0.05, 0.9, 0.3, 0.0, -0.2, 1.3;
  for (auto _ : st) benchmark::DoNotOptimize(shape_distortion(j));
}
BENCHMARK(BM_ShapeDistortion3);

static void BM_PrismDistortion(benchmark::State& st) {
  const std::array<Vec3, 3> base{{{0, 0, 0}, {1, 0, 0.1}, {0.4, 0.9, 0}}};
  const auto ideal = IdealElement::prism(base, 0.3);
  const std::vector<Vec3> p{{0, 0, 0}, {1, 0, 0.1}, {0.4, 0.9, 0}, {0.02, 0, 0.3}, {1, 0.01, 0.4}, {0.4, 0.9, 0.32}};
  for (auto _ : st) benchmark::DoNotOptimize(elem_distortion(p, ideal));
}
BENCHMARK(BM_PrismDistortion);

static void BM_CubicFit(benchmark::State& st) {
  const auto t = gaussian_terrain();
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (auto _ : st) benchmark::DoNotOptimize(fit_local_polynomial(*t, {u(rng), u(rng)}, 3));
}
BENCHMARK(BM_CubicFit);

static void BM_UniformSurface(benchmark::State& st) {
  const double h = 0.8 / st.range(0);
  const auto layout = gaussian_layout(h);
  for (auto _ : st) benchmark::DoNotOptimize(uniform_surface(*gaussian_terrain(), layout, h));
}
BENCHMARK(BM_UniformSurface)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_AdaptSurface(benchmark::State& st) {
  const double h = 0.8 / st.range(0);
  const auto layout = gaussian_layout(h);
  AdaptOptions o;
  o.optimize = false;
  for (auto _ : st) benchmark::DoNotOptimize(adapt_surface(gaussian_terrain(), layout, h, h / 4, o));
}
BENCHMARK(BM_AdaptSurface)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_SurfaceOptimizeSweep(benchmark::State& st) {
  OptimizerSettings s;
  s.sweeps_max = 1;
  for (auto _ : st) {
    st.PauseTiming();
    auto m = gaussian_surface();
    st.ResumeTiming();
    benchmark::DoNotOptimize(optimize_surface(m, *gaussian_terrain(), s));
  }
}
BENCHMARK(BM_SurfaceOptimizeSweep)->Unit(benchmark::kMillisecond);

static void BM_SweepSbl(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(gaussian_prisms());
}
BENCHMARK(BM_SweepSbl)->Unit(benchmark::kMillisecond);

static void BM_VolumeFunctional(benchmark::State& st) {
  const auto pl = gaussian_prisms();
  for (auto _ : st) benchmark::DoNotOptimize(mesh_distortion_functional(pl.mesh));
  st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(pl.mesh.element_count()));
}
BENCHMARK(BM_VolumeFunctional)->Unit(benchmark::kMillisecond);

static void BM_ExchangeWrite(benchmark::State& st) {
  const auto pl = gaussian_prisms();
  const auto doc = to_exchange(pl.mesh);
  for (auto _ : st) {
    std::ostringstream os;
    write_exchange(doc, os);
    benchmark::DoNotOptimize(os.str().size());
  }
}
BENCHMARK(BM_ExchangeWrite)->Unit(benchmark::kMillisecond);

static void BM_ExchangeRead(benchmark::State& st) {
  std::ostringstream os;
  write_exchange(to_exchange(gaussian_prisms().mesh), os);
  const std::string text = os.str();
  for (auto _ : st) {
    std::istringstream is(text);
    benchmark::DoNotOptimize(read_exchange(is));
  }
  st.SetBytesProcessed(st.iterations() * static_cast<int64_t>(text.size()));
}
BENCHMARK(BM_ExchangeRead)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
