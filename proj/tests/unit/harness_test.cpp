#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ablmesh/error.hpp"
#include "ablmesh/harness.hpp"
#include "test_meshes.hpp"

using namespace ablmesh;
using namespace ablmesh::testing;

namespace {

const Rect2 kUnit{{0.5, 0.5}, {0.5, 0.5}, 0.0};

RunConfig small_flat_config() {
  RunConfig c;
  c.terrain = "analytic:flat";
  c.farm_hx = c.farm_hy = 1.0;
  c.h_max = 0.5;
  c.h_min = 0.25;
  c.h_buffer = 1.0;
  c.h0 = 0.1;
  c.z_bl = 0.5;
  c.z_top = 4.0;
  c.h2 = 1.0;
  c.optimizer.sweeps_max = 1;
  return c;
}

}  // namespace

TEST(GeometryError, FlatAndLinearTruthAreExact) {
  const auto flat = grid_surface(6, 1.0 / 6, [](double, double) { return 2.0; });
  EXPECT_LT(geometry_l2_error(flat, [](double, double) { return 2.0; }, kUnit).error, 1e-14);
  const auto lin = [](double x, double y) { return 0.3 * x - 1.7 * y + 0.25; };
  const auto plane = grid_surface(7, 1.0 / 7, lin, true);
  const auto e = geometry_l2_error(plane, lin, kUnit);
  EXPECT_LT(e.error, 1e-14);
  EXPECT_NEAR(e.farm_area, 1.0, 1e-12);
  EXPECT_NEAR(e.expected_area, 1.0, 1e-12);
  EXPECT_TRUE(e.warning.empty());
}

TEST(GeometryError, QuadraticClosedFormAndHalving) {
  // On a uniform grid the interpolation error of x^2 is (x - x_i)(x_{i+1} - x)
  // per column, so the L2 norm over the unit square is h^2 / sqrt(30).
  const auto sq = [](double x, double) { return x * x; };
  std::vector<double> err;
  for (int n : {4, 8, 16}) {
    const double h = 1.0 / n;
    const double e = geometry_l2_error(grid_surface(n, h, sq), sq, kUnit).error;
    EXPECT_NEAR(e, h * h / std::sqrt(30.0), 1e-12);
    err.push_back(e);
  }
  EXPECT_NEAR(err[0] / err[1], 4.0, 0.6);
  EXPECT_NEAR(err[1] / err[2], 4.0, 0.6);
}

TEST(GeometryError, PartialCoverageWarns) {
  auto m = grid_surface(4, 0.25, [](double, double) { return 0.0; });
  m.region.back() = Region::transition;
  const auto e = geometry_l2_error(m, [](double, double) { return 0.0; }, kUnit);
  EXPECT_FALSE(e.warning.empty());
}

TEST(LogLogSlope, PowerLaw) {
  EXPECT_NEAR(loglog_slope({1, 2, 4, 8}, {3, 12, 48, 192}), 2.0, 1e-12);
  EXPECT_NEAR(loglog_slope({0.1, 0.2, 0.3}, {0.5, 0.5, 0.5}), 0.0, 1e-12);
}

TEST(AnalyticTerrain, Names) {
  for (const auto& n : analytic_terrain_names()) EXPECT_EQ(analytic_terrain(n).name, n);
  EXPECT_EQ(analytic_terrain("paraboloid").height(1.0, 2.0), 2.5);
  EXPECT_EQ(analytic_terrain("gaussian").height(0.0, 0.0), 1.0);
  EXPECT_NEAR(analytic_terrain("scarp").height(1.0, 0.0), 0.5, 1e-8);
  EXPECT_THROW(analytic_terrain("volcano"), ParameterError);
}

TEST(SampleTerrain, FineInsideCoarseOutside) {
  Box2 dom, fine;
  dom.extend({-4, -4});
  dom.extend({4, 4});
  fine.extend({-1, -1});
  fine.extend({1, 1});
  const auto f = [](double x, double y) { return x * x + y * y; };
  const auto t = sample_terrain(f, dom, fine, 0.1, 1.0);
  EXPECT_NEAR(t.height_at({0.05, 0.05}), 0.005, 0.01);
  EXPECT_NEAR(t.height_at({4.0, 4.0}), 32.0, 1e-12);
  EXPECT_NEAR(t.height_at({-4.0, 1.0}), 17.0, 1e-12);
}

TEST(StructuredEstimate, EllipseAreaOverCellArea) {
  const auto layout = build_region_layout(kUnit, kDefaultTransitionFactor, kDefaultBufferFactor, 0.1, 0.4);
  const auto e = structured_node_estimate(layout, 10);
  EXPECT_NEAR(e.surface_nodes, layout.buffer.area() / 0.01, 1e-9);
  EXPECT_NEAR(e.nodes, 10 * e.surface_nodes, 1e-9);
  EXPECT_THROW(structured_node_estimate(layout, 1), ParameterError);
}

TEST(RunConfig, ParsesKeyValueText) {
  RunConfig c;
  apply_config_text(c,
                    "# comment line\n"
                    "hmax = 0.3   # trailing comment\n"
                    "\n"
                    "hmin=0.1\n"
                    "adapt = off\n"
                    "zbl = 12.5\n"
                    "terrain = analytic:ridges\n"
                    "seed = 42\n");
  EXPECT_EQ(c.h_max, 0.3);
  EXPECT_EQ(c.h_min, 0.1);
  EXPECT_FALSE(c.adapt);
  ASSERT_TRUE(c.z_bl.has_value());
  EXPECT_EQ(*c.z_bl, 12.5);
  EXPECT_EQ(c.terrain, "analytic:ridges");
  EXPECT_EQ(c.seed, 42u);
  apply_config_text(c, "zbl = auto\n");
  EXPECT_FALSE(c.z_bl.has_value());
}

TEST(RunConfig, ErrorsCarryLineNumbers) {
  RunConfig c;
  try {
    apply_config_text(c, "hmax = 0.3\nbogus = 1\n", "run.cfg");
    FAIL() << "no error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos);
  }
  EXPECT_THROW(apply_config_text(c, "hmax 0.3\n"), ParseError);
  EXPECT_THROW(apply_config_text(c, "hmax = fast\n"), ParseError);
  EXPECT_THROW(apply_config_text(c, "optimize = maybe\n"), ParseError);
}

TEST(RunConfig, EveryKeyIsSettable) {
  for (const auto& k : RunConfig::keys()) {
    RunConfig c;
    const std::string& type = k[1];
    const std::string v = type == "BOOL" ? "true" : type == "INT" ? "3" : type == "NUM" ? "0.5" : "";
    if (v.empty()) continue;
    EXPECT_NO_THROW(c.set(k[0], v)) << k[0];
  }
}

TEST(RunConfig, Validation) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.h_min = 1.0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.h_buffer = 0.01;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.fill_backend = "tetgen";
  EXPECT_THROW(c.validate(), ParameterError);
}

TEST(Pipeline, FlatSurfaceNeedsNoRefinement) {
  auto c = small_flat_config();
  const auto run = run_surface(c);
  ASSERT_TRUE(run.adapt.has_value());
  EXPECT_TRUE(run.adapt->cycles.empty() || run.adapt->cycles.back().flagged == 0);
  const auto report = nlohmann::json::parse(run.report_json);
  EXPECT_TRUE(report.contains("config"));
  EXPECT_TRUE(report.contains("surface"));
}

TEST(Pipeline, FlatAblHasIdealPrismsAndAuditPasses) {
  auto c = small_flat_config();
  c.optimize = false;
  const auto run = run_abl(c);
  EXPECT_TRUE(run.audit.ok) << run.audit.to_text();
  const auto& prism_stats = run.quality_before.by_kind.at("prism");
  EXPECT_NEAR(prism_stats.min, 1.0, 1e-12);
  const auto report = nlohmann::json::parse(run.report_json);
  ASSERT_TRUE(report.contains("structured_estimate"));
  EXPECT_GT(report["structured_estimate"]["nodes"].get<double>(), 0.0);
  EXPECT_TRUE(report.contains("fidelity_notes"));
}

TEST(Pipeline, OutputsAreByteIdenticalAcrossRuns) {
  auto c = small_flat_config();
  c.terrain = "analytic:gaussian";
  const auto dir = std::filesystem::temp_directory_path() / "ablmesh_harness_det";
  std::filesystem::create_directories(dir);
  c.out = dir.string();
  std::string first;
  for (int k = 0; k < 2; ++k) {
    const auto run = run_abl(c);
    const auto paths = write_outputs(c, "abl", nullptr, &run.mesh);
    ASSERT_EQ(paths.size(), 1u);
    std::ifstream in(paths[0], std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    if (k == 0)
      first = ss.str();
    else
      EXPECT_TRUE(first == ss.str());
  }
  std::filesystem::remove_all(dir);
}

TEST(Convergence, UniformParaboloidRecords) {
  const auto truth = analytic_terrain("paraboloid");
  Box2 dom, fine;
  dom.extend({-5, -5});
  dom.extend({5, 5});
  fine.extend({-1.2, -1.2});
  fine.extend({1.2, 1.2});
  auto terrain = std::make_shared<const TerrainModel>(sample_terrain(truth.height, dom, fine, 0.01, 0.2));
  ConvergenceOptions o;
  o.adaptive = false;
  o.optimize = false;
  const auto study = run_convergence_study(terrain, truth.height, Rect2{{0, 0}, {1, 1}, 0.0},
                                           {{0.4, 0.1}, {0.2, 0.05}, {0.1, 0.025}}, o);
  ASSERT_EQ(study.records.size(), 3u);
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_GT(study.records[i].nodes, study.records[i - 1].nodes);
    EXPECT_LT(study.records[i].error, study.records[i - 1].error);
  }
  ASSERT_TRUE(study.slopes.count("uniform"));
  EXPECT_GT(study.slopes.at("uniform"), 1.5);
  EXPECT_TRUE(std::isnan(study.ratio(0, true, false)));
  EXPECT_EQ(study.ratio(1, false, false), 1.0);
  EXPECT_NE(study.to_text().find("uniform"), std::string::npos);
  EXPECT_THROW(run_convergence_study(terrain, truth.height, Rect2{{0, 0}, {1, 1}, 0.0}, {{0.4, 0.1}, {0.2, 0.05}}, o),
               ParameterError);
}
