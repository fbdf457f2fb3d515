#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "ablmesh/error.hpp"
#include "ablmesh/exchange.hpp"
#include "ablmesh/meshio.hpp"
#include "ablmesh/quality.hpp"
#include "ablmesh/volfill.hpp"
#include "test_meshes.hpp"

using namespace ablmesh;
using namespace ablmesh::testing;

namespace {

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string exchange_text(const ExchangeDocument& doc) {
  std::ostringstream os;
  write_exchange(doc, os);
  return os.str();
}

// Small hybrid mesh with irrational-looking coordinates.
HybridMesh sample_hybrid() {
  auto pl = flat_prisms(4, 5, 1.0 / 3.0, 2);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  for (std::size_t i = pl.sheet_size; i < pl.mesh.nodes.size(); ++i)
    if (!(pl.mesh.node_flags[i] & node_flag::lateral)) pl.mesh.nodes[i] = pl.mesh.nodes[i] + Vec3{u(rng), u(rng), 0.0};
  std::vector<Vec3> sheet(pl.mesh.nodes.begin() + pl.top_node(0), pl.mesh.nodes.end());
  std::vector<bool> lateral(pl.sheet_size);
  for (std::size_t i = 0; i < pl.sheet_size; ++i)
    lateral[i] = pl.mesh.node_flags[pl.top_node(static_cast<int>(i))] & node_flag::lateral;
  FillParams fp;
  fp.z_top = 2.0 + std::sqrt(2.0);
  fp.h2 = 1.0;
  fp.first_height = 0.4;
  return merge_hybrid(pl, generate_tet_fill(sheet, pl.mesh.ground_triangles, lateral, fp));
}

void expect_same(const HybridMesh& a, const HybridMesh& b) {
  ASSERT_EQ(a.nodes.size(), b.nodes.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    EXPECT_EQ(a.nodes[i].x, b.nodes[i].x);
    EXPECT_EQ(a.nodes[i].y, b.nodes[i].y);
    EXPECT_EQ(a.nodes[i].z, b.nodes[i].z);
  }
  EXPECT_EQ(a.node_flags, b.node_flags);
  EXPECT_EQ(a.prisms, b.prisms);
  EXPECT_EQ(a.prism_layer, b.prism_layer);
  EXPECT_EQ(a.prism_base, b.prism_base);
  EXPECT_EQ(a.prism_height, b.prism_height);
  EXPECT_EQ(a.tets, b.tets);
  EXPECT_EQ(a.ground_triangles, b.ground_triangles);
}

}  // namespace

TEST(Exchange, SeventeenDigitsRoundTrip) {
  const double tricky = 1.0000000000000002;
  ASSERT_NE(tricky, 1.0);
  ExchangeDocument doc;
  doc.nodes = {{tricky, 0.1, -1e-300}, {M_PI, std::nextafter(2.0, 3.0), 1e300}, {0, 1, 0}};
  doc.triangles = {{0, 1, 2}};
  std::istringstream is(exchange_text(doc));
  const auto back = read_exchange(is);
  ASSERT_EQ(back.nodes.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.nodes[i].x, doc.nodes[i].x);
    EXPECT_EQ(back.nodes[i].y, doc.nodes[i].y);
    EXPECT_EQ(back.nodes[i].z, doc.nodes[i].z);
  }
  EXPECT_EQ(format_double(tricky), "1.0000000000000002");
}

TEST(Exchange, RandomDoublesRoundTrip) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Exchange, TruncatedFileReportsLine) {
  ExchangeDocument doc;
  doc.nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  doc.triangles = {{0, 1, 2}};
  std::string text = exchange_text(doc);
  const auto cut = text.rfind("end");
  ASSERT_NE(cut, std::string::npos);
  text.resize(cut);
  std::istringstream is(text);
  try {
    read_exchange(is, "cut.mesh");
    FAIL() << "no error";
  } catch (const ParseError& e) {
    EXPECT_GT(e.line(), 0);
    EXPECT_NE(std::string(e.what()).find("cut.mesh:"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }

  // Cut inside the node block.
  const std::string head = exchange_text(doc).substr(0, exchange_text(doc).find("1 1 0") - 1);
  std::istringstream is2(head);
  EXPECT_THROW(read_exchange(is2), ParseError);
}

TEST(Exchange, UnknownKindIsUnsupported) {
  const std::string text =
      "ablmesh-exchange 1\n"
      "kinds hexahedron\n"
      "counts nodes 0 triangle 0 prism 0 tetrahedron 0\n"
      "end\n";
  std::istringstream is(text);
  try {
    read_exchange(is, "hex.mesh");
    FAIL() << "no error";
  } catch (const UnsupportedKindError& e) {
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(Exchange, MalformedLineCarriesNumber) {
  ExchangeDocument doc;
  doc.nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  doc.triangles = {{0, 1, 2}};
  std::string text = exchange_text(doc);
  const auto pos = text.find("\n1 1 0 0");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos + 1, 7, "1 1 x 0");
  int expected_line = 1;
  for (std::size_t i = 0; i <= pos; ++i) expected_line += text[i] == '\n';
  std::istringstream is(text);
  try {
    read_exchange(is);
    FAIL() << "no error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), expected_line);
  }
}

TEST(MeshIo, HybridRoundTripIsIdentity) {
  const HybridMesh m = sample_hybrid();
  ASSERT_TRUE(validate_conformity(m).ok);
  const auto path = temp_file("ablmesh_meshio_hybrid.mesh");
  write_mesh(m, path, MeshFormat::exchange);
  AuditReport audit;
  const HybridMesh back = read_hybrid_mesh(path, &audit);
  EXPECT_TRUE(audit.ok);
  expect_same(m, back);

  // Byte-identical on rewrite.
  const auto path2 = temp_file("ablmesh_meshio_hybrid2.mesh");
  write_mesh(back, path2, MeshFormat::exchange);
  EXPECT_EQ(slurp(path), slurp(path2));
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST(MeshIo, SurfaceRoundTripIsIdentity) {
  auto s = grid_surface(5, 0.1, [](double x, double y) { return std::sin(x) * std::cos(3 * y); }, true);
  s.region[3] = Region::transition;
  s.region[7] = Region::buffer;
  s.target_size[1] = 1.0 / 7.0;
  const auto path = temp_file("ablmesh_meshio_surface.mesh");
  write_mesh(s, path, MeshFormat::exchange);
  const TriSurfaceMesh back = read_surface_mesh(path);
  EXPECT_EQ(back.triangles, s.triangles);
  EXPECT_EQ(back.region, s.region);
  EXPECT_EQ(back.target_size, s.target_size);
  ASSERT_EQ(back.uv.size(), s.uv.size());
  for (std::size_t i = 0; i < s.uv.size(); ++i) {
    EXPECT_EQ(back.uv[i], s.uv[i]);
    EXPECT_EQ(back.xyz[i], s.xyz[i]);
  }
  EXPECT_EQ(exchange_mesh_kind(to_exchange(s)), "surface");
  EXPECT_THROW(read_hybrid_mesh(path), InputError);
  std::filesystem::remove(path);
}

TEST(MeshIo, FailedAuditOnLoadThrows) {
  HybridMesh m = sample_hybrid();
  m.tets.pop_back();
  const auto path = temp_file("ablmesh_meshio_holey.mesh");
  write_mesh(m, path, MeshFormat::exchange);
  EXPECT_THROW(read_hybrid_mesh(path), InputError);
  AuditReport audit;
  read_hybrid_mesh(path, &audit);
  EXPECT_FALSE(audit.ok);
  std::filesystem::remove(path);
}

TEST(MeshIo, MissingFileNamesPath) {
  try {
    read_hybrid_mesh("/nonexistent/dir/none.mesh");
    FAIL() << "no error";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/none.mesh"), std::string::npos);
  }
  EXPECT_THROW(write_mesh(sample_hybrid(), "/nonexistent/dir/out.mesh", MeshFormat::exchange), InputError);
}

TEST(MeshIo, VtkStructure) {
  const HybridMesh m = sample_hybrid();
  std::ostringstream os;
  write_vtk(m, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# vtk DataFile Version 3.0");
  std::getline(in, line);  // title
  std::getline(in, line);
  EXPECT_EQ(line, "ASCII");
  std::getline(in, line);
  EXPECT_EQ(line, "DATASET UNSTRUCTURED_GRID");

  std::string tok;
  std::size_t n = 0;
  in >> tok >> n >> line;
  EXPECT_EQ(tok, "POINTS");
  EXPECT_EQ(n, m.nodes.size());
  for (std::size_t i = 0; i < 3 * n; ++i) {
    double v;
    ASSERT_TRUE(in >> v);
  }
  std::size_t cells = 0, size = 0;
  in >> tok >> cells >> size;
  EXPECT_EQ(tok, "CELLS");
  EXPECT_EQ(cells, m.element_count());
  EXPECT_EQ(size, 7 * m.prisms.size() + 5 * m.tets.size());
  for (std::size_t c = 0; c < cells; ++c) {
    int k;
    in >> k;
    for (int j = 0; j < k; ++j) {
      int id;
      in >> id;
      EXPECT_GE(id, 0);
      EXPECT_LT(id, static_cast<int>(n));
    }
  }
  in >> tok >> n;
  EXPECT_EQ(tok, "CELL_TYPES");
  EXPECT_EQ(n, cells);
  std::size_t wedges = 0, tets = 0;
  for (std::size_t c = 0; c < cells; ++c) {
    int t;
    in >> t;
    wedges += t == 13;
    tets += t == 10;
  }
  EXPECT_EQ(wedges, m.prisms.size());
  EXPECT_EQ(tets, m.tets.size());
  in >> tok >> n;
  EXPECT_EQ(tok, "CELL_DATA");
  EXPECT_EQ(n, cells);
  std::string name;
  in >> tok >> name;
  std::getline(in, line);
  EXPECT_EQ(tok, "SCALARS");
  EXPECT_EQ(name, "quality");
  in >> tok >> line;
  EXPECT_EQ(tok, "LOOKUP_TABLE");
  const auto q = element_qualities(m);
  for (std::size_t c = 0; c < cells; ++c) {
    double v;
    ASSERT_TRUE(in >> v);
    EXPECT_NEAR(v, q[c], 1e-12);
  }
}

TEST(MeshIo, VtkSurfaceHasTriangles) {
  const auto s = lattice_surface(3, 4, 1.0);
  std::ostringstream os;
  write_vtk(s, os);
  const std::string text = os.str();
  EXPECT_NE(text.find("CELLS " + std::to_string(s.triangles.size()) + " " + std::to_string(4 * s.triangles.size())),
            std::string::npos);
  EXPECT_NE(text.find("SCALARS region int"), std::string::npos);
}

TEST(MeshIo, FormatNames) {
  EXPECT_EQ(parse_mesh_format("exchange"), MeshFormat::exchange);
  EXPECT_EQ(parse_mesh_format("vtk"), MeshFormat::vtk_legacy);
  EXPECT_THROW(parse_mesh_format("stl"), ParameterError);
}
