#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "ipca/mesh.hpp"

using namespace ipca;

namespace {

// Regular tetrahedron inscribed in the cube, the smallest closed triangulation.
TriMesh tetrahedron() {
  std::vector<Eigen::Vector3d> nodes = {
      {1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
  std::vector<std::array<int, 3>> tris = {
      {0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return TriMesh::create(std::move(nodes), std::move(tris));
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "ipca_mesh_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

int edge_count(const TriMesh& mesh) {
  std::set<std::pair<int, int>> edges;
  for (const auto& t : mesh.triangles()) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[e];
      const int b = t[(e + 1) % 3];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  }
  return static_cast<int>(edges.size());
}

}  // namespace

TEST_CASE("tetrahedron OFF round trip and stats") {
  const TriMesh tet = tetrahedron();
  const auto path = temp_dir() / "tet.off";
  write_mesh(tet, path, MeshFormat::Off);
  const TriMesh loaded = load_mesh(path, MeshFormat::Off);

  CHECK(loaded.node_count() == 4);
  CHECK(loaded.triangle_count() == 4);
  CHECK(loaded.is_closed());

  const MeshStats stats = mesh_stats(loaded);
  CHECK(stats.node_count == 4);
  CHECK(stats.triangle_count == 4);
  CHECK(stats.is_closed);
  // equilateral faces of side 2*sqrt(2): total area 8*sqrt(3)
  CHECK(stats.total_area == doctest::Approx(8.0 * std::sqrt(3.0)).epsilon(1e-12));
  // sum of triangle areas matches the total within 1e-9 relative
  double sum = 0.0;
  for (int t = 0; t < loaded.triangle_count(); ++t) sum += loaded.triangle_area(t);
  CHECK(std::abs(sum - stats.total_area) <= 1e-9 * stats.total_area);
}

TEST_CASE("OFF with out-of-range face index is rejected") {
  const auto path = temp_dir() / "bad_index.off";
  std::ofstream out(path);
  out << "OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 4\n";
  out.close();
  CHECK_THROWS_AS(load_mesh(path, MeshFormat::Off), InvalidMesh);
}

TEST_CASE("malformed OFF files raise ParseError") {
  const auto dir = temp_dir();
  {
    std::ofstream out(dir / "no_header.off");
    out << "4 4 0\n";
  }
  CHECK_THROWS_AS(load_mesh(dir / "no_header.off", MeshFormat::Off), ParseError);
  {
    std::ofstream out(dir / "truncated.off");
    out << "OFF\n4 4 0\n0 0 0\n1 0 0\n";
  }
  CHECK_THROWS_AS(load_mesh(dir / "truncated.off", MeshFormat::Off), ParseError);
  {
    std::ofstream out(dir / "quad.off");
    out << "OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n4 0 1 2 3\n";
  }
  CHECK_THROWS_AS(load_mesh(dir / "quad.off", MeshFormat::Off), ParseError);
  CHECK_THROWS_AS(load_mesh(dir / "missing.off", MeshFormat::Off), ParseError);
}

TEST_CASE("degenerate and malformed triangulations are rejected") {
  std::vector<Eigen::Vector3d> nodes = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, 1, 0}};
  SUBCASE("repeated index") {
    CHECK_THROWS_AS(TriMesh::create(nodes, {{0, 0, 1}}), InvalidMesh);
  }
  SUBCASE("collinear triangle") {
    CHECK_THROWS_AS(TriMesh::create(nodes, {{0, 1, 2}}), InvalidMesh);
  }
  SUBCASE("negative index") {
    CHECK_THROWS_AS(TriMesh::create(nodes, {{0, 1, -1}}), InvalidMesh);
  }
}

TEST_CASE("icosphere node counts and geometry") {
  const TriMesh ico0 = make_icosphere(0, 1.0);
  CHECK(ico0.node_count() == 12);
  CHECK(ico0.triangle_count() == 20);
  CHECK(ico0.is_closed());

  CHECK(make_icosphere(1, 1.0).node_count() == 42);
  CHECK(make_icosphere(2, 1.0).node_count() == 162);

  const TriMesh ico3 = make_icosphere(3, 1.0);
  CHECK(ico3.node_count() == 642);
  const double sphere_area = 4.0 * std::acos(-1.0);
  CHECK(std::abs(ico3.total_area() - sphere_area) < 0.01 * sphere_area);
  CHECK(mesh_stats(ico3).total_area ==
        doctest::Approx(12.566).epsilon(0.01));  // 4*pi for r = 1

  for (const auto& p : ico3.nodes()) {
    CHECK(std::abs(p.norm() - 1.0) < 1e-12);
  }

  const TriMesh scaled = make_icosphere(2, 2.5);
  for (const auto& p : scaled.nodes()) {
    CHECK(std::abs(p.norm() - 2.5) < 1e-12);
  }
}

TEST_CASE("icosphere guards") {
  CHECK_THROWS_AS(make_icosphere(8, 1.0), LimitExceeded);
  CHECK_THROWS_AS(make_icosphere(-1, 1.0), LimitExceeded);
  CHECK_THROWS_AS(make_icosphere(2, 0.0), LimitExceeded);
  CHECK_THROWS_AS(make_icosphere(2, -1.0), LimitExceeded);
}

TEST_CASE("Euler characteristic V - E + F = 2 on generated icospheres") {
  for (int s = 0; s <= 3; ++s) {
    const TriMesh mesh = make_icosphere(s, 1.0);
    const int v = mesh.node_count();
    const int e = edge_count(mesh);
    const int f = mesh.triangle_count();
    CHECK(v - e + f == 2);
  }
}

TEST_CASE("icosphere loaded from OFF keeps the analytic area") {
  const auto path = temp_dir() / "ico3.off";
  write_mesh(make_icosphere(3, 1.0), path, MeshFormat::Off);
  const TriMesh mesh = load_mesh(path, MeshFormat::Off);
  CHECK(mesh.node_count() == 642);
  const double sphere_area = 4.0 * std::acos(-1.0);
  CHECK(std::abs(mesh.total_area() - sphere_area) < 0.01 * sphere_area);
}

TEST_CASE("round trips: text within 1e-15, container bit-exact") {
  const TriMesh mesh = make_icosphere(1, 1.37);

  SUBCASE("off") {
    const auto path = temp_dir() / "rt.off";
    write_mesh(mesh, path, MeshFormat::Off);
    const TriMesh loaded = load_mesh(path, MeshFormat::Off);
    REQUIRE(loaded.node_count() == mesh.node_count());
    for (int i = 0; i < mesh.node_count(); ++i) {
      CHECK((loaded.nodes()[i] - mesh.nodes()[i]).norm() <= 1e-15);
    }
  }
  SUBCASE("csv pair") {
    const auto dir = temp_dir() / "rt_csv";
    write_mesh(mesh, dir, MeshFormat::CsvPair);
    const TriMesh loaded = load_mesh(dir, MeshFormat::CsvPair);
    REQUIRE(loaded.node_count() == mesh.node_count());
    for (int i = 0; i < mesh.node_count(); ++i) {
      CHECK((loaded.nodes()[i] - mesh.nodes()[i]).norm() <= 1e-15);
    }
    CHECK(loaded.triangles() == mesh.triangles());
  }
  SUBCASE("container") {
    const auto dir = temp_dir() / "rt_bin";
    write_mesh(mesh, dir, MeshFormat::Container);
    const TriMesh loaded = load_mesh(dir, MeshFormat::Container);
    REQUIRE(loaded.node_count() == mesh.node_count());
    for (int i = 0; i < mesh.node_count(); ++i) {
      CHECK(loaded.nodes()[i].x() == mesh.nodes()[i].x());
      CHECK(loaded.nodes()[i].y() == mesh.nodes()[i].y());
      CHECK(loaded.nodes()[i].z() == mesh.nodes()[i].z());
    }
    CHECK(loaded.triangles() == mesh.triangles());
  }
}

TEST_CASE("open surface is flagged not closed") {
  std::vector<Eigen::Vector3d> nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  std::vector<std::array<int, 3>> tris = {{0, 1, 2}, {1, 3, 2}};
  const TriMesh sheet = TriMesh::create(std::move(nodes), std::move(tris));
  CHECK_FALSE(sheet.is_closed());
}
