#include "ipca/mesh.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "ipca/io.hpp"

namespace ipca {

namespace {

constexpr double kDegenerateArea = 1e-12;

double area_of(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
               const Eigen::Vector3d& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

}  // namespace

TriMesh TriMesh::create(std::vector<Eigen::Vector3d> nodes,
                        std::vector<std::array<int, 3>> triangles) {
  const int n = static_cast<int>(nodes.size());
  if (n < 3 || triangles.empty()) {
    throw InvalidMesh("mesh needs at least 3 nodes and 1 triangle");
  }
  for (const auto& p : nodes) {
    if (!p.allFinite()) throw InvalidMesh("non-finite node coordinate");
  }

  std::map<std::pair<int, int>, int> edge_use;
  double total = 0.0;
  double min_area = std::numeric_limits<double>::infinity();
  for (size_t t = 0; t < triangles.size(); ++t) {
    const auto& tri = triangles[t];
    for (int v : tri) {
      if (v < 0 || v >= n) {
        throw InvalidMesh("triangle " + std::to_string(t) +
                          " references node " + std::to_string(v) +
                          " outside [0, " + std::to_string(n) + ")");
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw InvalidMesh("triangle " + std::to_string(t) + " repeats a node index");
    }
    const double area = area_of(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
    if (!(area > kDegenerateArea)) {
      throw InvalidMesh("triangle " + std::to_string(t) + " is degenerate (area " +
                        std::to_string(area) + ")");
    }
    total += area;
    min_area = std::min(min_area, area);
    for (int e = 0; e < 3; ++e) {
      const int a = tri[e];
      const int b = tri[(e + 1) % 3];
      edge_use[{std::min(a, b), std::max(a, b)}] += 1;
    }
  }

  bool closed = true;
  for (const auto& [edge, uses] : edge_use) {
    if (uses != 2) {
      closed = false;
      break;
    }
  }

  TriMesh mesh;
  mesh.nodes_ = std::move(nodes);
  mesh.triangles_ = std::move(triangles);
  mesh.closed_ = closed;
  mesh.total_area_ = total;
  mesh.min_area_ = min_area;
  return mesh;
}

double TriMesh::triangle_area(int t) const {
  const auto& tri = triangles_[static_cast<size_t>(t)];
  return area_of(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]);
}

namespace {

// Reads the next content line (strips blank lines and '#' comments).
bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto pos = line.find('#');
    if (pos != std::string::npos) line.erase(pos);
    if (line.find_first_not_of(" \t\r\n") != std::string::npos) return true;
  }
  return false;
}

TriMesh load_off(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!next_line(in, line)) throw ParseError("empty OFF file " + path.string());
  {
    std::istringstream hs(line);
    std::string magic;
    hs >> magic;
    if (magic != "OFF") throw ParseError(path.string() + ": missing OFF header");
  }
  if (!next_line(in, line)) throw ParseError(path.string() + ": missing counts line");
  long nv = -1, nf = -1, ne = 0;
  {
    std::istringstream cs(line);
    if (!(cs >> nv >> nf)) throw ParseError(path.string() + ": bad counts line");
    cs >> ne;  // edge count is optional and ignored
  }
  if (nv <= 0 || nf <= 0) throw ParseError(path.string() + ": non-positive counts");

  std::vector<Eigen::Vector3d> nodes;
  nodes.reserve(static_cast<size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    if (!next_line(in, line)) throw ParseError(path.string() + ": truncated node list");
    std::istringstream vs(line);
    double x, y, z;
    if (!(vs >> x >> y >> z)) {
      throw ParseError(path.string() + ": bad node line '" + line + "'");
    }
    nodes.emplace_back(x, y, z);
  }
  std::vector<std::array<int, 3>> tris;
  tris.reserve(static_cast<size_t>(nf));
  for (long i = 0; i < nf; ++i) {
    if (!next_line(in, line)) throw ParseError(path.string() + ": truncated face list");
    std::istringstream fs(line);
    int count, a, b, c;
    if (!(fs >> count >> a >> b >> c) || count != 3) {
      throw ParseError(path.string() + ": face line '" + line +
                       "' is not a triangle");
    }
    tris.push_back({a, b, c});
  }
  return TriMesh::create(std::move(nodes), std::move(tris));
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  return cells;
}

TriMesh load_csv_pair(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ParseError("CSV-pair path must be a directory: " + dir.string());
  }
  std::ifstream nodes_in(dir / "nodes.csv");
  std::ifstream tris_in(dir / "triangles.csv");
  if (!nodes_in) throw ParseError("cannot open " + (dir / "nodes.csv").string());
  if (!tris_in) throw ParseError("cannot open " + (dir / "triangles.csv").string());

  std::vector<Eigen::Vector3d> nodes;
  std::string line;
  while (next_line(nodes_in, line)) {
    const auto cells = split_csv_row(line);
    if (cells.size() != 3) throw ParseError("nodes.csv row '" + line + "'");
    try {
      nodes.emplace_back(std::stod(cells[0]), std::stod(cells[1]), std::stod(cells[2]));
    } catch (const std::exception&) {
      throw ParseError("nodes.csv row '" + line + "'");
    }
  }
  std::vector<std::array<int, 3>> tris;
  while (next_line(tris_in, line)) {
    const auto cells = split_csv_row(line);
    if (cells.size() != 3) throw ParseError("triangles.csv row '" + line + "'");
    try {
      tris.push_back({std::stoi(cells[0]), std::stoi(cells[1]), std::stoi(cells[2])});
    } catch (const std::exception&) {
      throw ParseError("triangles.csv row '" + line + "'");
    }
  }
  return TriMesh::create(std::move(nodes), std::move(tris));
}

TriMesh load_container(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ParseError("container mesh path must be a directory: " + dir.string());
  }
  const Eigen::MatrixXd nodes = read_matrix(dir / "nodes.ipca");
  const Eigen::MatrixXd tris = read_matrix(dir / "triangles.ipca");
  if (nodes.cols() != 3 || tris.cols() != 3) {
    throw ParseError("container mesh matrices must have 3 columns");
  }
  std::vector<Eigen::Vector3d> node_list(static_cast<size_t>(nodes.rows()));
  for (Eigen::Index i = 0; i < nodes.rows(); ++i) node_list[i] = nodes.row(i);
  std::vector<std::array<int, 3>> tri_list(static_cast<size_t>(tris.rows()));
  for (Eigen::Index i = 0; i < tris.rows(); ++i) {
    tri_list[i] = {static_cast<int>(tris(i, 0)), static_cast<int>(tris(i, 1)),
                   static_cast<int>(tris(i, 2))};
  }
  return TriMesh::create(std::move(node_list), std::move(tri_list));
}

}  // namespace

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  switch (format) {
    case MeshFormat::Off: return load_off(path);
    case MeshFormat::CsvPair: return load_csv_pair(path);
    case MeshFormat::Container: return load_container(path);
  }
  throw ParseError("unknown mesh format");
}

void write_mesh(const TriMesh& mesh, const std::filesystem::path& path,
                MeshFormat format) {
  switch (format) {
    case MeshFormat::Off: {
      std::ofstream out(path);
      if (!out) throw ParseError("cannot write " + path.string());
      out << "OFF\n" << mesh.node_count() << ' ' << mesh.triangle_count() << " 0\n";
      char buf[96];
      for (const auto& p : mesh.nodes()) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
        out << buf;
      }
      for (const auto& t : mesh.triangles()) {
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
      }
      return;
    }
    case MeshFormat::CsvPair: {
      std::filesystem::create_directories(path);
      std::ofstream nodes_out(path / "nodes.csv");
      std::ofstream tris_out(path / "triangles.csv");
      if (!nodes_out || !tris_out) throw ParseError("cannot write into " + path.string());
      char buf[96];
      nodes_out << "x,y,z\n";
      for (const auto& p : mesh.nodes()) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.x(), p.y(), p.z());
        nodes_out << buf;
      }
      tris_out << "i,j,k\n";
      for (const auto& t : mesh.triangles()) {
        tris_out << t[0] << ',' << t[1] << ',' << t[2] << '\n';
      }
      return;
    }
    case MeshFormat::Container: {
      std::filesystem::create_directories(path);
      Eigen::MatrixXd nodes(mesh.node_count(), 3);
      for (int i = 0; i < mesh.node_count(); ++i) nodes.row(i) = mesh.nodes()[i];
      Eigen::MatrixXd tris(mesh.triangle_count(), 3);
      for (int i = 0; i < mesh.triangle_count(); ++i) {
        const auto& t = mesh.triangles()[i];
        tris(i, 0) = t[0];
        tris(i, 1) = t[1];
        tris(i, 2) = t[2];
      }
      write_matrix(path / "nodes.ipca", nodes);
      write_matrix(path / "triangles.ipca", tris);
      return;
    }
  }
  throw ParseError("unknown mesh format");
}

TriMesh make_icosphere(int subdivisions, double radius) {
  if (subdivisions < 0 || subdivisions > 7) {
    throw LimitExceeded("icosphere subdivisions must be in [0, 7], got " +
                        std::to_string(subdivisions));
  }
  if (!(radius > 0.0)) {
    throw LimitExceeded("icosphere radius must be positive");
  }

  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> nodes = {
      {-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
  std::vector<std::array<int, 3>> tris = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (auto& p : nodes) p = p.normalized() * radius;

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto midpoint_index = [&](int a, int b) {
      const auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const Eigen::Vector3d mid = (nodes[a] + nodes[b]).normalized() * radius;
      const int idx = static_cast<int>(nodes.size());
      nodes.push_back(mid);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(tris.size() * 4);
    for (const auto& t : tris) {
      const int ab = midpoint_index(t[0], t[1]);
      const int bc = midpoint_index(t[1], t[2]);
      const int ca = midpoint_index(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }

  return TriMesh::create(std::move(nodes), std::move(tris));
}

MeshStats mesh_stats(const TriMesh& mesh) {
  MeshStats stats;
  stats.node_count = mesh.node_count();
  stats.triangle_count = mesh.triangle_count();
  stats.total_area = mesh.total_area();
  stats.min_triangle_area = mesh.min_triangle_area();
  stats.is_closed = mesh.is_closed();
  return stats;
}

}  // namespace ipca
