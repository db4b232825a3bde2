#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "ipca/errors.hpp"

namespace ipca {

/// Immutable triangulated 2-manifold embedded in R^3. Node indexing is
/// 0-based everywhere. Construction validates the triangulation (index
/// range, no repeated index within a triple, no degenerate triangle) and
/// computes closedness; invalid meshes never exist as TriMesh values, so
/// downstream FEM matrices can cache against mesh identity.
class TriMesh {
 public:
  /// Validates and builds. Throws InvalidMesh on any violation.
  static TriMesh create(std::vector<Eigen::Vector3d> nodes,
                        std::vector<std::array<int, 3>> triangles);

  const std::vector<Eigen::Vector3d>& nodes() const { return nodes_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int triangle_count() const { return static_cast<int>(triangles_.size()); }

  /// True when every edge is shared by exactly two triangles.
  bool is_closed() const { return closed_; }

  double triangle_area(int t) const;
  double total_area() const { return total_area_; }
  double min_triangle_area() const { return min_area_; }

 private:
  TriMesh() = default;

  std::vector<Eigen::Vector3d> nodes_;
  std::vector<std::array<int, 3>> triangles_;
  bool closed_ = false;
  double total_area_ = 0.0;
  double min_area_ = 0.0;
};

struct MeshStats {
  int node_count = 0;
  int triangle_count = 0;
  double total_area = 0.0;
  double min_triangle_area = 0.0;
  bool is_closed = false;
};

enum class MeshFormat {
  Off,        // OFF text file
  CsvPair,    // directory holding nodes.csv and triangles.csv
  Container,  // directory holding nodes.ipca and triangles.ipca
};

/// Loads and validates a mesh. ParseError on malformed input,
/// InvalidMesh on validation failure.
TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format);

/// Writes a mesh. Text formats use 17 significant digits so coordinates
/// round-trip; the binary container round-trips bit-exactly.
void write_mesh(const TriMesh& mesh, const std::filesystem::path& path,
                MeshFormat format);

/// Icosahedron subdivided `subdivisions` times, nodes projected onto the
/// sphere of the given radius: 10*4^subdivisions + 2 nodes. subdivisions
/// must be <= 7 and radius > 0 (LimitExceeded otherwise).
TriMesh make_icosphere(int subdivisions, double radius);

MeshStats mesh_stats(const TriMesh& mesh);

}  // namespace ipca
