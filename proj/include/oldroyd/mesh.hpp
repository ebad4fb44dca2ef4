#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "oldroyd/errors.hpp"
#include "oldroyd/geometry.hpp"

namespace oldroyd {

/// Mesh edge with a normal fixed once at construction. The normal is the
/// outward normal of `left`; for internal edges it therefore points from
/// `left` into `right`. `right` is -1 on the boundary.
struct Edge {
  int v0 = -1;
  int v1 = -1;
  Vec2 normal;
  int left = -1;
  int right = -1;

  bool on_boundary() const { return right < 0; }
};

/// Conforming triangulation of a polygonal domain with the bookkeeping the
/// solvers need: fixed edge normals, element adjacency, barycenters, and the
/// macro-element structure produced by barycentric refinement.
class Mesh {
 public:
  /// Build from raw vertices and counterclockwise triangles; validates areas,
  /// orientation and edge incidence.
  static Mesh from_cells(std::vector<Vec2> vertices,
                         std::vector<std::array<int, 3>> triangles,
                         std::vector<int> macro_parent = {});

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int num_internal_edges() const { return num_internal_edges_; }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const Vec2& vertex(int v) const { return vertices_[v]; }
  const std::array<int, 3>& tri(int k) const { return triangles_[k]; }
  const Edge& edge(int j) const { return edges_[j]; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Global edge index of the local edge opposite vertex i of triangle k.
  const std::array<int, 3>& tri_edges(int k) const { return tri_edges_[k]; }
  /// Neighbor across the local edge opposite vertex i, or -1.
  const std::array<int, 3>& neighbors(int k) const { return neighbors_[k]; }

  double area(int k) const { return areas_[k]; }
  Vec2 barycenter(int k) const { return barycenters_[k]; }
  double diameter(int k) const { return diameters_[k]; }
  double edge_length(int j) const { return edge_lengths_[j]; }

  int macro_parent(int k) const { return macro_parent_.empty() ? -1 : macro_parent_[k]; }
  bool has_macro_structure() const { return !macro_parent_.empty(); }

  bool vertex_on_boundary(int v) const { return boundary_vertex_[v]; }

  double total_area() const { return total_area_; }
  /// Largest element diameter.
  double mesh_size() const { return mesh_size_; }

  Vec2 point(int k, const std::array<double, 3>& bary) const {
    const auto& t = triangles_[k];
    return vertices_[t[0]] * bary[0] + vertices_[t[1]] * bary[1] +
           vertices_[t[2]] * bary[2];
  }
  std::array<double, 3> barycentric(int k, const Vec2& p) const;

  /// Gradients of the barycentric coordinates of triangle k (constant).
  std::array<Vec2, 3> barycentric_gradients(int k) const;

  struct Location {
    int element;
    std::array<double, 3> bary;
  };

  /// Find a triangle containing x by an adjacency walk from `hint`, with a
  /// brute-force fallback. Points up to 1e-10 outside (in barycentric units)
  /// are clamped onto the boundary; beyond that a LocationError is thrown.
  Location locate(const Vec2& x, int hint) const;

 private:
  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> tri_edges_;
  std::vector<std::array<int, 3>> neighbors_;
  std::vector<double> areas_;
  std::vector<Vec2> barycenters_;
  std::vector<double> diameters_;
  std::vector<double> edge_lengths_;
  std::vector<int> macro_parent_;
  std::vector<bool> boundary_vertex_;
  int num_internal_edges_ = 0;
  double total_area_ = 0.0;
  double mesh_size_ = 0.0;
};

/// Uniform triangulation of the rectangle [lo, hi]: nx*ny quads, each split
/// into two triangles along its diagonal.
Mesh build_structured_mesh(int nx, int ny, Vec2 lo = {0.0, 0.0}, Vec2 hi = {1.0, 1.0});

/// Split every triangle into three children sharing its barycenter; children
/// record the parent in macro_parent. Required for the Scott-Vogelius pair.
Mesh barycentric_refine(const Mesh& m);

/// ASCII format: "NV NT" on the first line, then NV lines "x y", then NT
/// lines "i j k" (0-based). The reader validates all mesh invariants.
Mesh read_mesh(std::istream& in);
Mesh read_mesh_file(const std::string& path);
void write_mesh(const Mesh& m, std::ostream& out);

}  // namespace oldroyd
