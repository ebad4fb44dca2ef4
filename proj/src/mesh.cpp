#include "oldroyd/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace oldroyd {

namespace {
constexpr double kWalkAccept = -1e-12;   // in barycentric units
constexpr double kClampDistance = 1e-10; // in physical units

double signed_area2(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b - a).cross(c - a);
}
}  // namespace

Mesh Mesh::from_cells(std::vector<Vec2> vertices,
                      std::vector<std::array<int, 3>> triangles,
                      std::vector<int> macro_parent) {
  Mesh m;
  m.vertices_ = std::move(vertices);
  m.triangles_ = std::move(triangles);
  m.macro_parent_ = std::move(macro_parent);
  const int nv = m.num_vertices();
  const int nt = m.num_triangles();
  if (nt == 0) throw MeshError("mesh has no triangles");
  if (!m.macro_parent_.empty() && static_cast<int>(m.macro_parent_.size()) != nt)
    throw MeshError("macro_parent size does not match triangle count");

  m.areas_.resize(nt);
  m.barycenters_.resize(nt);
  m.diameters_.resize(nt);
  m.tri_edges_.assign(nt, {-1, -1, -1});
  m.neighbors_.assign(nt, {-1, -1, -1});

  for (int k = 0; k < nt; ++k) {
    const auto& t = m.triangles_[k];
    for (int i = 0; i < 3; ++i) {
      if (t[i] < 0 || t[i] >= nv) throw MeshError("triangle vertex index out of range");
    }
    const Vec2 &a = m.vertices_[t[0]], &b = m.vertices_[t[1]], &c = m.vertices_[t[2]];
    const double s2 = signed_area2(a, b, c);
    if (!(s2 > 0.0))
      throw MeshError("triangle " + std::to_string(k) +
                      " is degenerate or not counterclockwise");
    m.areas_[k] = 0.5 * s2;
    m.barycenters_[k] = (a + b + c) * (1.0 / 3.0);
    m.diameters_[k] = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
    m.total_area_ += m.areas_[k];
    m.mesh_size_ = std::max(m.mesh_size_, m.diameters_[k]);
  }

  // Collect edges; the local edge i of a triangle is opposite its vertex i.
  std::map<std::pair<int, int>, int> edge_ids;
  for (int k = 0; k < nt; ++k) {
    const auto& t = m.triangles_[k];
    for (int i = 0; i < 3; ++i) {
      const int a = t[(i + 1) % 3], b = t[(i + 2) % 3];
      const auto key = std::minmax(a, b);
      auto it = edge_ids.find(key);
      if (it == edge_ids.end()) {
        Edge e;
        e.v0 = key.first;
        e.v1 = key.second;
        e.left = k;
        m.edges_.push_back(e);
        const int id = static_cast<int>(m.edges_.size()) - 1;
        edge_ids.emplace(key, id);
        m.tri_edges_[k][i] = id;
      } else {
        Edge& e = m.edges_[it->second];
        if (e.right >= 0)
          throw MeshError("edge shared by more than two triangles");
        // Keep the lower element index on the left.
        if (k < e.left) {
          e.right = e.left;
          e.left = k;
        } else {
          e.right = k;
        }
        m.tri_edges_[k][i] = it->second;
      }
    }
  }

  // Fixed normals: outward from the left element.
  m.edge_lengths_.resize(m.edges_.size());
  for (std::size_t j = 0; j < m.edges_.size(); ++j) {
    Edge& e = m.edges_[j];
    const Vec2 d = m.vertices_[e.v1] - m.vertices_[e.v0];
    m.edge_lengths_[j] = d.norm();
    Vec2 n{d.y / m.edge_lengths_[j], -d.x / m.edge_lengths_[j]};
    // Orient away from the left element's opposite vertex.
    const auto& t = m.triangles_[e.left];
    int opp = -1;
    for (int i = 0; i < 3; ++i)
      if (t[i] != e.v0 && t[i] != e.v1) opp = t[i];
    if (n.dot(m.vertices_[e.v0] - m.vertices_[opp]) < 0.0) n = n * -1.0;
    e.normal = n;
    if (!e.on_boundary()) ++m.num_internal_edges_;
  }

  // Adjacency across local edges.
  for (int k = 0; k < nt; ++k) {
    for (int i = 0; i < 3; ++i) {
      const Edge& e = m.edges_[m.tri_edges_[k][i]];
      m.neighbors_[k][i] = (e.left == k) ? e.right : e.left;
    }
  }

  m.boundary_vertex_.assign(nv, false);
  for (const Edge& e : m.edges_) {
    if (e.on_boundary()) {
      m.boundary_vertex_[e.v0] = true;
      m.boundary_vertex_[e.v1] = true;
    }
  }
  return m;
}

std::array<double, 3> Mesh::barycentric(int k, const Vec2& p) const {
  const auto& t = triangles_[k];
  const Vec2 &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
  const double inv = 1.0 / (2.0 * areas_[k]);
  return {signed_area2(p, b, c) * inv, signed_area2(a, p, c) * inv,
          signed_area2(a, b, p) * inv};
}

std::array<Vec2, 3> Mesh::barycentric_gradients(int k) const {
  const auto& t = triangles_[k];
  const Vec2 &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
  const double inv = 1.0 / (2.0 * areas_[k]);
  // grad lambda_i is the inward normal of the opposite edge scaled by 1/(2A).
  return {(c - b).perp() * inv, (a - c).perp() * inv, (b - a).perp() * inv};
}

Mesh::Location Mesh::locate(const Vec2& x, int hint) const {
  int k = (hint >= 0 && hint < num_triangles()) ? hint : 0;
  const int max_steps = 2 * num_triangles() + 8;
  for (int step = 0; step < max_steps; ++step) {
    const auto bary = barycentric(k, x);
    int worst = 0;
    for (int i = 1; i < 3; ++i)
      if (bary[i] < bary[worst]) worst = i;
    if (bary[worst] >= kWalkAccept) {
      Location loc{k, bary};
      for (auto& l : loc.bary) l = std::max(l, 0.0);
      const double s = loc.bary[0] + loc.bary[1] + loc.bary[2];
      for (auto& l : loc.bary) l /= s;
      return loc;
    }
    const int next = neighbors_[k][worst];
    if (next < 0) break;  // hit the boundary, fall back to the scan
    k = next;
  }

  // Brute-force scan: the element where the most negative coordinate is best.
  int best = -1;
  double best_min = -std::numeric_limits<double>::infinity();
  std::array<double, 3> best_bary{};
  for (int kk = 0; kk < num_triangles(); ++kk) {
    const auto bary = barycentric(kk, x);
    const double mn = std::min({bary[0], bary[1], bary[2]});
    if (mn > best_min) {
      best_min = mn;
      best = kk;
      best_bary = bary;
    }
  }
  // Physical distance outside the best element: each negative coordinate
  // times the corresponding altitude.
  double defect = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (best_bary[i] < 0.0) {
      const double altitude =
          2.0 * areas_[best] / edge_lengths_[tri_edges_[best][i]];
      defect = std::max(defect, -best_bary[i] * altitude);
    }
  }
  if (defect > kClampDistance) {
    std::ostringstream os;
    os << "point (" << x.x << ", " << x.y << ") lies outside the mesh "
       << "(distance " << defect << ")";
    throw LocationError(os.str());
  }
  Location loc{best, best_bary};
  for (auto& l : loc.bary) l = std::max(l, 0.0);
  const double s = loc.bary[0] + loc.bary[1] + loc.bary[2];
  for (auto& l : loc.bary) l /= s;
  return loc;
}

Mesh build_structured_mesh(int nx, int ny, Vec2 lo, Vec2 hi) {
  if (nx < 1 || ny < 1) throw MeshError("structured mesh requires nx, ny >= 1");
  if (!(hi.x > lo.x) || !(hi.y > lo.y))
    throw MeshError("degenerate rectangle");
  std::vector<Vec2> verts;
  verts.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      verts.push_back({lo.x + (hi.x - lo.x) * i / nx, lo.y + (hi.y - lo.y) * j / ny});

  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<std::array<int, 3>> tris;
  tris.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int p00 = vid(i, j), p10 = vid(i + 1, j);
      const int p11 = vid(i + 1, j + 1), p01 = vid(i, j + 1);
      tris.push_back({p00, p10, p11});
      tris.push_back({p00, p11, p01});
    }
  }
  return Mesh::from_cells(std::move(verts), std::move(tris));
}

Mesh barycentric_refine(const Mesh& m) {
  std::vector<Vec2> verts = m.vertices();
  std::vector<std::array<int, 3>> tris;
  std::vector<int> parent;
  tris.reserve(3 * m.num_triangles());
  parent.reserve(3 * m.num_triangles());
  for (int k = 0; k < m.num_triangles(); ++k) {
    const auto& t = m.tri(k);
    const int c = static_cast<int>(verts.size());
    verts.push_back(m.barycenter(k));
    tris.push_back({t[0], t[1], c});
    tris.push_back({t[1], t[2], c});
    tris.push_back({t[2], t[0], c});
    parent.insert(parent.end(), 3, k);
  }
  return Mesh::from_cells(std::move(verts), std::move(tris), std::move(parent));
}

Mesh read_mesh(std::istream& in) {
  int nv = 0, nt = 0;
  if (!(in >> nv >> nt)) throw MeshError("mesh file: cannot read header");
  if (nv < 3 || nt < 1) throw MeshError("mesh file: invalid counts");
  std::vector<Vec2> verts(nv);
  for (int v = 0; v < nv; ++v)
    if (!(in >> verts[v].x >> verts[v].y))
      throw MeshError("mesh file: cannot read vertex " + std::to_string(v));
  std::vector<std::array<int, 3>> tris(nt);
  for (int k = 0; k < nt; ++k)
    if (!(in >> tris[k][0] >> tris[k][1] >> tris[k][2]))
      throw MeshError("mesh file: cannot read triangle " + std::to_string(k));
  return Mesh::from_cells(std::move(verts), std::move(tris));
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path);
  return read_mesh(in);
}

void write_mesh(const Mesh& m, std::ostream& out) {
  out << m.num_vertices() << ' ' << m.num_triangles() << '\n';
  out.precision(17);
  for (const Vec2& v : m.vertices()) out << v.x << ' ' << v.y << '\n';
  for (int k = 0; k < m.num_triangles(); ++k) {
    const auto& t = m.tri(k);
    out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
}

}  // namespace oldroyd
