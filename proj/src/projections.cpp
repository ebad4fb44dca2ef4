#include "oldroyd/projections.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace oldroyd {

namespace {

std::array<double, 3> edge_point_bary(const Mesh& m, int k, int j, double s) {
  const Edge& e = m.edge(j);
  const Vec2 x = m.vertex(e.v0) * (1.0 - s) + m.vertex(e.v1) * s;
  return m.barycentric(k, x);
}

/// u.n at parameter s of edge j, averaged over both incident elements.
double mean_normal_trace(const Mesh& m, const VelocityEvaluator& u, int j, double s) {
  const Edge& e = m.edge(j);
  double un = u.value(m, e.left, edge_point_bary(m, e.left, j, s)).dot(e.normal);
  if (!e.on_boundary()) {
    un += u.value(m, e.right, edge_point_bary(m, e.right, j, s)).dot(e.normal);
    un *= 0.5;
  }
  return un;
}

}  // namespace

ProjectedVelocity ProjectedVelocity::curl_potential(std::vector<double> potential) {
  ProjectedVelocity p;
  p.kind_ = Kind::CurlPotential;
  p.coeff_ = std::move(potential);
  return p;
}

ProjectedVelocity ProjectedVelocity::rt0(std::vector<double> fluxes) {
  ProjectedVelocity p;
  p.kind_ = Kind::RT0;
  p.coeff_ = std::move(fluxes);
  return p;
}

ProjectedVelocity ProjectedVelocity::bdm1(std::vector<double> element_coeffs) {
  ProjectedVelocity p;
  p.kind_ = Kind::BDM1;
  p.coeff_ = std::move(element_coeffs);
  return p;
}

Vec2 ProjectedVelocity::value(const Mesh& m, int k,
                              const std::array<double, 3>& bary) const {
  switch (kind_) {
    case Kind::CurlPotential: {
      const auto g = m.barycentric_gradients(k);
      Vec2 grad{0.0, 0.0};
      const auto& t = m.tri(k);
      for (int i = 0; i < 3; ++i) grad += g[i] * coeff_[t[i]];
      return {grad.y, -grad.x};
    }
    case Kind::RT0: {
      const Vec2 x = m.point(k, bary);
      Vec2 v{0.0, 0.0};
      const double inv2a = 1.0 / (2.0 * m.area(k));
      for (int i = 0; i < 3; ++i) {
        const int j = m.tri_edges(k)[i];
        const double sign = (m.edge(j).left == k) ? 1.0 : -1.0;
        const Vec2 p = m.vertex(m.tri(k)[i]);
        v += (x - p) * (sign * coeff_[j] * inv2a);
      }
      return v;
    }
    case Kind::BDM1: {
      const Vec2 x = m.point(k, bary);
      const double* a = &coeff_[6 * k];
      return {a[0] + a[1] * x.x + a[2] * x.y, a[3] + a[4] * x.x + a[5] * x.y};
    }
  }
  return {};
}

Mat2 ProjectedVelocity::gradient(const Mesh& m, int k,
                                 const std::array<double, 3>&) const {
  switch (kind_) {
    case Kind::CurlPotential:
      return {};
    case Kind::RT0: {
      double s = 0.0;
      const double inv2a = 1.0 / (2.0 * m.area(k));
      for (int i = 0; i < 3; ++i) {
        const int j = m.tri_edges(k)[i];
        const double sign = (m.edge(j).left == k) ? 1.0 : -1.0;
        s += sign * coeff_[j] * inv2a;
      }
      return {s, 0.0, 0.0, s};
    }
    case Kind::BDM1: {
      const double* a = &coeff_[6 * k];
      return {a[1], a[2], a[4], a[5]};
    }
  }
  return {};
}

double ProjectedVelocity::element_divergence(const Mesh& m, int k) const {
  return gradient(m, k, {1.0 / 3, 1.0 / 3, 1.0 / 3}).trace();
}

ProjectedVelocity project_rot(const Mesh& m, const VelocityEvaluator& u) {
  // Interior-vertex unknowns of the P1 potential, zero on the boundary.
  std::vector<int> index(m.num_vertices(), -1);
  int nin = 0;
  for (int v = 0; v < m.num_vertices(); ++v)
    if (!m.vertex_on_boundary(v)) index[v] = nin++;
  if (nin == 0)
    throw LinearSolverError(
        "project_rot: the potential space is empty (no interior vertices)");

  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nin);
  const QuadRule& quad = triangle_quadrature(6);
  for (int k = 0; k < m.num_triangles(); ++k) {
    const auto g = m.barycentric_gradients(k);
    const auto& t = m.tri(k);
    const double area = m.area(k);
    for (int i = 0; i < 3; ++i) {
      if (index[t[i]] < 0) continue;
      for (int j = 0; j < 3; ++j) {
        if (index[t[j]] < 0) continue;
        trips.emplace_back(index[t[i]], index[t[j]], area * g[i].dot(g[j]));
      }
      // rhs_i = int u . curl(phi_i), curl(phi) = (dphi/dy, -dphi/dx)
      const Vec2 curl{g[i].y, -g[i].x};
      double r = 0.0;
      for (std::size_t q = 0; q < quad.points.size(); ++q)
        r += quad.weights[q] * u.value(m, k, quad.points[q]).dot(curl);
      rhs[index[t[i]]] += area * r;
    }
  }

  Eigen::SparseMatrix<double> A(nin, nin);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success)
    throw LinearSolverError("project_rot: Poisson factorization failed");
  Eigen::VectorXd psi = solver.solve(rhs);
  psi += solver.solve(rhs - A * psi);  // one refinement pass

  std::vector<double> potential(m.num_vertices(), 0.0);
  for (int v = 0; v < m.num_vertices(); ++v)
    if (index[v] >= 0) potential[v] = psi[index[v]];
  return ProjectedVelocity::curl_potential(std::move(potential));
}

ProjectedVelocity project_rt0(const Mesh& m, const VelocityEvaluator& u) {
  const EdgeRule& rule = edge_quadrature(2);
  std::vector<double> flux(m.num_edges(), 0.0);
  for (int j = 0; j < m.num_edges(); ++j) {
    double f = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q)
      f += rule.weights[q] * mean_normal_trace(m, u, j, rule.points[q]);
    flux[j] = f * m.edge_length(j);
  }
  return ProjectedVelocity::rt0(std::move(flux));
}

ProjectedVelocity project_bdm(const Mesh& m, const VelocityEvaluator& u) {
  const EdgeRule& rule = edge_quadrature(2);
  // Two normal-trace moments per edge against 1 and the edge Legendre 2s-1,
  // with s running from the lower to the higher global vertex.
  std::vector<double> m0(m.num_edges()), m1(m.num_edges());
  for (int j = 0; j < m.num_edges(); ++j) {
    double a = 0.0, b = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double s = rule.points[q];
      const double un = mean_normal_trace(m, u, j, s);
      a += rule.weights[q] * un;
      b += rule.weights[q] * un * (2.0 * s - 1.0);
    }
    m0[j] = a * m.edge_length(j);
    m1[j] = b * m.edge_length(j);
  }

  std::vector<double> coeffs(6 * m.num_triangles());
  for (int k = 0; k < m.num_triangles(); ++k) {
    Eigen::Matrix<double, 6, 6> A;
    Eigen::Matrix<double, 6, 1> b;
    for (int i = 0; i < 3; ++i) {
      const int j = m.tri_edges(k)[i];
      const Edge& e = m.edge(j);
      const double len = m.edge_length(j);
      for (int mom = 0; mom < 2; ++mom) {
        const int row = 2 * i + mom;
        for (int c = 0; c < 6; ++c) A(row, c) = 0.0;
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
          const double s = rule.points[q];
          const Vec2 x = m.vertex(e.v0) * (1.0 - s) + m.vertex(e.v1) * s;
          const double qv = (mom == 0) ? 1.0 : (2.0 * s - 1.0);
          const double w = rule.weights[q] * len * qv;
          // basis: (1,0),(x,0),(y,0),(0,1),(0,x),(0,y)
          A(row, 0) += w * e.normal.x;
          A(row, 1) += w * e.normal.x * x.x;
          A(row, 2) += w * e.normal.x * x.y;
          A(row, 3) += w * e.normal.y;
          A(row, 4) += w * e.normal.y * x.x;
          A(row, 5) += w * e.normal.y * x.y;
        }
        b(row) = (mom == 0) ? m0[j] : m1[j];
      }
    }
    const Eigen::Matrix<double, 6, 1> a = A.fullPivLu().solve(b);
    for (int c = 0; c < 6; ++c) coeffs[6 * k + c] = a(c);
  }
  return ProjectedVelocity::bdm1(std::move(coeffs));
}

}  // namespace oldroyd
