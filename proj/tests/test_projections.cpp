#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "oldroyd/projections.hpp"

using namespace oldroyd;

namespace {

std::shared_ptr<VectorField> random_p2_field(const Mesh& m, std::mt19937_64& rng,
                                             bool zero_boundary = true) {
  auto f = std::make_shared<VectorField>();
  f->dofs = std::make_shared<DofMap>(build_dof_map(m, SpaceSpec::vector(Family::P2Vector)));
  f->coeff.assign(2 * f->dofs->num_nodes, 0.0);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int n = 0; n < f->dofs->num_nodes; ++n) {
    const auto& node = f->dofs->nodes[n];
    bool boundary = node.anchor == DofMap::Anchor::Vertex
                        ? m.vertex_on_boundary(node.anchor_index)
                        : m.edge(node.anchor_index).on_boundary();
    if (zero_boundary && boundary) continue;
    f->coeff[2 * n] = uni(rng);
    f->coeff[2 * n + 1] = uni(rng);
  }
  return f;
}

/// Elementwise integral of div u computed from the boundary flux.
double element_div_integral(const Mesh& m, const VelocityEvaluator& u, int k) {
  const EdgeRule& rule = edge_quadrature(3);
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    const int j = m.tri_edges(k)[i];
    const Edge& e = m.edge(j);
    const double sign = (e.left == k) ? 1.0 : -1.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2 x = m.vertex(e.v0) * (1.0 - rule.points[q]) +
                     m.vertex(e.v1) * rule.points[q];
      const Vec2 uv = u.value(m, k, m.barycentric(k, x));
      total += rule.weights[q] * m.edge_length(j) * sign * uv.dot(e.normal);
    }
  }
  return total;
}

double max_normal_jump(const Mesh& m, const VelocityEvaluator& u) {
  const EdgeRule& rule = edge_quadrature(3);
  double worst = 0.0;
  for (int j = 0; j < m.num_edges(); ++j) {
    const Edge& e = m.edge(j);
    if (e.on_boundary()) continue;
    for (double s : rule.points) {
      const Vec2 x = m.vertex(e.v0) * (1.0 - s) + m.vertex(e.v1) * s;
      const double l = u.value(m, e.left, m.barycentric(e.left, x)).dot(e.normal);
      const double r = u.value(m, e.right, m.barycentric(e.right, x)).dot(e.normal);
      worst = std::max(worst, std::abs(l - r));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("project_rot: zero input, idempotence, solenoidal output") {
  const Mesh m = barycentric_refine(build_structured_mesh(3, 3));

  SUBCASE("zero maps to zero") {
    const ProjectedVelocity p = project_rot(m, ZeroVelocity{});
    for (double c : p.coefficients()) CHECK(c == doctest::Approx(0.0));
  }

  SUBCASE("curl fields are reproduced") {
    // build a curl of a P1 potential vanishing on the boundary
    std::vector<double> pot(m.num_vertices(), 0.0);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int v = 0; v < m.num_vertices(); ++v)
      if (!m.vertex_on_boundary(v)) pot[v] = uni(rng);
    const ProjectedVelocity base = ProjectedVelocity::curl_potential(pot);
    const ProjectedVelocity p = project_rot(m, base);
    for (int v = 0; v < m.num_vertices(); ++v)
      CHECK(p.coefficients()[v] == doctest::Approx(pot[v]).epsilon(1e-11));
  }

  SUBCASE("arbitrary input becomes divergence free with matching normals") {
    std::mt19937_64 rng(37);
    const auto u = random_p2_field(m, rng);
    const ProjectedVelocity p = project_rot(m, FEVelocity(u));
    for (int k = 0; k < m.num_triangles(); ++k) {
      CHECK(p.element_divergence(m, k) == 0.0);
      CHECK(std::abs(element_div_integral(m, p, k)) <= 1e-12);
    }
    CHECK(max_normal_jump(m, p) <= 1e-12);
  }

  SUBCASE("a mesh without interior vertices is an error") {
    const Mesh flat = build_structured_mesh(1, 1);
    CHECK_THROWS_AS(project_rot(flat, ZeroVelocity{}), LinearSolverError);
  }
}

TEST_CASE("project_rt0: constants, divergence preservation, solenoidal inputs") {
  const Mesh m = barycentric_refine(build_structured_mesh(3, 2));

  SUBCASE("constants are reproduced") {
    AnalyticVelocity c([](const Vec2&) { return Vec2{1.0, 0.0}; });
    const ProjectedVelocity p = project_rt0(m, c);
    const QuadRule& rule = triangle_quadrature(2);
    for (int k = 0; k < m.num_triangles(); ++k)
      for (const auto& bq : rule.points) {
        const Vec2 v = p.value(m, k, bq);
        CHECK(v.x == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(v.y == doctest::Approx(0.0).epsilon(1e-12));
      }
  }

  SUBCASE("elementwise divergence integrals are preserved on random fields") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
      const auto u = random_p2_field(m, rng);
      const FEVelocity ue(u);
      const ProjectedVelocity p = project_rt0(m, ue);
      for (int k = 0; k < m.num_triangles(); ++k) {
        const double before = element_div_integral(m, ue, k);
        const double after = p.element_divergence(m, k) * m.area(k);
        CHECK(before == doctest::Approx(after).epsilon(1e-11).scale(1.0));
      }
      CHECK(max_normal_jump(m, p) <= 1e-12);
    }
  }

  SUBCASE("zero elementwise divergence integrals give solenoidal output") {
    std::vector<double> pot(m.num_vertices(), 0.0);
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int v = 0; v < m.num_vertices(); ++v)
      if (!m.vertex_on_boundary(v)) pot[v] = uni(rng);
    const ProjectedVelocity df = ProjectedVelocity::curl_potential(pot);
    const ProjectedVelocity p = project_rt0(m, df);
    for (int k = 0; k < m.num_triangles(); ++k)
      CHECK(std::abs(p.element_divergence(m, k)) <= 1e-12);
  }
}

TEST_CASE("project_bdm: affine reproduction and divergence preservation") {
  const Mesh m = barycentric_refine(build_structured_mesh(2, 3));

  SUBCASE("divergence-free affine fields are reproduced") {
    AnalyticVelocity a([](const Vec2& p) { return Vec2{p.x, -p.y}; });
    const ProjectedVelocity p = project_bdm(m, a);
    const QuadRule& rule = triangle_quadrature(2);
    for (int k = 0; k < m.num_triangles(); ++k)
      for (const auto& bq : rule.points) {
        const Vec2 x = m.point(k, bq);
        const Vec2 v = p.value(m, k, bq);
        CHECK(v.x == doctest::Approx(x.x).epsilon(1e-11));
        CHECK(v.y == doctest::Approx(-x.y).epsilon(1e-11));
      }
  }

  SUBCASE("divergence integrals preserved, normals single-valued") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 20; ++trial) {
      const auto u = random_p2_field(m, rng);
      const FEVelocity ue(u);
      const ProjectedVelocity p = project_bdm(m, ue);
      for (int k = 0; k < m.num_triangles(); ++k) {
        const double before = element_div_integral(m, ue, k);
        const double after = p.element_divergence(m, k) * m.area(k);
        CHECK(before == doctest::Approx(after).epsilon(1e-11).scale(1.0));
      }
      CHECK(max_normal_jump(m, p) <= 1e-12);
    }
  }
}

TEST_CASE("bdm interpolates a smooth solenoidal field no worse than rt0") {
  AnalyticVelocity smooth([](const Vec2& p) {
    return Vec2{std::sin(M_PI * p.x) * std::cos(M_PI * p.y) * M_PI,
                -std::cos(M_PI * p.x) * std::sin(M_PI * p.y) * M_PI};
  });
  double prev_bdm = 0.0;
  for (int n : {4, 8, 16}) {
    const Mesh m = build_structured_mesh(n, n);
    const ProjectedVelocity rt = project_rt0(m, smooth);
    const ProjectedVelocity bd = project_bdm(m, smooth);
    const QuadRule& rule = triangle_quadrature(6);
    double err_rt = 0.0, err_bd = 0.0;
    for (int k = 0; k < m.num_triangles(); ++k) {
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Vec2 exact = smooth.value(m, k, rule.points[q]);
        const Vec2 ert = rt.value(m, k, rule.points[q]) - exact;
        const Vec2 ebd = bd.value(m, k, rule.points[q]) - exact;
        err_rt += rule.weights[q] * m.area(k) * ert.dot(ert);
        err_bd += rule.weights[q] * m.area(k) * ebd.dot(ebd);
      }
    }
    CHECK(std::sqrt(err_bd) <= std::sqrt(err_rt));
    if (prev_bdm > 0.0) CHECK(std::sqrt(err_bd) < prev_bdm);
    prev_bdm = std::sqrt(err_bd);
  }
}
