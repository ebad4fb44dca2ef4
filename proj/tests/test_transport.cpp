#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "oldroyd/transport.hpp"
#include "oldroyd/projections.hpp"

using namespace oldroyd;

TEST_CASE("backward flow: rest, translation, rigid rotation") {
  const Mesh m = build_structured_mesh(8, 8);
  std::vector<Vec2> pts;
  std::vector<int> hints;
  for (int k = 0; k < m.num_triangles(); ++k) {
    pts.push_back(m.barycenter(k));
    hints.push_back(k);
  }

  SUBCASE("zero velocity keeps the feet in place") {
    const auto feet = integrate_backward_flow(m, ZeroVelocity{}, pts, hints, 0.1, 4);
    for (std::size_t p = 0; p < pts.size(); ++p) {
      CHECK((feet.feet[p].position - pts[p]).norm() <= 1e-15);
      CHECK(feet.feet[p].element == static_cast<int>(p));
    }
  }

  SUBCASE("constant velocity translates exactly") {
    AnalyticVelocity u([](const Vec2&) { return Vec2{1.0, 0.0}; });
    std::vector<Vec2> inner{{0.5, 0.5}, {0.7, 0.3}, {0.9, 0.8}};
    const auto feet = integrate_backward_flow(m, u, inner, {0, 0, 0}, 0.1, 1);
    for (std::size_t p = 0; p < inner.size(); ++p) {
      CHECK(feet.feet[p].position.x == doctest::Approx(inner[p].x - 0.1).epsilon(1e-14));
      CHECK(feet.feet[p].position.y == doctest::Approx(inner[p].y).epsilon(1e-14));
    }
  }

  SUBCASE("rigid rotation matches the closed form to 1e-10") {
    AnalyticVelocity u([](const Vec2& p) { return Vec2{-(p.y - 0.5), p.x - 0.5}; });
    const double dt = 0.01;
    std::vector<Vec2> inner{{0.7, 0.5}, {0.5, 0.8}, {0.3, 0.35}};
    const auto feet = integrate_backward_flow(m, u, inner, {0, 0, 0}, dt, 4);
    for (std::size_t p = 0; p < inner.size(); ++p) {
      const double c = std::cos(-dt), s = std::sin(-dt);
      const Vec2 d{inner[p].x - 0.5, inner[p].y - 0.5};
      const Vec2 exact{0.5 + c * d.x - s * d.y, 0.5 + s * d.x + c * d.y};
      CHECK((feet.feet[p].position - exact).norm() <= 1e-10);
    }
  }

  SUBCASE("a foot leaving the domain raises a transport error") {
    AnalyticVelocity u([](const Vec2&) { return Vec2{10.0, 0.0}; });
    std::vector<Vec2> inner{{0.05, 0.5}};
    CHECK_THROWS_AS(integrate_backward_flow(m, u, inner, {0}, 0.1, 2), TransportError);
  }
}

TEST_CASE("divergence-free flows nearly preserve small triangle areas") {
  const Mesh m = barycentric_refine(build_structured_mesh(4, 4));
  // curl of a smooth stream function; pointwise solenoidal and Lipschitz
  AnalyticVelocity u([](const Vec2& p) {
    return Vec2{std::sin(M_PI * p.x) * std::cos(M_PI * p.y) * M_PI,
                -std::cos(M_PI * p.x) * std::sin(M_PI * p.y) * M_PI};
  });

  const double dt = 0.01;
  for (int k = 0; k < m.num_triangles(); k += 7) {
    // a small triangle around the barycenter
    const Vec2 c = m.barycenter(k);
    const double r = 1e-3;
    std::vector<Vec2> tri{{c.x + r, c.y}, {c.x, c.y + r}, {c.x - r, c.y - r}};
    const auto feet = integrate_backward_flow(m, u, tri, {k, k, k}, dt, 4);
    const Vec2 a = feet.feet[0].position, b = feet.feet[1].position,
               d = feet.feet[2].position;
    const double area0 = 0.5 * std::abs((tri[1] - tri[0]).cross(tri[2] - tri[0]));
    const double area1 = 0.5 * std::abs((b - a).cross(d - a));
    CHECK(std::abs(area1 - area0) <= 1e-2 * dt * dt * area0 + 1e-10);
  }
}

TEST_CASE("pullback of stress fields at feet") {
  const Mesh m = build_structured_mesh(2, 1, {0.0, 0.0}, {2.0, 1.0});
  SymTensorField f;
  f.space = SpaceSpec::tensor(Family::P0Tensor);
  f.dofs = std::make_shared<DofMap>(build_dof_map(m, f.space));
  f.values.assign(f.dofs->num_nodes, SymMat::identity());

  SUBCASE("constant fields pull back to themselves") {
    CharacteristicFeet feet;
    feet.feet.push_back({{0.3, 0.3}, 0, m.barycentric(0, {0.3, 0.3})});
    const auto vals = pullback_field(m, f, feet);
    CHECK((vals[0] - SymMat::identity()).norm() <= 1e-15);
  }

  SUBCASE("feet crossing an element boundary read the upstream element") {
    // mark the elements differently
    for (int k = 0; k < m.num_triangles(); ++k)
      f.values[k] = SymMat::identity() * static_cast<double>(k + 1);
    AnalyticVelocity u([](const Vec2&) { return Vec2{1.0, 0.0}; });
    // a point just right of the x=1 line, with dt large enough to cross
    std::vector<Vec2> pts{{1.05, 0.75}};
    const int start = m.locate(pts[0], 0).element;
    const auto feet = integrate_backward_flow(m, u, pts, {start}, 0.2, 1);
    const int upstream = m.locate({0.85, 0.75}, 0).element;
    CHECK(feet.feet[0].element == upstream);
    const auto vals = pullback_field(m, f, feet);
    CHECK(vals[0].a11 == doctest::Approx(upstream + 1.0));
  }
}

TEST_CASE("edge upwind data") {
  const Mesh m = build_structured_mesh(1, 1);

  SUBCASE("uniform flow marks left of a vertical edge as upstream") {
    AnalyticVelocity u([](const Vec2&) { return Vec2{1.0, 0.0}; });
    const EdgeUpwindData data = build_edge_upwind(m, u);
    int seen = 0;
    for (int j = 0; j < m.num_edges(); ++j) {
      const Edge& e = m.edge(j);
      if (e.on_boundary()) continue;
      for (const auto& pt : data.edges[j]) {
        ++seen;
        CHECK(pt.abs_un == doctest::Approx(std::abs(e.normal.x)).epsilon(1e-14));
        // the upstream element lies against the flow
        const Vec2 up = m.barycenter(pt.upstream), dn = m.barycenter(pt.downstream);
        CHECK(up.x < dn.x);
      }
    }
    CHECK(seen > 0);
  }

  SUBCASE("tangential flow contributes nothing") {
    // the internal edge of the 1x1 mesh is the diagonal (0,0)-(1,1)
    AnalyticVelocity u([](const Vec2&) { return Vec2{1.0, 1.0}; });
    const EdgeUpwindData data = build_edge_upwind(m, u);
    for (int j = 0; j < m.num_edges(); ++j) {
      const Edge& e = m.edge(j);
      if (e.on_boundary()) continue;
      for (const auto& pt : data.edges[j]) CHECK(pt.abs_un <= 1e-14);
    }
  }

  SUBCASE("reversing the velocity swaps upstream and downstream") {
    const Mesh mm = build_structured_mesh(3, 3);
    AnalyticVelocity u([](const Vec2& p) { return Vec2{0.3 + p.y, 0.7 - p.x}; });
    AnalyticVelocity mu([](const Vec2& p) { return Vec2{-0.3 - p.y, -0.7 + p.x}; });
    const EdgeUpwindData d1 = build_edge_upwind(mm, u);
    const EdgeUpwindData d2 = build_edge_upwind(mm, mu);
    for (int j = 0; j < mm.num_edges(); ++j) {
      REQUIRE(d1.edges[j].size() == d2.edges[j].size());
      for (std::size_t q = 0; q < d1.edges[j].size(); ++q) {
        CHECK(d1.edges[j][q].upstream == d2.edges[j][q].downstream);
        CHECK(d1.edges[j][q].downstream == d2.edges[j][q].upstream);
      }
    }
  }
}

TEST_CASE("upwind jump identity against the elementwise boundary assembly") {
  // sum_j int |u.n| [phi] = -sum_k int_{dK} (u.n_K) phi for elementwise
  // constant phi and flux-carrying u with no boundary flux.
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Mesh m = build_structured_mesh(2 + trial % 3, 2 + (trial / 3) % 3);
    std::vector<double> flux(m.num_edges(), 0.0);
    for (int j = 0; j < m.num_edges(); ++j)
      if (!m.edge(j).on_boundary()) flux[j] = uni(rng);
    const ProjectedVelocity u = ProjectedVelocity::rt0(flux);
    std::vector<double> phi(m.num_triangles());
    for (auto& p : phi) p = uni(rng);

    const EdgeUpwindData data = build_edge_upwind(m, u);
    double lhs = 0.0;
    for (int j = 0; j < m.num_edges(); ++j)
      for (const auto& pt : data.edges[j])
        lhs += pt.weight * pt.abs_un * (phi[pt.downstream] - phi[pt.upstream]);

    double rhs = 0.0;
    const EdgeRule& rule = edge_quadrature(2);
    for (int k = 0; k < m.num_triangles(); ++k) {
      for (int i = 0; i < 3; ++i) {
        const int j = m.tri_edges(k)[i];
        const Edge& e = m.edge(j);
        const double sign = (e.left == k) ? 1.0 : -1.0;
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
          const Vec2 x = m.vertex(e.v0) * (1.0 - rule.points[q]) +
                         m.vertex(e.v1) * rule.points[q];
          const double un = u.value(m, k, m.barycentric(k, x)).dot(e.normal) * sign;
          rhs -= rule.weights[q] * m.edge_length(j) * un * phi[k];
        }
      }
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12).scale(1.0 + std::abs(lhs)));
  }
}
