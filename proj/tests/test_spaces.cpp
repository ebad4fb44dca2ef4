#include <doctest.h>

#include <random>

#include "oldroyd/spaces.hpp"

using namespace oldroyd;

namespace {
double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

/// int over the reference triangle of l0^a l1^b l2^c divided by the area.
double bary_monomial_mean(int a, int b, int c) {
  return 2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2);
}
}  // namespace

TEST_CASE("dof counts per family") {
  const Mesh m = build_structured_mesh(1, 1);  // 4 vertices, 5 edges, 2 triangles
  CHECK(build_dof_map(m, SpaceSpec::scalar(Family::P0)).num_nodes == 2);
  CHECK(build_dof_map(m, SpaceSpec::vector(Family::P2Vector)).num_nodes == 9);
  CHECK(build_dof_map(m, SpaceSpec::vector(Family::CRVector)).num_nodes == 5);
  CHECK(build_dof_map(m, SpaceSpec::scalar(Family::P1)).num_nodes == 4);
  CHECK(build_dof_map(m, SpaceSpec::scalar(Family::P1Disc)).num_nodes == 6);
  CHECK(build_dof_map(m, SpaceSpec::tensor(Family::P1DiscTensor)).dofs() == 18);
}

TEST_CASE("shape functions: nodal values and partitions of unity") {
  const Mesh m = build_structured_mesh(1, 1);

  SUBCASE("P1 at a vertex is an indicator") {
    const BasisEval b = eval_basis(SpaceSpec::scalar(Family::P1), m, 0, {1.0, 0.0, 0.0});
    CHECK(b.value[0] == 1.0);
    CHECK(b.value[1] == 0.0);
    CHECK(b.value[2] == 0.0);
  }
  SUBCASE("P2 at the barycenter") {
    const BasisEval b = eval_basis(SpaceSpec::vector(Family::P2Vector), m, 0,
                                   {1.0 / 3, 1.0 / 3, 1.0 / 3});
    for (int i = 0; i < 3; ++i)
      CHECK(b.value[i] == doctest::Approx(-1.0 / 9).epsilon(1e-14));
    for (int i = 3; i < 6; ++i)
      CHECK(b.value[i] == doctest::Approx(4.0 / 9).epsilon(1e-14));
  }
  SUBCASE("partition of unity and gradient sums") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      double a = uni(rng), b = uni(rng) * (1.0 - a);
      const std::array<double, 3> bary{a, b, 1.0 - a - b};
      for (Family f : {Family::P1, Family::P2Vector}) {
        const SpaceSpec spec{f, f == Family::P2Vector ? 2 : 1};
        const BasisEval be = eval_basis(spec, m, 0, bary);
        double sum = 0.0;
        Vec2 gsum{0.0, 0.0};
        for (int i = 0; i < be.n; ++i) {
          sum += be.value[i];
          gsum += be.ref_grad[i];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(gsum.norm() <= 1e-13);
      }
    }
  }
  SUBCASE("CR basis is one on its own edge midpoint") {
    const BasisEval b =
        eval_basis(SpaceSpec::vector(Family::CRVector), m, 0, {0.0, 0.5, 0.5});
    CHECK(b.value[0] == doctest::Approx(1.0));
    CHECK(b.value[1] == doctest::Approx(0.0));
    CHECK(b.value[2] == doctest::Approx(0.0));
  }
}

TEST_CASE("quadrature rules: weights and exactness on monomials") {
  for (int order : {1, 2, 3, 6}) {
    const QuadRule& rule = triangle_quadrature(order);
    double sum = 0.0;
    for (double w : rule.weights) {
      CHECK(w > 0.0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    // exactness on all barycentric monomials up to the stated degree
    for (int a = 0; a <= rule.degree; ++a)
      for (int b = 0; a + b <= rule.degree; ++b) {
        const int c = rule.degree - a - b;
        double got = 0.0;
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
          const auto& p = rule.points[q];
          got += rule.weights[q] * std::pow(p[0], a) * std::pow(p[1], b) *
                 std::pow(p[2], c);
        }
        CHECK(got == doctest::Approx(bary_monomial_mean(a, b, c)).epsilon(1e-12));
      }
  }
  CHECK_THROWS_AS(triangle_quadrature(4), ConfigError);
}

TEST_CASE("order-2 rule integrates x^2 on the reference triangle") {
  // int_T x^2 = 1/12 over the unit reference triangle of area 1/2.
  const Mesh m = Mesh::from_cells({{0, 0}, {1, 0}, {0, 1}}, {{{0, 1, 2}}});
  const QuadRule& rule = triangle_quadrature(2);
  double integral = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Vec2 p = m.point(0, rule.points[q]);
    integral += rule.weights[q] * p.x * p.x;
  }
  integral *= m.area(0);
  CHECK(integral == doctest::Approx(1.0 / 12).epsilon(1e-14));
}

TEST_CASE("barycenter interpolation: constants, linear mean, exp commutation") {
  const Mesh m = Mesh::from_cells({{0, 0}, {1, 0}, {0, 1}}, {{{0, 1, 2}}});

  SymTensorField f;
  f.space = SpaceSpec::tensor(Family::P1DiscTensor);
  f.dofs = std::make_shared<DofMap>(build_dof_map(m, f.space));
  f.values.resize(3);

  SUBCASE("a constant field is reproduced") {
    for (auto& v : f.values) v = SymMat{2.0, 0.3, 1.0};
    const SymTensorField p = pi_h(m, f);
    CHECK((p.values[0] - SymMat{2.0, 0.3, 1.0}).norm() <= 1e-15);
  }

  SUBCASE("the component x has element mean 1/3") {
    // nodal values of phi(x,y) = x at the vertices
    f.values[0] = SymMat{0.0, 0.0, 0.0};
    f.values[1] = SymMat{1.0, 0.0, 0.0};
    f.values[2] = SymMat{0.0, 0.0, 0.0};
    const SymTensorField p = pi_h(m, f);
    CHECK(p.values[0].a11 == doctest::Approx(1.0 / 3).epsilon(1e-15));
  }

  SUBCASE("interpolation commutes with the matrix exponential") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uni(-1.5, 1.5);
    for (int trial = 0; trial < 200; ++trial) {
      for (auto& v : f.values) v = SymMat{uni(rng), uni(rng), uni(rng)};
      const SymMat a = spd_exp(pi_h(m, f).values[0]).sym();
      const SymMat b =
          spd_exp(f.value(m, 0, {1.0 / 3, 1.0 / 3, 1.0 / 3})).sym();
      CHECK((a - b).norm() <= 1e-15 * (1.0 + a.norm()));
    }
  }
}

TEST_CASE("pi_h agrees with the elementwise L2 projection on random fields") {
  const Mesh m = barycentric_refine(build_structured_mesh(2, 2));
  SymTensorField f;
  f.space = SpaceSpec::tensor(Family::P1DiscTensor);
  f.dofs = std::make_shared<DofMap>(build_dof_map(m, f.space));
  f.values.resize(f.dofs->num_nodes);
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (auto& v : f.values) v = SymMat{uni(rng), uni(rng), uni(rng)};
  const SymTensorField p = pi_h(m, f);
  const QuadRule& rule = triangle_quadrature(3);
  for (int k = 0; k < m.num_triangles(); ++k) {
    SymMat mean{};
    for (std::size_t q = 0; q < rule.points.size(); ++q)
      mean += f.value(m, k, rule.points[q]) * rule.weights[q];
    CHECK((mean - p.values[k]).norm() <= 1e-13 * (1.0 + mean.norm()));
  }
}
