#include <doctest.h>

#include <cmath>
#include <random>

#include "oldroyd/tensor.hpp"

using namespace oldroyd;

namespace {

SymMat rotated_diag(double l1, double l2, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c};
}

SymMat random_spd(std::mt19937_64& rng, double lmin, double lmax) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double l1 = lmin + (lmax - lmin) * uni(rng);
  const double l2 = lmin + (lmax - lmin) * uni(rng);
  return rotated_diag(l1, l2, 2.0 * M_PI * uni(rng));
}

}  // namespace

TEST_CASE("matrix log: identity and diagonal cases") {
  const SymMat id = SymMat::identity();
  const SymMat l = spd_log(SpdMat(id));
  CHECK(l.a11 == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(l.a12 == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(l.a22 == doctest::Approx(0.0).epsilon(1e-15));

  const SymMat d{std::exp(1.0), 0.0, std::exp(2.0)};
  const SymMat ld = spd_log(SpdMat(d));
  CHECK(ld.a11 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ld.a22 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(ld.a12 == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("matrix log of a rotated matrix: trace equals log det") {
  const SymMat s = rotated_diag(2.0, 0.5, M_PI / 6.0);
  const SymMat l = spd_log(SpdMat(s));
  CHECK(l.trace() == doctest::Approx(0.0).epsilon(1e-12));  // ln det = ln 1
  const SymMat expected = rotated_diag(std::log(2.0), -std::log(2.0), M_PI / 6.0);
  CHECK(l.a11 == doctest::Approx(expected.a11).epsilon(1e-13));
  CHECK(l.a12 == doctest::Approx(expected.a12).epsilon(1e-13));
  CHECK(l.a22 == doctest::Approx(expected.a22).epsilon(1e-13));
}

TEST_CASE("matrix exp: zero and diagonal cases, overflow guard") {
  const SymMat z{};
  const SymMat e = spd_exp(z).sym();
  CHECK(e.a11 == doctest::Approx(1.0));
  CHECK(e.a22 == doctest::Approx(1.0));
  CHECK(e.a12 == doctest::Approx(0.0));

  const SymMat d{1.0, 0.0, -1.0};
  const SymMat ed = spd_exp(d).sym();
  CHECK(ed.a11 == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(ed.a22 == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

  CHECK_THROWS_AS(spd_exp(SymMat{800.0, 0.0, 800.0}), OverflowError);
}

TEST_CASE("log and exp are mutually inverse on spectra in [-3, 3]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(-3.0, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    // symmetric matrix with eigenvalues in [-3, 3]
    const SymMat s = rotated_diag(uni(rng), uni(rng), uni(rng));
    const SymMat back = spd_log(spd_exp(s));
    worst = std::max(worst, (back - s).norm() / (1.0 + s.norm()));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("non-SPD input is a domain error naming the eigenvalue") {
  try {
    SpdMat bad(SymMat{1.0, 0.0, -2.0});
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("-2") != std::string::npos);
  }
}

TEST_CASE("entropy terms: equality case and scalar evaluation") {
  const auto at_id = entropy_terms(SpdMat(SymMat::identity()));
  CHECK(at_id.first == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(at_id.second == doctest::Approx(0.0).epsilon(1e-15));

  const auto d = entropy_terms(SpdMat(SymMat{2.0, 0.0, 0.5}));
  CHECK(d.first == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(d.second == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("entropy terms are nonnegative on random SPD matrices") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto [rel, sym] = entropy_terms(SpdMat(random_spd(rng, 0.05, 20.0)));
    CHECK(rel >= -1e-12);
    CHECK(sym >= -1e-12);
  }
}

TEST_CASE("pair inequalities: equality at s = t, scalar case, random slacks") {
  const SpdMat s(rotated_diag(3.0, 0.7, 0.3));
  const auto eq = verify_pair_inequalities(s, s);
  CHECK(eq.relative_entropy == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(eq.bregman == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(eq.trace_product > 0.0);

  const auto r = verify_pair_inequalities(SpdMat(SymMat{2.0, 0.0, 2.0}),
                                          SpdMat(SymMat::identity()));
  CHECK(r.relative_entropy == doctest::Approx(2.0 - std::log(4.0)).epsilon(1e-14));

  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    const auto rep = verify_pair_inequalities(SpdMat(random_spd(rng, 0.01, 50.0)),
                                              SpdMat(random_spd(rng, 0.01, 50.0)));
    CHECK(rep.worst() >= -1e-12);
  }
}

TEST_CASE("gradient decomposition: identity reference recovers sym/antisym") {
  const Mat2 g{0.3, 1.2, -0.4, 0.9};
  const GradDecomposition d = decompose_gradient(g, SpdMat(SymMat::identity()));
  CHECK(d.n == doctest::Approx(0.0));
  CHECK(d.omega == doctest::Approx(antisym_part(g)));
  CHECK((d.b - sym_part(g)).norm() == doctest::Approx(0.0));
}

TEST_CASE("gradient decomposition: worked shear case") {
  const Mat2 g{0.0, 1.0, 0.0, 0.0};
  const GradDecomposition d =
      decompose_gradient(g, SpdMat(SymMat{1.0, 0.0, 0.5}), 1e-10);
  CHECK(d.omega == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(d.n == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(d.b.norm() == doctest::Approx(0.0).epsilon(1e-13));
  const Mat2 rec = d.recompose(SymMat{1.0, 0.0, 0.5});
  CHECK((rec - g).norm() <= 1e-13);
}

TEST_CASE("gradient decomposition: reconstruction and commutation properties") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const SymMat s = random_spd(rng, 0.1, 5.0);
    const auto ev = s.eigenvalues();
    if (ev[1] - ev[0] < 1e-6) continue;  // stay away from the degenerate branch
    const Mat2 g{uni(rng), uni(rng), uni(rng), uni(rng)};
    const GradDecomposition d = decompose_gradient(g, SpdMat(s), 1e-10);
    CHECK((d.recompose(s) - g).norm() <= 1e-12 * (1.0 + g.norm()));
    CHECK(d.b.trace() == doctest::Approx(g.trace()).epsilon(1e-12));
    const Mat2 comm = d.b.full() * s.full() - s.full() * d.b.full();
    CHECK(comm.norm() <= 1e-12 * (1.0 + d.b.norm()) * (1.0 + s.norm()));
  }
}

TEST_CASE("gradient decomposition: degenerate branch is the commuting split") {
  const Mat2 g{0.1, 0.7, -0.2, 0.4};
  const SymMat s = SymMat::identity() * 2.5;
  const GradDecomposition d = decompose_gradient(g, SpdMat(s), 1e-10);
  CHECK(d.n == 0.0);
  CHECK(d.omega == doctest::Approx(antisym_part(g)));
  CHECK((d.recompose(s) - g).norm() <= 1e-14);
}

TEST_CASE("finite-difference trace identities") {
  SUBCASE("constant path gives zero residuals") {
    auto path = [](double) { return rotated_diag(2.0, 0.5, 0.4); };
    const auto [r1, r2] = jacobi_check(path, 0.0, 1e-4);
    CHECK(r1 == 0.0);
    CHECK(r2 == 0.0);
  }
  SUBCASE("linear diagonal path") {
    auto path = [](double t) { return SymMat{1.0 + t, 0.0, 2.0}; };
    const auto [r1, r2] = jacobi_check(path, 0.0, 1e-4);
    CHECK(r1 <= 1e-8);  // exact derivative is 1
    CHECK(r2 <= 1e-8);
  }
  SUBCASE("rotating path stays within the h^2 budget") {
    auto path = [](double t) { return rotated_diag(2.0, 1.0, t); };
    const auto [r1, r2] = jacobi_check(path, 0.0, 1e-4);
    CHECK(r1 <= 1e-7);
    CHECK(r2 <= 1e-7);
  }
  SUBCASE("residuals scale quadratically when the spectrum moves") {
    auto path = [](double t) { return rotated_diag(2.0 + std::sin(t), 1.0, t); };
    const auto [r1, r2] = jacobi_check(path, 0.3, 1e-4);
    const auto [c1, c2] = jacobi_check(path, 0.3, 1e-2);
    CHECK(c1 / std::max(r1, 1e-300) > 1e3);  // ~ (h2/h1)^2 = 1e4 up to constants
    CHECK(c2 / std::max(r2, 1e-300) > 1e3);
  }
  SUBCASE("leaving the SPD cone is a domain error") {
    auto path = [](double t) { return SymMat{1.0 - 20.0 * t, 0.0, 1.0}; };
    CHECK_THROWS_AS(jacobi_check(path, 0.0, 0.1), DomainError);
  }
}
