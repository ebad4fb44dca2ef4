#pragma once

#include <array>
#include <functional>
#include <utility>

#include "oldroyd/errors.hpp"
#include "oldroyd/geometry.hpp"

namespace oldroyd {

/// Symmetric 2x2 matrix stored as its three independent entries.
struct SymMat {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;

  static SymMat identity() { return {1.0, 0.0, 1.0}; }

  SymMat operator+(const SymMat& o) const { return {a11 + o.a11, a12 + o.a12, a22 + o.a22}; }
  SymMat operator-(const SymMat& o) const { return {a11 - o.a11, a12 - o.a12, a22 - o.a22}; }
  SymMat operator*(double s) const { return {a11 * s, a12 * s, a22 * s}; }
  SymMat& operator+=(const SymMat& o) {
    a11 += o.a11;
    a12 += o.a12;
    a22 += o.a22;
    return *this;
  }

  double trace() const { return a11 + a22; }
  /// Determinant with Kahan's fma compensation; accurate to a few ulps even
  /// under heavy cancellation (ill-conditioned SPD matrices).
  double det() const {
    const double w = a12 * a12;
    const double e = std::fma(a12, a12, -w);
    return std::fma(a11, a22, -w) - e;
  }

  /// Double contraction A:B = sum_ij A_ij B_ij.
  double contract(const SymMat& o) const {
    return a11 * o.a11 + 2.0 * a12 * o.a12 + a22 * o.a22;
  }
  /// A:G for a general 2x2 matrix G.
  double contract(const Mat2& g) const {
    return a11 * g.m00 + a12 * (g.m01 + g.m10) + a22 * g.m11;
  }

  /// Frobenius norm.
  double norm() const { return std::sqrt(contract(*this)); }

  Mat2 full() const { return {a11, a12, a12, a22}; }

  /// Eigenvalues in ascending order (closed form). The smaller-magnitude
  /// eigenvalue comes from det/lambda to avoid the mid - delta cancellation.
  std::array<double, 2> eigenvalues() const {
    const double mid = 0.5 * (a11 + a22);
    const double delta = std::hypot(0.5 * (a11 - a22), a12);
    const double big = mid >= 0.0 ? mid + delta : mid - delta;
    const double small = big == 0.0 ? 0.0 : det() / big;
    return {std::min(big, small), std::max(big, small)};
  }
  double min_eigenvalue() const { return eigenvalues()[0]; }
  double spectral_radius() const {
    const auto ev = eigenvalues();
    return std::max(std::abs(ev[0]), std::abs(ev[1]));
  }

  SymMat inverse() const {
    const double d = det();
    return {a22 / d, -a12 / d, a11 / d};
  }
};

inline SymMat operator*(double s, const SymMat& m) { return m * s; }

inline SymMat sym_part(const Mat2& g) {
  return {g.m00, 0.5 * (g.m01 + g.m10), g.m11};
}
/// Antisymmetric part coefficient a, where antisym(g) = a * J, J = [[0,1],[-1,0]].
inline double antisym_part(const Mat2& g) { return 0.5 * (g.m01 - g.m10); }
/// The antisymmetric matrix a*J.
inline Mat2 antisym_mat(double a) { return {0.0, a, -a, 0.0}; }

/// Closed-form orthogonal eigendecomposition of a symmetric 2x2 matrix:
/// A = R diag(lambda1, lambda2) R^T with R = [[c,-s],[s,c]] a rotation and
/// lambda1 <= lambda2.
struct SymEigen {
  double lambda1;
  double lambda2;
  double c;
  double s;

  /// Rebuild R diag(f1, f2) R^T with the eigenvalues replaced by (f1, f2).
  SymMat recompose(double f1, double f2) const {
    const double cc = c * c, ss = s * s, cs = c * s;
    return {f1 * cc + f2 * ss, (f1 - f2) * cs, f1 * ss + f2 * cc};
  }
};

SymEigen sym_eigen(const SymMat& a);

/// Threshold below which an eigenvalue no longer counts as strictly positive;
/// distinguishes genuine positivity loss from roundoff.
inline double spd_eigenvalue_floor(const SymMat& a) {
  return 1e-14 * (1.0 + a.spectral_radius());
}

bool is_spd(const SymMat& a);

/// Validated SPD matrix. Construction throws DomainError (naming the offending
/// eigenvalue) unless both eigenvalues are strictly positive.
class SpdMat {
 public:
  explicit SpdMat(const SymMat& m);
  const SymMat& sym() const { return m_; }
  operator const SymMat&() const { return m_; }

 private:
  SymMat m_;
};

/// Matrix logarithm of an SPD matrix through its eigendecomposition.
SymMat spd_log(const SpdMat& s);
/// Matrix exponential of a symmetric matrix; throws OverflowError when an
/// eigenvalue is too large for double precision.
SpdMat spd_exp(const SymMat& s);

/// (tr(s - ln s - I), tr(s + s^-1 - 2I)); both are nonnegative for SPD s.
std::pair<double, double> entropy_terms(const SpdMat& s);

/// Numeric slack of each trace inequality for a pair of SPD matrices.
/// A nonnegative slack means the inequality holds.
struct PairInequalityReport {
  double trace_product;      ///< tr(s t) >= 0
  double relative_entropy;   ///< tr(s t^-1 - I) - tr(ln s - ln t)
  double bregman;            ///< tr((ln s - ln t) s) - tr(s - t)

  double worst() const { return std::min({trace_product, relative_entropy, bregman}); }
};

PairInequalityReport verify_pair_inequalities(const SpdMat& s, const SpdMat& t);

/// Pointwise decomposition g = Omega + B + N s^-1 with Omega, N antisymmetric
/// and B symmetric commuting with s. Antisymmetric matrices are stored by
/// their single coefficient: Omega = omega*J, N = n*J with J = [[0,1],[-1,0]].
struct GradDecomposition {
  double omega;
  SymMat b;
  double n;

  Mat2 recompose(const SymMat& s) const {
    const SymMat si = s.inverse();
    const Mat2 nsi = antisym_mat(n) * Mat2{si.a11, si.a12, si.a12, si.a22};
    return antisym_mat(omega) + b.full() + nsi;
  }
};

/// Identify (Omega, B, N) in the eigenbasis of s. When the eigenvalue gap of s
/// is below degeneracy_tol relative to its spectral radius the triple is not
/// unique; the commuting branch Omega = antisym(g), B = sym(g), N = 0 is
/// returned (exact when s is a multiple of the identity).
GradDecomposition decompose_gradient(const Mat2& g, const SpdMat& s,
                                     double degeneracy_tol = 1e-10);

/// Central finite-difference check of the Jacobi trace identities along a
/// smooth SPD path. Returns
///   |d/dt tr ln s - s':s^-1|  and  |d/dt tr s - (ln s)':s|
/// at t0, both O(h^2) for smooth paths.
std::pair<double, double> jacobi_check(const std::function<SymMat(double)>& path,
                                       double t0, double h);

}  // namespace oldroyd
