#include "oldroyd/tensor.hpp"

#include <cmath>
#include <sstream>

namespace oldroyd {

SymEigen sym_eigen(const SymMat& a) {
  const double mid = 0.5 * (a.a11 + a.a22);
  const double half_gap = 0.5 * (a.a11 - a.a22);
  const double delta = std::hypot(half_gap, a.a12);
  SymEigen e;
  const auto ev = a.eigenvalues();
  e.lambda1 = ev[0];
  e.lambda2 = ev[1];
  if (delta == 0.0) {
    e.c = 1.0;
    e.s = 0.0;
    return e;
  }
  // Eigenvector of lambda2; pick the better conditioned of the two columns of
  // (A - lambda1 I).
  double vx, vy;
  if (std::abs(half_gap + delta) >= std::abs(-half_gap + delta)) {
    vx = half_gap + delta;  // a11 - lambda1
    vy = a.a12;
  } else {
    vx = a.a12;
    vy = -half_gap + delta;  // a22 - lambda1
  }
  const double n = std::hypot(vx, vy);
  // R = [[c,-s],[s,c]] with second column the lambda2-eigenvector:
  // recompose() maps diag(f1,f2) through this rotation.
  e.c = -vy / n;
  e.s = vx / n;
  return e;
}

bool is_spd(const SymMat& a) {
  return a.min_eigenvalue() > spd_eigenvalue_floor(a);
}

SpdMat::SpdMat(const SymMat& m) : m_(m) {
  const auto ev = m.eigenvalues();
  if (!(ev[0] > spd_eigenvalue_floor(m))) {
    std::ostringstream os;
    os << "matrix is not symmetric positive definite: smallest eigenvalue "
       << ev[0] << " (floor " << spd_eigenvalue_floor(m) << ")";
    throw DomainError(os.str());
  }
}

SymMat spd_log(const SpdMat& s) {
  const SymEigen e = sym_eigen(s.sym());
  return e.recompose(std::log(e.lambda1), std::log(e.lambda2));
}

SpdMat spd_exp(const SymMat& s) {
  const SymEigen e = sym_eigen(s);
  // exp(709.7) is the largest representable double exponential.
  if (e.lambda2 > 709.0 || e.lambda1 < -709.0) {
    std::ostringstream os;
    os << "matrix exponential leaves double range: eigenvalues " << e.lambda1
       << ", " << e.lambda2;
    throw OverflowError(os.str());
  }
  return SpdMat(e.recompose(std::exp(e.lambda1), std::exp(e.lambda2)));
}

std::pair<double, double> entropy_terms(const SpdMat& s) {
  const SymEigen e = sym_eigen(s.sym());
  const double l1 = e.lambda1, l2 = e.lambda2;
  const double rel = (l1 - std::log(l1) - 1.0) + (l2 - std::log(l2) - 1.0);
  const double sym = (l1 + 1.0 / l1 - 2.0) + (l2 + 1.0 / l2 - 2.0);
  return {rel, sym};
}

PairInequalityReport verify_pair_inequalities(const SpdMat& s, const SpdMat& t) {
  const SymMat& sm = s.sym();
  const SymMat& tm = t.sym();
  PairInequalityReport r;
  r.trace_product = sm.contract(tm);  // = tr(s t) for symmetric factors

  const SymMat ti = tm.inverse();
  // tr(s t^-1) via the full product.
  const double tr_sti = sm.a11 * ti.a11 + 2.0 * sm.a12 * ti.a12 + sm.a22 * ti.a22;
  const SymMat ls = spd_log(s);
  const SymMat lt = spd_log(t);
  r.relative_entropy = (tr_sti - 2.0) - (ls.trace() - lt.trace());

  r.bregman = (ls - lt).contract(sm) - (sm.trace() - tm.trace());
  return r;
}

GradDecomposition decompose_gradient(const Mat2& g, const SpdMat& s,
                                     double degeneracy_tol) {
  const SymEigen e = sym_eigen(s.sym());
  const double gap = e.lambda2 - e.lambda1;
  GradDecomposition d;
  if (gap <= degeneracy_tol * std::max(std::abs(e.lambda2), std::abs(e.lambda1))) {
    d.omega = antisym_part(g);
    d.b = sym_part(g);
    d.n = 0.0;
    return d;
  }
  // Work in the eigenbasis of s: g~ = R^T g R with R = [[c,-s],[s,c]].
  const Mat2 rot{e.c, -e.s, e.s, e.c};
  const Mat2 gt = rot.transpose() * g * rot;

  // Diagonal part commutes with diag(lambda1, lambda2).
  const double b1 = gt.m00, b2 = gt.m11;
  // Off-diagonal symmetric part m is matched by N s^-1 with N = n*J:
  // sym_offdiag(n*J*diag(1/l1,1/l2)) = (n/2)(1/l2 - 1/l1).
  const double m = 0.5 * (gt.m01 + gt.m10);
  const double n = 2.0 * m / (1.0 / e.lambda2 - 1.0 / e.lambda1);
  // Antisymmetric remainder: antisym(g~) minus the antisymmetric part of N s^-1.
  const double omega = antisym_part(gt) - 0.5 * n * (1.0 / e.lambda1 + 1.0 / e.lambda2);

  // Rotate back. Antisymmetric coefficients are invariant under rotations;
  // the diagonal B must be conjugated.
  d.omega = omega;
  d.n = n;
  d.b = e.recompose(b1, b2);
  return d;
}

std::pair<double, double> jacobi_check(const std::function<SymMat(double)>& path,
                                       double t0, double h) {
  if (!(h > 0.0)) throw DomainError("jacobi_check requires h > 0");
  const SpdMat sp(path(t0 + h));
  const SpdMat sm(path(t0 - h));
  const SpdMat s0(path(t0));

  const SymMat ds = (sp.sym() - sm.sym()) * (0.5 / h);
  const SymMat dlog = (spd_log(sp) - spd_log(sm)) * (0.5 / h);

  const double fd_trlog = (spd_log(sp).trace() - spd_log(sm).trace()) * (0.5 / h);
  const double fd_tr = (sp.sym().trace() - sm.sym().trace()) * (0.5 / h);

  const double r1 = std::abs(fd_trlog - ds.contract(s0.sym().inverse()));
  const double r2 = std::abs(fd_tr - dlog.contract(s0.sym()));
  return {r1, r2};
}

}  // namespace oldroyd
