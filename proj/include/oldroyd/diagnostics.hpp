#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "oldroyd/schemes.hpp"

namespace oldroyd {

/// Per-step free energy split with the dissipation terms of the estimate the
/// schemes are certified against.
struct EnergyRecord {
  int step = 0;
  double time = 0.0;
  double total = 0.0;     ///< F = kinetic + entropic
  double kinetic = 0.0;   ///< (Re/2) int |u|^2
  double entropic = 0.0;  ///< (eps/2Wi) int tr(sigma - ln sigma - I), exp analog for log
  double diss_kinetic = 0.0;  ///< (Re/2) int |u^{n+1}-u^n|^2
  double diss_viscous = 0.0;  ///< dt (1-eps) int |grad u^{n+1}|^2
  double diss_stress = 0.0;   ///< dt (eps/2Wi^2) int tr(sigma + sigma^{-1} - 2I)
  double min_eig = 0.0;       ///< smallest stress eigenvalue over elements
  int fp_iters = 0;
  double slack = 0.0;  ///< certified dissipation slack of the step
};

/// F and its split for the given state. For P1disc stress the energy of the
/// barycenter-interpolated field is used. Throws PositivityError (with the
/// element id) when a conformation stress value is not SPD.
EnergyRecord compute_free_energy(const State& state, const SchemeConfig& cfg,
                                 const Mesh& m);

/// Fill the dissipation terms of `next_record` from the transition
/// prev -> next.
void add_dissipation_terms(EnergyRecord& next_record, const State& prev,
                           const State& next, const SchemeConfig& cfg, const Mesh& m);

struct Certificate {
  bool pass = false;
  double slack = 0.0;
};

/// Pass iff next.F - prev.F + dissipation <= tol.
Certificate check_dissipation(const EnergyRecord& prev, const EnergyRecord& next,
                              double tol);

/// Certification tolerance tied to the solver tolerances so that exact-solve
/// estimates are not flagged for solver noise.
double dissipation_tolerance(const SchemeConfig& cfg, double f0);

struct DecayFit {
  double slope = 0.0;
  double residual = 0.0;  ///< rms of the least-squares fit residual
  int window = 0;         ///< number of records used
  bool truncated = false; ///< window was cut by the F > 1e-14 floor
};

/// Least-squares slope of ln F against time over the tail of a run.
DecayFit estimate_decay_rate(const std::vector<EnergyRecord>& records);

/// Randomized verification of the matrix inequalities, the finite-difference
/// trace identities, the gradient decomposition, and the properties of the
/// barycenter interpolation. Deterministic for a fixed seed.
struct LemmaReport {
  int samples = 0;
  std::uint64_t seed = 0;
  double worst_trace_log_identity = 0.0;  ///< max |tr ln s - ln det s| (scaled)
  double worst_entropy_slack = 0.0;       ///< min slack of the entropy terms
  double worst_pair_slack = 0.0;          ///< min slack over the pair inequalities
  std::array<double, 3> jacobi_residual{};  ///< max residuals at h = 1e-3, 1e-4, 1e-5
  double worst_reconstruction = 0.0;  ///< decomposition reconstruction, relative
  double worst_commutation = 0.0;     ///< ||B s - s B|| / (||B|| ||s||)
  double worst_projection_identity = 0.0;  ///< L2-projection property of pi_h
  double worst_exp_commutation = 0.0;      ///< pi_h(exp(psi)) vs exp(pi_h(psi))
  bool pass = false;

  bool jacobi_scales_quadratically() const;
};

LemmaReport verify_lemmas(int samples, std::uint64_t seed);

}  // namespace oldroyd
