#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <optional>
#include <vector>

#include "oldroyd/fields.hpp"
#include "oldroyd/projections.hpp"
#include "oldroyd/transport.hpp"

namespace oldroyd {

enum class Formulation { Conformation, Log, Lie };
enum class Advection { Characteristic, DG };
enum class ElementPair {
  ScottVogelius,    ///< (P2)^2 x P1disc, needs barycentric-refined meshes
  TaylorHood,       ///< (P2)^2 x P1
  CrouzeixRaviart,  ///< (P1CR)^2 x P0
  P1P1Stabilized,   ///< (P1)^2 x P1 with pressure-gradient stabilization
  P1P0Stabilized,   ///< (P1)^2 x P0 with pressure-jump stabilization
};
enum class StressSpace { P0, P1Disc };
enum class Projector { None, Rot, RT0, BDM };

const char* formulation_name(Formulation f);
const char* advection_name(Advection a);
const char* element_pair_name(ElementPair e);
const char* stress_space_name(StressSpace s);
const char* projector_name(Projector p);

struct PhysicalParams {
  double re = 1.0;   ///< Reynolds number, >= 0
  double wi = 1.0;   ///< Weissenberg number, > 0
  double eps = 0.5;  ///< elastic to total viscosity fraction, in (0,1)
  void validate() const;
};

struct SolverControls {
  double tol = 1e-10;
  int max_iters = 60;
};

struct SchemeConfig {
  Formulation formulation = Formulation::Conformation;
  Advection advection = Advection::Characteristic;
  ElementPair elements = ElementPair::ScottVogelius;
  StressSpace stress_space = StressSpace::P0;
  Projector projector = Projector::None;
  double dt = 0.01;
  PhysicalParams params;
  SolverControls fixed_point{1e-10, 60};
  SolverControls linear_solver{1e-12, 3};
  double degeneracy_tol = 1e-10;
  int flow_substeps = 4;
  /// Freeze the velocity/pressure at their current values and advance only the
  /// stress (pure-relaxation debug mode).
  bool freeze_velocity = false;

  /// Check the projector/advection/formulation compatibility rules.
  void validate() const;

  Family velocity_family() const;
  Family pressure_family() const;
  Family stress_family() const;
  /// Whether the velocity gradient is elementwise constant for this pair.
  bool gradient_is_p0() const;
};

struct VelocityPressureState {
  std::shared_ptr<const VelocityEvaluator> velocity;
  /// Set when the velocity is a finite element field (always after a step;
  /// initial data may be a projected or zero field instead).
  std::shared_ptr<const VectorField> velocity_fe;
  ScalarField pressure;
};

struct State {
  VelocityPressureState flow;
  SymTensorField stress;  ///< sigma (conformation/lie) or psi (log)
  int step_index = 0;

  static State equilibrium(const Mesh& m, const SchemeConfig& cfg);
};

struct LinearSolveStats {
  int dofs = 0;
  long nnz = 0;
  double residual = 0.0;
};

struct StepReport {
  int fixed_point_iterations = 0;
  double final_update = 0.0;
  LinearSolveStats linear;
  double min_stress_eigenvalue = 0.0;
  /// max_K |mu_K / |K| - 1| of the characteristic-foot quadrature mass
  /// redistribution; 0 for DG advection.
  double flow_mass_defect = 0.0;
};

/// Unknown numbering of the per-pass linear system:
/// [free velocity dofs | free pressure dofs | stress dofs].
struct SystemLayout {
  int n_u = 0;
  int n_p = 0;
  int n_s = 0;
  std::vector<int> u_index;  ///< per 2*node+comp; -1 for Dirichlet dofs
  std::vector<int> p_index;  ///< per pressure node; -1 for the pinned dof
  int p_offset() const { return n_u; }
  int s_offset() const { return n_u + n_p; }
  int total() const { return n_u + n_p + n_s; }
};

struct AssembledSystem {
  SystemLayout layout;
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
};

/// One linearized fixed-point pass: implicit time-derivative, viscous,
/// pressure, divergence, conformation relaxation and DG flux terms; the
/// upper-convected / rotation couplings and all matrix exponentials are
/// evaluated at `iterate`.
AssembledSystem assemble_system(const State& state, const SchemeConfig& cfg,
                                const Mesh& m, const State& iterate);

/// Sparse LU with iterative refinement until the residual is below
/// controls.tol * |rhs|.
Eigen::VectorXd solve_linear(const Eigen::SparseMatrix<double>& a,
                             const Eigen::VectorXd& b, const SolverControls& controls,
                             LinearSolveStats* stats = nullptr);

struct FixedPointResult {
  State state;
  int iterations = 0;
  double final_update = 0.0;
  LinearSolveStats linear;
  double flow_mass_defect = 0.0;
};

/// Iterate linearized passes until the combined relative update of
/// (velocity, pressure, stress) falls below fixed_point.tol.
FixedPointResult fixed_point_solve(const State& state, const SchemeConfig& cfg,
                                   const Mesh& m);

/// One time step. Throws NonConvergenceError when the fixed point stalls and
/// PositivityError when a conformation stress loses definiteness; both signal
/// a scheme limit at the given time step size.
std::pair<State, StepReport> step(const State& state, const SchemeConfig& cfg,
                                  const Mesh& m);

/// Elementwise conjugation update
///   (1 + dt/wi) sigma = (I - dt g)^{-1} sigma_feet (I - dt g)^{-T} + (dt/wi) I,
/// SPD whenever sigma_feet is SPD. Throws StepSizeError when (I - dt g) is
/// near singular.
SymMat lie_step_local(const SymMat& sigma_at_feet, const Mat2& g, double dt, double wi);

}  // namespace oldroyd
