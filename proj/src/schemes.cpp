#include "oldroyd/schemes.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <limits>
#include <sstream>

#include "oldroyd/tensor.hpp"

namespace oldroyd {

namespace {
constexpr double kComponentWeight[3] = {1.0, 2.0, 1.0};  // (11, 12, 22) contraction
constexpr double kCorrectionCap = 10.0;

/// (Omega Psi - Psi Omega) for Omega = omega*J; symmetric for symmetric Psi.
SymMat commutator(double omega, const SymMat& psi) {
  return SymMat{2.0 * psi.a12, psi.a22 - psi.a11, -2.0 * psi.a12} * omega;
}

SymMat congruence(const Mat2& mt, const SymMat& p) {
  const Mat2 r = mt * p.full() * mt.transpose();
  return sym_part(r);
}

}  // namespace

const char* formulation_name(Formulation f) {
  switch (f) {
    case Formulation::Conformation: return "conformation";
    case Formulation::Log: return "log";
    case Formulation::Lie: return "lie";
  }
  return "?";
}
const char* advection_name(Advection a) {
  return a == Advection::Characteristic ? "characteristic" : "dg";
}
const char* element_pair_name(ElementPair e) {
  switch (e) {
    case ElementPair::ScottVogelius: return "scott-vogelius";
    case ElementPair::TaylorHood: return "taylor-hood";
    case ElementPair::CrouzeixRaviart: return "crouzeix-raviart";
    case ElementPair::P1P1Stabilized: return "p1p1-stab";
    case ElementPair::P1P0Stabilized: return "p1p0-stab";
  }
  return "?";
}
const char* stress_space_name(StressSpace s) {
  return s == StressSpace::P0 ? "P0" : "P1disc";
}
const char* projector_name(Projector p) {
  switch (p) {
    case Projector::None: return "none";
    case Projector::Rot: return "rot";
    case Projector::RT0: return "rt0";
    case Projector::BDM: return "bdm";
  }
  return "?";
}

void PhysicalParams::validate() const {
  if (!(re >= 0.0)) throw ConfigError("re must be >= 0");
  if (!(wi > 0.0)) throw ConfigError("wi must be > 0");
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("eps must lie in (0,1)");
}

void SchemeConfig::validate() const {
  params.validate();
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (flow_substeps < 1) throw ConfigError("flow_substeps must be >= 1");
  if (!(fixed_point.tol > 0.0) || !(linear_solver.tol > 0.0))
    throw ConfigError("solver tolerances must be > 0");
  if (!(degeneracy_tol > 0.0)) throw ConfigError("degeneracy_tol must be > 0");

  switch (elements) {
    case ElementPair::ScottVogelius:
      if (projector != Projector::None)
        throw ConfigError("scott-vogelius needs no velocity projector");
      break;
    case ElementPair::TaylorHood:
    case ElementPair::P1P1Stabilized:
    case ElementPair::P1P0Stabilized:
      if (projector != Projector::Rot)
        throw ConfigError(std::string(element_pair_name(elements)) +
                          " requires the rot projector for the advected velocity");
      break;
    case ElementPair::CrouzeixRaviart:
      if (projector == Projector::None)
        throw ConfigError(
            "crouzeix-raviart requires a velocity projector (rot, rt0 or bdm)");
      break;
  }
  if (formulation == Formulation::Lie) {
    if (elements != ElementPair::ScottVogelius || stress_space != StressSpace::P0 ||
        advection != Advection::Characteristic)
      throw ConfigError(
          "the lie formulation is defined for scott-vogelius elements, P0 stress "
          "and characteristic advection");
  }
}

Family SchemeConfig::velocity_family() const {
  switch (elements) {
    case ElementPair::ScottVogelius:
    case ElementPair::TaylorHood: return Family::P2Vector;
    case ElementPair::CrouzeixRaviart: return Family::CRVector;
    case ElementPair::P1P1Stabilized:
    case ElementPair::P1P0Stabilized: return Family::P1;
  }
  return Family::P2Vector;
}

Family SchemeConfig::pressure_family() const {
  switch (elements) {
    case ElementPair::ScottVogelius: return Family::P1Disc;
    case ElementPair::TaylorHood:
    case ElementPair::P1P1Stabilized: return Family::P1;
    case ElementPair::CrouzeixRaviart:
    case ElementPair::P1P0Stabilized: return Family::P0;
  }
  return Family::P1Disc;
}

Family SchemeConfig::stress_family() const {
  return stress_space == StressSpace::P0 ? Family::P0Tensor : Family::P1DiscTensor;
}

bool SchemeConfig::gradient_is_p0() const {
  return elements == ElementPair::CrouzeixRaviart ||
         elements == ElementPair::P1P1Stabilized ||
         elements == ElementPair::P1P0Stabilized;
}

State State::equilibrium(const Mesh& m, const SchemeConfig& cfg) {
  State s;
  s.flow.velocity = std::make_shared<ZeroVelocity>();
  const SymMat rest =
      cfg.formulation == Formulation::Log ? SymMat{} : SymMat::identity();
  s.stress = SymTensorField::constant(m, cfg.stress_family(), rest);
  return s;
}

SymMat lie_step_local(const SymMat& sigma_at_feet, const Mat2& g, double dt, double wi) {
  const Mat2 a = Mat2::identity() - dt * g;
  const double det = a.det();
  if (std::abs(det) <= 1e-12) {
    std::ostringstream os;
    os << "lie update: I - dt*grad(u) is singular (det " << det
       << "); reduce the time step";
    throw StepSizeError(os.str());
  }
  const Mat2 inv = a.inverse();
  const double r = dt / wi;
  const SymMat conj = congruence(inv, sigma_at_feet);
  return (conj + SymMat::identity() * r) * (1.0 / (1.0 + r));
}

Eigen::VectorXd solve_linear(const Eigen::SparseMatrix<double>& a,
                             const Eigen::VectorXd& b, const SolverControls& controls,
                             LinearSolveStats* stats) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success)
    throw LinearSolverError("sparse factorization failed (singular system?)");
  Eigen::VectorXd x = lu.solve(b);
  const double bnorm = b.norm();
  double resid = (b - a * x).norm();
  for (int pass = 0; pass < controls.max_iters && resid > controls.tol * bnorm; ++pass) {
    x += lu.solve(b - a * x);
    resid = (b - a * x).norm();
  }
  if (!x.allFinite())
    throw LinearSolverError("linear solve produced non-finite values");
  if (bnorm > 0.0 && resid > controls.tol * bnorm) {
    std::ostringstream os;
    os << "linear solve stalled: relative residual " << resid / bnorm;
    throw LinearSolverError(os.str());
  }
  if (stats) {
    stats->dofs = static_cast<int>(a.rows());
    stats->nnz = static_cast<long>(a.nonZeros());
    stats->residual = bnorm > 0.0 ? resid / bnorm : resid;
  }
  return x;
}

namespace {

/// Everything a time step needs that does not change across fixed-point
/// passes: dof maps, unknown numbering, the advected velocity, characteristic
/// feet with mass-corrected quadrature weights, upwind data, and the matrix.
class StepContext {
 public:
  StepContext(const State& state, const SchemeConfig& cfg, const Mesh& m)
      : state_(state), cfg_(cfg), m_(m), quad_(triangle_quadrature(6)) {
    cfg.validate();
    vspec_ = SpaceSpec{cfg.velocity_family(), 2};
    pspec_ = SpaceSpec::scalar(cfg.pressure_family());
    sspec_ = SpaceSpec::tensor(cfg.stress_family());
    vdofs_ = std::make_shared<DofMap>(build_dof_map(m, vspec_));
    pdofs_ = std::make_shared<DofMap>(build_dof_map(m, pspec_));
    sdofs_ = std::make_shared<DofMap>(build_dof_map(m, sspec_));
    if (state.stress.space.family != sspec_.family)
      throw ConfigError("state stress space does not match the configuration");
    build_layout();
    build_advection_velocity();
    if (cfg_.advection == Advection::Characteristic || navier_by_characteristics())
      build_feet();
    if (cfg_.advection == Advection::DG || navier_by_dg())
      upwind_ = build_edge_upwind(m_, *w_);
    build_matrix();
  }

  const SystemLayout& layout() const { return layout_; }
  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  double flow_mass_defect() const { return flow_mass_defect_; }

  bool navier_by_characteristics() const {
    return !cfg_.freeze_velocity && cfg_.elements == ElementPair::CrouzeixRaviart &&
           cfg_.advection == Advection::Characteristic;
  }
  bool navier_by_dg() const {
    return !cfg_.freeze_velocity && cfg_.elements == ElementPair::CrouzeixRaviart &&
           cfg_.advection == Advection::DG;
  }
  bool has_temam() const {
    return !cfg_.freeze_velocity && (cfg_.elements == ElementPair::TaylorHood ||
                                     cfg_.elements == ElementPair::P1P1Stabilized ||
                                     cfg_.elements == ElementPair::P1P0Stabilized);
  }
  /// pi_h applied to the implicit stress in the momentum coupling and the
  /// upper-convected terms (quadratic velocity pairs with P1 stress).
  bool project_implicit_stress() const {
    return cfg_.stress_space == StressSpace::P1Disc && !cfg_.gradient_is_p0();
  }

  Eigen::VectorXd rhs(const State& iterate) const;
  std::optional<Eigen::VectorXd> encode(const State& s) const;
  State extract(const Eigen::VectorXd& y) const;

 private:
  void build_layout();
  void build_advection_velocity();
  void build_feet();
  void build_matrix();

  int uidx(int node, int comp) const { return layout_.u_index[2 * node + comp]; }
  int pidx(int node) const { return layout_.p_index[node]; }
  int sidx(int node, int comp) const { return layout_.s_offset() + 3 * node + comp; }

  const State& state_;
  const SchemeConfig& cfg_;
  const Mesh& m_;
  const QuadRule& quad_;

  SpaceSpec vspec_{Family::P2Vector, 2}, pspec_{Family::P1Disc, 1},
      sspec_{Family::P0Tensor, 3};
  std::shared_ptr<DofMap> vdofs_, pdofs_, sdofs_;
  SystemLayout layout_;

  std::shared_ptr<const VelocityEvaluator> w_;  // advected velocity
  EdgeUpwindData upwind_;

  CharacteristicFeet feet_;               // one foot per (element, quad point)
  std::vector<double> pullback_weight_;   // mass-corrected quadrature weights
  std::vector<SymMat> pullback_stress_;   // previous stress (P0 view) at feet
  std::vector<Vec2> pullback_velocity_;   // previous velocity at feet (CR only)
  double flow_mass_defect_ = 0.0;

  Eigen::SparseMatrix<double> matrix_;
};

void StepContext::build_layout() {
  layout_.u_index.assign(2 * vdofs_->num_nodes, -1);
  layout_.p_index.assign(pdofs_->num_nodes, -1);
  if (!cfg_.freeze_velocity) {
    int next = 0;
    for (int n = 0; n < vdofs_->num_nodes; ++n) {
      const auto& node = vdofs_->nodes[n];
      bool dirichlet = false;
      if (node.anchor == DofMap::Anchor::Vertex)
        dirichlet = m_.vertex_on_boundary(node.anchor_index);
      else if (node.anchor == DofMap::Anchor::EdgeMidpoint)
        dirichlet = m_.edge(node.anchor_index).on_boundary();
      if (dirichlet) continue;
      layout_.u_index[2 * n] = next++;
      layout_.u_index[2 * n + 1] = next++;
    }
    layout_.n_u = next;
    // Pressure is determined up to a constant; pin the first dof.
    int pnext = 0;
    for (int n = 1; n < pdofs_->num_nodes; ++n) layout_.p_index[n] = pnext++;
    layout_.n_p = pnext;
  }
  layout_.n_s = 3 * sdofs_->num_nodes;
}

void StepContext::build_advection_velocity() {
  const VelocityEvaluator& u = *state_.flow.velocity;
  switch (cfg_.elements) {
    case ElementPair::ScottVogelius:
      w_ = state_.flow.velocity;
      return;
    case ElementPair::TaylorHood:
    case ElementPair::P1P1Stabilized:
    case ElementPair::P1P0Stabilized:
      w_ = std::make_shared<ProjectedVelocity>(project_rot(m_, u));
      return;
    case ElementPair::CrouzeixRaviart:
      switch (cfg_.projector) {
        case Projector::Rot:
          w_ = std::make_shared<ProjectedVelocity>(project_rot(m_, u));
          return;
        case Projector::RT0:
          w_ = std::make_shared<ProjectedVelocity>(project_rt0(m_, u));
          return;
        case Projector::BDM:
          w_ = std::make_shared<ProjectedVelocity>(project_bdm(m_, u));
          return;
        case Projector::None: break;
      }
      break;
  }
  throw ConfigError("no advected velocity for this configuration");
}

void StepContext::build_feet() {
  const int nq = static_cast<int>(quad_.points.size());
  std::vector<Vec2> pts;
  std::vector<int> hints;
  pts.reserve(m_.num_triangles() * nq);
  hints.reserve(pts.capacity());
  for (int k = 0; k < m_.num_triangles(); ++k)
    for (int q = 0; q < nq; ++q) {
      pts.push_back(m_.point(k, quad_.points[q]));
      hints.push_back(k);
    }
  feet_ = integrate_backward_flow(m_, *w_, pts, hints, cfg_.dt, cfg_.flow_substeps);

  // Redistribute quadrature mass so each source element contributes exactly
  // its area; keeps the discrete change of variables along the flow exact.
  std::vector<double> mu(m_.num_triangles(), 0.0);
  for (int k = 0; k < m_.num_triangles(); ++k)
    for (int q = 0; q < nq; ++q)
      mu[feet_.feet[k * nq + q].element] += quad_.weights[q] * m_.area(k);
  std::vector<double> corr(m_.num_triangles(), 1.0);
  for (int k = 0; k < m_.num_triangles(); ++k) {
    if (mu[k] > 0.0) {
      corr[k] = std::min(m_.area(k) / mu[k], kCorrectionCap);
      flow_mass_defect_ =
          std::max(flow_mass_defect_, std::abs(mu[k] / m_.area(k) - 1.0));
    } else {
      flow_mass_defect_ = std::max(flow_mass_defect_, 1.0);
    }
  }
  pullback_weight_.resize(feet_.feet.size());
  for (int k = 0; k < m_.num_triangles(); ++k)
    for (int q = 0; q < nq; ++q)
      pullback_weight_[k * nq + q] =
          quad_.weights[q] * m_.area(k) * corr[feet_.feet[k * nq + q].element];

  if (cfg_.advection == Advection::Characteristic) {
    // The advected quantity is elementwise constant: the stress itself for P0,
    // its barycenter interpolation for P1disc.
    const SymTensorField p0_view = cfg_.stress_space == StressSpace::P0
                                       ? state_.stress
                                       : pi_h(m_, state_.stress);
    pullback_stress_.resize(feet_.feet.size());
    for (std::size_t i = 0; i < feet_.feet.size(); ++i)
      pullback_stress_[i] = p0_view.values[feet_.feet[i].element];
  }
  if (navier_by_characteristics()) {
    pullback_velocity_.resize(feet_.feet.size());
    for (std::size_t i = 0; i < feet_.feet.size(); ++i) {
      const auto& f = feet_.feet[i];
      pullback_velocity_[i] = state_.flow.velocity->value(m_, f.element, f.bary);
    }
  }
}

void StepContext::build_matrix() {
  const double re = cfg_.params.re, wi = cfg_.params.wi, eps = cfg_.params.eps;
  const double dt = cfg_.dt;
  std::vector<Eigen::Triplet<double>> trips;

  const int nq = static_cast<int>(quad_.points.size());
  std::array<Vec2, 6> vgrad;
  std::array<Vec2, 6> pgrad;

  const bool with_flow = !cfg_.freeze_velocity;
  const bool navier_in_matrix =
      with_flow && !navier_by_characteristics();  // CR-characteristic has none
  const bool couple_stress = cfg_.formulation != Formulation::Log;

  for (int k = 0; k < m_.num_triangles(); ++k) {
    const double area = m_.area(k);
    for (int q = 0; q < nq; ++q) {
      const auto& bq = quad_.points[q];
      const double w = quad_.weights[q] * area;
      const BasisEval vb = eval_basis(vspec_, m_, k, bq);
      const BasisEval pb = eval_basis(pspec_, m_, k, bq);
      const BasisEval sb = eval_basis(sspec_, m_, k, bq);
      physical_gradients(m_, k, vb, vgrad);
      physical_gradients(m_, k, pb, pgrad);

      if (with_flow) {
        // Advecting data from the previous step.
        Vec2 a{0.0, 0.0};
        double div_a = 0.0;
        if (navier_in_matrix) {
          const auto& adv = navier_by_dg() ? *w_ : *state_.flow.velocity;
          a = adv.value(m_, k, bq);
          if (has_temam()) div_a = state_.flow.velocity->gradient(m_, k, bq).trace();
        }
        for (int i = 0; i < vb.n; ++i) {
          const int ni = vdofs_->node(k, i);
          for (int c = 0; c < 2; ++c) {
            const int row = uidx(ni, c);
            if (row < 0) continue;
            for (int j = 0; j < vb.n; ++j) {
              const int nj = vdofs_->node(k, j);
              const int col = uidx(nj, c);
              if (col >= 0) {
                double val = (re / dt) * vb.value[i] * vb.value[j];
                if (navier_in_matrix)
                  val += re * vb.value[i] * (a.x * vgrad[j].x + a.y * vgrad[j].y);
                if (has_temam()) val += 0.5 * re * div_a * vb.value[i] * vb.value[j];
                trips.emplace_back(row, col, w * val);
              }
            }
            // Viscous block couples both components through the full gradient.
            for (int j = 0; j < vb.n; ++j) {
              const int col = uidx(vdofs_->node(k, j), c);
              if (col >= 0)
                trips.emplace_back(
                    row, col, w * (1.0 - eps) * (vgrad[i].dot(vgrad[j])));
            }
            // Pressure gradient and incompressibility.
            const double dphi[2] = {vgrad[i].x, vgrad[i].y};
            for (int j = 0; j < pb.n; ++j) {
              const int pj = pidx(pdofs_->node(k, j));
              if (pj >= 0) {
                trips.emplace_back(row, layout_.p_offset() + pj,
                                   -w * pb.value[j] * dphi[c]);
                trips.emplace_back(layout_.p_offset() + pj, row,
                                   w * pb.value[j] * dphi[c]);
              }
            }
            // Extra-stress coupling (implicit for conformation and lie).
            if (couple_stress) {
              for (int j = 0; j < sb.n; ++j) {
                const int nj = sdofs_->node(k, j);
                const double tw = project_implicit_stress() ? 1.0 / 3.0 : sb.value[j];
                const double coef = (eps / wi) * w * tw;
                // row c of sigma contracted with grad(phi_i)
                trips.emplace_back(row, sidx(nj, c == 0 ? 0 : 1), coef * dphi[0]);
                trips.emplace_back(row, sidx(nj, c == 0 ? 1 : 2), coef * dphi[1]);
              }
            }
          }
        }
        // Pressure stabilization (P1/P1: h^2 grad p . grad q per element).
        if (cfg_.elements == ElementPair::P1P1Stabilized) {
          const double h2 = m_.diameter(k) * m_.diameter(k);
          for (int i = 0; i < pb.n; ++i) {
            const int pi = pidx(pdofs_->node(k, i));
            if (pi < 0) continue;
            for (int j = 0; j < pb.n; ++j) {
              const int pj = pidx(pdofs_->node(k, j));
              if (pj >= 0)
                trips.emplace_back(layout_.p_offset() + pi, layout_.p_offset() + pj,
                                   w * h2 * pgrad[i].dot(pgrad[j]));
            }
          }
        }
      }

      // Stress block: time derivative plus (conformation/lie) relaxation.
      const double mass_coef =
          1.0 / dt + (cfg_.formulation == Formulation::Log ? 0.0 : 1.0 / wi);
      for (int i = 0; i < sb.n; ++i) {
        const int ni = sdofs_->node(k, i);
        for (int j = 0; j < sb.n; ++j) {
          const int nj = sdofs_->node(k, j);
          for (int c = 0; c < 3; ++c)
            trips.emplace_back(sidx(ni, c), sidx(nj, c),
                               w * mass_coef * kComponentWeight[c] * sb.value[i] *
                                   sb.value[j]);
        }
      }
    }
  }

  // Pressure jump stabilization for the P1/P0 pair.
  if (with_flow && cfg_.elements == ElementPair::P1P0Stabilized) {
    for (int j = 0; j < m_.num_edges(); ++j) {
      const Edge& e = m_.edge(j);
      if (e.on_boundary()) continue;
      const double len = m_.edge_length(j);
      const double coef = len * len;  // |E_j| times the edge integral of constants
      const int pl = pidx(pdofs_->node(e.left, 0));
      const int pr = pidx(pdofs_->node(e.right, 0));
      auto add = [&](int a, int b, double v) {
        if (a >= 0 && b >= 0)
          trips.emplace_back(layout_.p_offset() + a, layout_.p_offset() + b, v);
      };
      add(pl, pl, coef);
      add(pr, pr, coef);
      add(pl, pr, -coef);
      add(pr, pl, -coef);
    }
  }

  // DG upwind flux for the stress (trial through the elementwise-constant
  // view: the field itself for P0, its barycenter value for P1disc).
  if (cfg_.advection == Advection::DG) {
    for (int j = 0; j < m_.num_edges(); ++j) {
      for (const auto& pt : upwind_.edges[j]) {
        const Edge& e = m_.edge(j);
        const Vec2 x = m_.vertex(e.v0) * (1.0 - pt.s) + m_.vertex(e.v1) * pt.s;
        const BasisEval tb =
            eval_basis(sspec_, m_, pt.downstream, m_.barycentric(pt.downstream, x));
        const double trial_w =
            cfg_.stress_space == StressSpace::P0 ? 1.0 : 1.0 / 3.0;
        for (int i = 0; i < tb.n; ++i) {
          const int ni = sdofs_->node(pt.downstream, i);
          for (int c = 0; c < 3; ++c) {
            const double coef =
                pt.weight * pt.abs_un * kComponentWeight[c] * tb.value[i] * trial_w;
            for (int jn = 0; jn < sdofs_->nodes_per_element; ++jn) {
              trips.emplace_back(sidx(ni, c), sidx(sdofs_->node(pt.downstream, jn), c),
                                 coef);
              trips.emplace_back(sidx(ni, c), sidx(sdofs_->node(pt.upstream, jn), c),
                                 -coef);
            }
          }
        }
      }
    }
  }

  // DG treatment of the velocity advection for Crouzeix-Raviart.
  if (navier_by_dg()) {
    const double re = cfg_.params.re;
    for (int j = 0; j < m_.num_edges(); ++j) {
      for (const auto& pt : upwind_.edges[j]) {
        const Edge& e = m_.edge(j);
        const Vec2 x = m_.vertex(e.v0) * (1.0 - pt.s) + m_.vertex(e.v1) * pt.s;
        const BasisEval up = eval_basis(vspec_, m_, pt.upstream, m_.barycentric(pt.upstream, x));
        const BasisEval dn =
            eval_basis(vspec_, m_, pt.downstream, m_.barycentric(pt.downstream, x));
        // |w.n| [u] . {v}
        auto add_pair = [&](int test_elt, const BasisEval& test_b, double test_sign) {
          for (int i = 0; i < test_b.n; ++i) {
            const int ni = vdofs_->node(test_elt, i);
            for (int c = 0; c < 2; ++c) {
              const int row = uidx(ni, c);
              if (row < 0) continue;
              const double base =
                  re * pt.weight * pt.abs_un * 0.5 * test_sign * test_b.value[i];
              for (int jn = 0; jn < dn.n; ++jn) {
                const int cd = uidx(vdofs_->node(pt.downstream, jn), c);
                if (cd >= 0) trips.emplace_back(row, cd, base * dn.value[jn]);
                const int cu = uidx(vdofs_->node(pt.upstream, jn), c);
                if (cu >= 0) trips.emplace_back(row, cu, -base * up.value[jn]);
              }
            }
          }
        };
        add_pair(pt.downstream, dn, 1.0);
        add_pair(pt.upstream, up, 1.0);
      }
    }
  }

  matrix_.resize(layout_.total(), layout_.total());
  matrix_.setFromTriplets(trips.begin(), trips.end());
  matrix_.makeCompressed();
}

Eigen::VectorXd StepContext::rhs(const State& iterate) const {
  const double re = cfg_.params.re, wi = cfg_.params.wi, eps = cfg_.params.eps;
  const double dt = cfg_.dt;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(layout_.total());
  const int nq = static_cast<int>(quad_.points.size());
  std::array<Vec2, 6> vgrad;

  const bool with_flow = !cfg_.freeze_velocity;
  const bool log_form = cfg_.formulation == Formulation::Log;

  for (int k = 0; k < m_.num_triangles(); ++k) {
    const double area = m_.area(k);

    // Elementwise-constant data of the current iterate.
    SymMat exp_proj, exp_proj_inv;
    Mat2 lie_conj;
    if (log_form) {
      const SymMat pibar = iterate.stress.barycenter_value(k);
      exp_proj = spd_exp(pibar).sym();
      exp_proj_inv = spd_exp(pibar * -1.0).sym();
    } else if (cfg_.formulation == Formulation::Lie) {
      Mat2 g{};
      if (iterate.flow.velocity)
        g = iterate.flow.velocity->gradient(m_, k, {1.0 / 3, 1.0 / 3, 1.0 / 3});
      const Mat2 a = Mat2::identity() - dt * g;
      if (std::abs(a.det()) <= 1e-12)
        throw StepSizeError("lie update: I - dt*grad(u) is singular");
      lie_conj = a.inverse();
    }

    for (int q = 0; q < nq; ++q) {
      const auto& bq = quad_.points[q];
      const double w = quad_.weights[q] * area;
      const BasisEval sb = eval_basis(sspec_, m_, k, bq);

      if (with_flow) {
        const BasisEval vb = eval_basis(vspec_, m_, k, bq);
        physical_gradients(m_, k, vb, vgrad);
        const Vec2 un = navier_by_characteristics()
                            ? pullback_velocity_[k * nq + q]
                            : state_.flow.velocity->value(m_, k, bq);
        for (int i = 0; i < vb.n; ++i) {
          const int ni = vdofs_->node(k, i);
          for (int c = 0; c < 2; ++c) {
            const int row = uidx(ni, c);
            if (row < 0) continue;
            double val = (re / dt) * vb.value[i] * (c == 0 ? un.x : un.y);
            if (log_form) {
              // -(eps/wi) e^{psi}:grad v moved to the right-hand side.
              const double r0 = (c == 0) ? exp_proj.a11 : exp_proj.a12;
              const double r1 = (c == 0) ? exp_proj.a12 : exp_proj.a22;
              val -= (eps / wi) * (r0 * vgrad[i].x + r1 * vgrad[i].y);
            }
            b[row] += w * val;
          }
        }
      }

      // Stress sources: advected value, relaxation, and the coupling terms
      // taken at the current iterate.
      SymMat source{};  // integrated against phi with the plain weight
      if (cfg_.formulation == Formulation::Conformation) {
        Mat2 g{};
        if (with_flow && iterate.flow.velocity)
          g = iterate.flow.velocity->gradient(m_, k, bq);
        const SymMat s_iter = project_implicit_stress()
                                  ? iterate.stress.barycenter_value(k)
                                  : iterate.stress.value(m_, k, bq);
        const Mat2 gs = g * s_iter.full();
        source += SymMat{2.0 * gs.m00, gs.m01 + gs.m10, 2.0 * gs.m11};
        source += SymMat::identity() * (1.0 / wi);
      } else if (log_form) {
        Mat2 g{};
        if (with_flow && iterate.flow.velocity)
          g = iterate.flow.velocity->gradient(m_, k, bq);
        const GradDecomposition dec =
            decompose_gradient(g, SpdMat(exp_proj), cfg_.degeneracy_tol);
        const SymMat psi_iter = project_implicit_stress()
                                    ? iterate.stress.barycenter_value(k)
                                    : iterate.stress.value(m_, k, bq);
        source += commutator(dec.omega, psi_iter);
        source += dec.b * 2.0;
        source += (exp_proj_inv - SymMat::identity()) * (1.0 / wi);
      } else {
        source += SymMat::identity() * (1.0 / wi);
      }

      for (int i = 0; i < sb.n; ++i) {
        const int ni = sdofs_->node(k, i);
        const double sv[3] = {source.a11, source.a12, source.a22};
        for (int c = 0; c < 3; ++c)
          b[sidx(ni, c)] += w * kComponentWeight[c] * sb.value[i] * sv[c];
      }

      // Advection of the previous stress.
      SymMat prev{};
      double prev_weight = w;
      if (cfg_.advection == Advection::Characteristic) {
        prev = pullback_stress_[k * nq + q];
        if (cfg_.formulation == Formulation::Lie) prev = congruence(lie_conj, prev);
        prev_weight = pullback_weight_[k * nq + q];
      } else {
        // DG: plain previous value; for P1disc stress the projected one except
        // in the conformation scheme with quadratic velocities.
        const bool project_prev =
            cfg_.stress_space == StressSpace::P1Disc &&
            (log_form || cfg_.gradient_is_p0());
        prev = project_prev ? state_.stress.barycenter_value(k)
                            : state_.stress.value(m_, k, bq);
      }
      for (int i = 0; i < sb.n; ++i) {
        const int ni = sdofs_->node(k, i);
        const double pv[3] = {prev.a11, prev.a12, prev.a22};
        for (int c = 0; c < 3; ++c)
          b[sidx(ni, c)] +=
              (prev_weight / dt) * kComponentWeight[c] * sb.value[i] * pv[c];
      }
    }
  }
  return b;
}

std::optional<Eigen::VectorXd> StepContext::encode(const State& s) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(layout_.total());
  if (!cfg_.freeze_velocity) {
    if (s.flow.velocity_fe) {
      const auto& coeff = s.flow.velocity_fe->coeff;
      for (int n = 0; n < vdofs_->num_nodes; ++n)
        for (int c = 0; c < 2; ++c) {
          const int idx = uidx(n, c);
          if (idx >= 0) y[idx] = coeff[2 * n + c];
        }
    } else if (!dynamic_cast<const ZeroVelocity*>(s.flow.velocity.get())) {
      return std::nullopt;  // not representable in the velocity space
    }
    if (!s.flow.pressure.coeff.empty()) {
      for (int n = 0; n < pdofs_->num_nodes; ++n) {
        const int idx = pidx(n);
        if (idx >= 0) y[layout_.p_offset() + idx] = s.flow.pressure.coeff[n];
      }
    }
  }
  for (int n = 0; n < sdofs_->num_nodes; ++n) {
    const SymMat& v = s.stress.values[n];
    y[sidx(n, 0)] = v.a11;
    y[sidx(n, 1)] = v.a12;
    y[sidx(n, 2)] = v.a22;
  }
  return y;
}

State StepContext::extract(const Eigen::VectorXd& y) const {
  State out;
  if (cfg_.freeze_velocity) {
    out.flow = state_.flow;
  } else {
    auto vf = std::make_shared<VectorField>();
    vf->dofs = vdofs_;
    vf->coeff.assign(2 * vdofs_->num_nodes, 0.0);
    for (int n = 0; n < vdofs_->num_nodes; ++n)
      for (int c = 0; c < 2; ++c) {
        const int idx = uidx(n, c);
        if (idx >= 0) vf->coeff[2 * n + c] = y[idx];
      }
    out.flow.velocity_fe = vf;
    out.flow.velocity = std::make_shared<FEVelocity>(vf);
    out.flow.pressure.dofs = pdofs_;
    out.flow.pressure.coeff.assign(pdofs_->num_nodes, 0.0);
    for (int n = 0; n < pdofs_->num_nodes; ++n) {
      const int idx = pidx(n);
      if (idx >= 0) out.flow.pressure.coeff[n] = y[layout_.p_offset() + idx];
    }
  }
  out.stress.space = sspec_;
  out.stress.dofs = sdofs_;
  out.stress.values.resize(sdofs_->num_nodes);
  for (int n = 0; n < sdofs_->num_nodes; ++n)
    out.stress.values[n] = {y[sidx(n, 0)], y[sidx(n, 1)], y[sidx(n, 2)]};
  out.step_index = state_.step_index;
  return out;
}

double relative_update(const Eigen::VectorXd& delta, const Eigen::VectorXd& y) {
  return delta.norm() / (1.0 + y.norm());
}

}  // namespace

AssembledSystem assemble_system(const State& state, const SchemeConfig& cfg,
                                const Mesh& m, const State& iterate) {
  StepContext ctx(state, cfg, m);
  AssembledSystem sys;
  sys.layout = ctx.layout();
  sys.matrix = ctx.matrix();
  sys.rhs = ctx.rhs(iterate);
  return sys;
}

FixedPointResult fixed_point_solve(const State& state, const SchemeConfig& cfg,
                                   const Mesh& m) {
  StepContext ctx(state, cfg, m);

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(ctx.matrix());
  lu.factorize(ctx.matrix());
  if (lu.info() != Eigen::Success)
    throw LinearSolverError(
        "sparse factorization failed (singular system; check the inf-sup "
        "compatibility of the element pair)");

  LinearSolveStats stats;
  stats.dofs = static_cast<int>(ctx.matrix().rows());
  stats.nnz = static_cast<long>(ctx.matrix().nonZeros());

  auto solve = [&](const Eigen::VectorXd& b) {
    Eigen::VectorXd x = lu.solve(b);
    const double bnorm = b.norm();
    double resid = (b - ctx.matrix() * x).norm();
    for (int pass = 0;
         pass < cfg.linear_solver.max_iters && resid > cfg.linear_solver.tol * bnorm;
         ++pass) {
      x += lu.solve(b - ctx.matrix() * x);
      resid = (b - ctx.matrix() * x).norm();
    }
    if (!x.allFinite())
      throw LinearSolverError("linear solve produced non-finite values");
    stats.residual = bnorm > 0.0 ? resid / bnorm : resid;
    return x;
  };

  std::optional<Eigen::VectorXd> y = ctx.encode(state);
  State iterate = state;
  double theta = 1.0;  // adaptive under-relaxation
  double prev_update = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= cfg.fixed_point.max_iters; ++it) {
    const Eigen::VectorXd proposal = solve(ctx.rhs(iterate));
    if (!proposal.allFinite())
      throw NonConvergenceError("fixed point diverged (non-finite iterate)", it,
                                std::numeric_limits<double>::infinity());
    const bool measured = y.has_value();
    double update = std::numeric_limits<double>::infinity();
    Eigen::VectorXd next;
    if (measured) {
      const Eigen::VectorXd delta = proposal - *y;
      update = relative_update(delta, proposal);
      next = *y + theta * delta;
    } else {
      next = proposal;
    }
    y = next;
    iterate = ctx.extract(next);

    if (measured) {
      if (update <= cfg.fixed_point.tol) {
        FixedPointResult res;
        res.state = std::move(iterate);
        res.iterations = it;
        res.final_update = update;
        res.linear = stats;
        res.flow_mass_defect = ctx.flow_mass_defect();
        return res;
      }
      if (update > 1e8)
        throw NonConvergenceError("fixed point diverged", it, update);
      if (std::isfinite(prev_update)) {
        if (update > prev_update)
          theta = std::max(0.2, 0.5 * theta);
        else if (update < 0.3 * prev_update)
          theta = std::min(1.0, 1.5 * theta);
      }
      prev_update = update;
    }
  }
  throw NonConvergenceError(
      "fixed point did not reach tolerance " + std::to_string(cfg.fixed_point.tol) +
          " within " + std::to_string(cfg.fixed_point.max_iters) + " iterations",
      cfg.fixed_point.max_iters, prev_update);
}

std::pair<State, StepReport> step(const State& state, const SchemeConfig& cfg,
                                  const Mesh& m) {
  FixedPointResult res = fixed_point_solve(state, cfg, m);
  State& next = res.state;
  next.step_index = state.step_index + 1;

  StepReport report;
  report.fixed_point_iterations = res.iterations;
  report.final_update = res.final_update;
  report.linear = res.linear;
  report.flow_mass_defect = res.flow_mass_defect;

  if (cfg.formulation == Formulation::Log) {
    double mn = std::numeric_limits<double>::infinity();
    for (int k = 0; k < m.num_triangles(); ++k)
      mn = std::min(mn, next.stress.barycenter_value(k).min_eigenvalue());
    report.min_stress_eigenvalue = std::exp(mn);
  } else {
    double mn = std::numeric_limits<double>::infinity();
    int bad_node = -1;
    for (std::size_t n = 0; n < next.stress.values.size(); ++n) {
      const double e = next.stress.values[n].min_eigenvalue();
      if (e < mn) {
        mn = e;
        bad_node = static_cast<int>(n);
      }
    }
    report.min_stress_eigenvalue = mn;
    if (!(mn > 0.0)) {
      const int per = next.stress.dofs->nodes_per_element;
      throw PositivityError(
          "conformation stress lost positive definiteness (min eigenvalue " +
              std::to_string(mn) + ")",
          bad_node / per, mn);
    }
  }
  return {std::move(next), report};
}

}  // namespace oldroyd
