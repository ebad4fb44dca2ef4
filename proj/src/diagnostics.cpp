#include "oldroyd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace oldroyd {

namespace {

/// Elementwise-constant stress view the free energies are evaluated on.
SymMat p0_stress_value(const State& s, int k) { return s.stress.barycenter_value(k); }

double entropic_density(const SymMat& v, Formulation f, int element) {
  if (f == Formulation::Log) {
    const auto ev = v.eigenvalues();
    return (std::exp(ev[0]) - ev[0] - 1.0) + (std::exp(ev[1]) - ev[1] - 1.0);
  }
  try {
    return entropy_terms(SpdMat(v)).first;
  } catch (const DomainError&) {
    throw PositivityError("stress is not SPD on element " + std::to_string(element),
                          element, v.min_eigenvalue());
  }
}

double stress_dissipation_density(const SymMat& v, Formulation f, int element) {
  if (f == Formulation::Log) {
    const auto ev = v.eigenvalues();
    return (std::exp(ev[0]) + std::exp(-ev[0]) - 2.0) +
           (std::exp(ev[1]) + std::exp(-ev[1]) - 2.0);
  }
  try {
    return entropy_terms(SpdMat(v)).second;
  } catch (const DomainError&) {
    throw PositivityError("stress is not SPD on element " + std::to_string(element),
                          element, v.min_eigenvalue());
  }
}

}  // namespace

EnergyRecord compute_free_energy(const State& state, const SchemeConfig& cfg,
                                 const Mesh& m) {
  EnergyRecord rec;
  rec.step = state.step_index;
  rec.time = state.step_index * cfg.dt;

  const QuadRule& quad = triangle_quadrature(6);
  double kinetic = 0.0;
  for (int k = 0; k < m.num_triangles(); ++k) {
    double acc = 0.0;
    for (std::size_t q = 0; q < quad.points.size(); ++q) {
      const Vec2 u = state.flow.velocity->value(m, k, quad.points[q]);
      acc += quad.weights[q] * u.dot(u);
    }
    kinetic += acc * m.area(k);
  }
  rec.kinetic = 0.5 * cfg.params.re * kinetic;

  double entropic = 0.0;
  double min_eig = std::numeric_limits<double>::infinity();
  for (int k = 0; k < m.num_triangles(); ++k) {
    const SymMat v = p0_stress_value(state, k);
    entropic += m.area(k) * entropic_density(v, cfg.formulation, k);
    if (cfg.formulation == Formulation::Log)
      min_eig = std::min(min_eig, std::exp(v.min_eigenvalue()));
  }
  if (cfg.formulation != Formulation::Log) {
    for (const SymMat& v : state.stress.values)
      min_eig = std::min(min_eig, v.min_eigenvalue());
  }
  rec.entropic = 0.5 * cfg.params.eps / cfg.params.wi * entropic;
  rec.total = rec.kinetic + rec.entropic;
  rec.min_eig = min_eig;
  return rec;
}

void add_dissipation_terms(EnergyRecord& next_record, const State& prev,
                           const State& next, const SchemeConfig& cfg, const Mesh& m) {
  const QuadRule& quad = triangle_quadrature(6);
  double dk = 0.0, dv = 0.0;
  for (int k = 0; k < m.num_triangles(); ++k) {
    double acc_k = 0.0, acc_v = 0.0;
    for (std::size_t q = 0; q < quad.points.size(); ++q) {
      const Vec2 du = next.flow.velocity->value(m, k, quad.points[q]) -
                      prev.flow.velocity->value(m, k, quad.points[q]);
      acc_k += quad.weights[q] * du.dot(du);
      const Mat2 g = next.flow.velocity->gradient(m, k, quad.points[q]);
      acc_v += quad.weights[q] * (g.m00 * g.m00 + g.m01 * g.m01 + g.m10 * g.m10 +
                                  g.m11 * g.m11);
    }
    dk += acc_k * m.area(k);
    dv += acc_v * m.area(k);
  }
  next_record.diss_kinetic = 0.5 * cfg.params.re * dk;
  next_record.diss_viscous = cfg.dt * (1.0 - cfg.params.eps) * dv;

  double ds = 0.0;
  for (int k = 0; k < m.num_triangles(); ++k)
    ds += m.area(k) *
          stress_dissipation_density(p0_stress_value(next, k), cfg.formulation, k);
  next_record.diss_stress =
      cfg.dt * 0.5 * cfg.params.eps / (cfg.params.wi * cfg.params.wi) * ds;
}

Certificate check_dissipation(const EnergyRecord& prev, const EnergyRecord& next,
                              double tol) {
  Certificate c;
  c.slack = next.total - prev.total + next.diss_kinetic + next.diss_viscous +
            next.diss_stress;
  c.pass = c.slack <= tol;
  return c;
}

double dissipation_tolerance(const SchemeConfig& cfg, double f0) {
  return 10.0 * (cfg.fixed_point.tol + cfg.linear_solver.tol) * std::max(1.0, f0);
}

DecayFit estimate_decay_rate(const std::vector<EnergyRecord>& records) {
  DecayFit fit;
  std::vector<std::pair<double, double>> pts;  // (t, ln F)
  for (const auto& r : records) {
    if (r.total > 1e-14) {
      pts.emplace_back(r.time, std::log(r.total));
    } else {
      fit.truncated = true;
      break;  // the fit window ends at the floor
    }
  }
  // Drop the initial transient.
  const std::size_t skip = pts.size() / 5;
  pts.erase(pts.begin(), pts.begin() + skip);
  fit.window = static_cast<int>(pts.size());
  if (pts.size() < 10) {
    fit.truncated = true;
    return fit;
  }
  double st = 0, sf = 0, stt = 0, stf = 0;
  for (const auto& [t, f] : pts) {
    st += t;
    sf += f;
    stt += t * t;
    stf += t * f;
  }
  const double n = static_cast<double>(pts.size());
  fit.slope = (n * stf - st * sf) / (n * stt - st * st);
  const double intercept = (sf - fit.slope * st) / n;
  double rss = 0;
  for (const auto& [t, f] : pts) {
    const double e = f - (intercept + fit.slope * t);
    rss += e * e;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

namespace {

SymMat random_spd(std::mt19937_64& rng, double log10_scale_min, double log10_scale_max,
                  double log10_cond_max) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double scale =
      std::pow(10.0, log10_scale_min + (log10_scale_max - log10_scale_min) * uni(rng));
  const double cond = std::pow(10.0, log10_cond_max * uni(rng));
  const double l2 = scale * std::sqrt(cond);
  const double l1 = scale / std::sqrt(cond);
  const double a = 2.0 * M_PI * uni(rng);
  const double c = std::cos(a), s = std::sin(a);
  return SymMat{l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c};
}

SymMat random_sym(std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> uni(-amp, amp);
  return SymMat{uni(rng), uni(rng), uni(rng)};
}

Mat2 random_mat(std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> uni(-amp, amp);
  return Mat2{uni(rng), uni(rng), uni(rng), uni(rng)};
}

Mesh jiggled_mesh(std::mt19937_64& rng, int n) {
  Mesh base = build_structured_mesh(n, n);
  std::vector<Vec2> verts = base.vertices();
  std::uniform_real_distribution<double> uni(-0.15 / n, 0.15 / n);
  for (int v = 0; v < base.num_vertices(); ++v) {
    if (base.vertex_on_boundary(v)) continue;
    verts[v].x += uni(rng);
    verts[v].y += uni(rng);
  }
  std::vector<std::array<int, 3>> tris(base.num_triangles());
  for (int k = 0; k < base.num_triangles(); ++k) tris[k] = base.tri(k);
  return Mesh::from_cells(std::move(verts), std::move(tris));
}

}  // namespace

bool LemmaReport::jacobi_scales_quadratically() const {
  // Residuals at h and h/10 should drop by about 100; allow a generous
  // constant and a floor where roundoff takes over.
  const double r3 = jacobi_residual[0], r4 = jacobi_residual[1],
               r5 = jacobi_residual[2];
  const bool first = r4 <= r3 / 30.0 || r4 < 1e-10;
  const bool second = r5 <= r4 / 10.0 || r5 < 1e-10;
  return first && second;
}

LemmaReport verify_lemmas(int samples, std::uint64_t seed) {
  if (samples < 1) throw ConfigError("verify_lemmas requires samples >= 1");
  LemmaReport rep;
  rep.samples = samples;
  rep.seed = seed;
  rep.worst_entropy_slack = std::numeric_limits<double>::infinity();
  rep.worst_pair_slack = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);

  // Trace inequalities over SPD pairs spanning condition numbers up to 1e6.
  for (int i = 0; i < samples; ++i) {
    const SpdMat s(random_spd(rng, -3.0, 3.0, 6.0));
    const SpdMat t(random_spd(rng, -3.0, 3.0, 6.0));
    const SymMat ls = spd_log(s);
    const double id1 = std::abs(ls.trace() - std::log(s.sym().det())) /
                       (1.0 + std::abs(std::log(s.sym().det())));
    rep.worst_trace_log_identity = std::max(rep.worst_trace_log_identity, id1);
    const auto ent = entropy_terms(s);
    rep.worst_entropy_slack =
        std::min({rep.worst_entropy_slack, ent.first, ent.second});
    const auto pair = verify_pair_inequalities(s, t);
    rep.worst_pair_slack = std::min(rep.worst_pair_slack, pair.worst());
  }

  // Finite-difference trace identities along random rotating SPD paths.
  {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double hs[3] = {1e-3, 1e-4, 1e-5};
    const int paths = std::min(samples, 200);
    for (int i = 0; i < paths; ++i) {
      const double a = 0.5 + 1.5 * uni(rng), c = 0.5 + 1.5 * uni(rng);
      const double bslope = 0.4 * (uni(rng) - 0.5), dslope = 0.4 * (uni(rng) - 0.5);
      const double omega = 4.0 * (uni(rng) - 0.5), phase = 2.0 * M_PI * uni(rng);
      auto path = [=](double t) {
        const double ca = std::cos(omega * t + phase), sa = std::sin(omega * t + phase);
        const double l1 = a + bslope * t, l2 = c + dslope * t;
        return SymMat{l1 * ca * ca + l2 * sa * sa, (l1 - l2) * ca * sa,
                      l1 * sa * sa + l2 * ca * ca};
      };
      for (int hi = 0; hi < 3; ++hi) {
        const auto [r1, r2] = jacobi_check(path, 0.0, hs[hi]);
        rep.jacobi_residual[hi] = std::max({rep.jacobi_residual[hi], r1, r2});
      }
    }
  }

  // Gradient decomposition: reconstruction and commutation.
  for (int i = 0; i < samples; ++i) {
    const SpdMat s(random_spd(rng, -1.0, 1.0, 3.0));
    const Mat2 g = random_mat(rng, 2.0);
    const GradDecomposition d = decompose_gradient(g, s, 1e-10);
    const Mat2 err = d.recompose(s.sym()) - g;
    rep.worst_reconstruction =
        std::max(rep.worst_reconstruction, err.norm() / (1.0 + g.norm()));
    const Mat2 comm = d.b.full() * s.sym().full() - s.sym().full() * d.b.full();
    rep.worst_commutation = std::max(
        rep.worst_commutation,
        comm.norm() / ((1.0 + d.b.norm()) * (1.0 + s.sym().norm())));
    const double trdiff = std::abs(d.b.trace() - g.trace());
    rep.worst_reconstruction = std::max(rep.worst_reconstruction, trdiff / (1.0 + std::abs(g.trace())));
  }

  // Barycenter interpolation: L2-projection identity and commutation with exp.
  {
    const int mesh_rounds = std::max(1, std::min(samples / 100, 20));
    const QuadRule& quad = triangle_quadrature(3);
    for (int round = 0; round < mesh_rounds; ++round) {
      const Mesh mm = jiggled_mesh(rng, 3 + round % 3);
      SymTensorField f;
      f.space = SpaceSpec::tensor(Family::P1DiscTensor);
      f.dofs = std::make_shared<DofMap>(build_dof_map(mm, f.space));
      f.values.resize(f.dofs->num_nodes);
      for (auto& v : f.values) v = random_sym(rng, 2.0);
      const SymTensorField p = pi_h(mm, f);
      for (int k = 0; k < mm.num_triangles(); ++k) {
        // int_K f : T = |K| pi_h(f) : T for all constant T; check componentwise
        // with quadrature as the independent route.
        SymMat integral{};
        for (std::size_t q = 0; q < quad.points.size(); ++q)
          integral += f.value(mm, k, quad.points[q]) * quad.weights[q];
        const SymMat diff = integral - p.values[k];
        rep.worst_projection_identity =
            std::max(rep.worst_projection_identity,
                     diff.norm() / (1.0 + integral.norm()));
        // exp(pi_h psi) against exp evaluated at the barycenter of psi.
        const SymMat e1 = spd_exp(p.values[k]).sym();
        const SymMat e2 = spd_exp(f.value(mm, k, {1.0 / 3, 1.0 / 3, 1.0 / 3})).sym();
        rep.worst_exp_commutation =
            std::max(rep.worst_exp_commutation, (e1 - e2).norm() / (1.0 + e1.norm()));
      }
    }
  }

  rep.pass = rep.worst_trace_log_identity <= 1e-12 &&
             rep.worst_entropy_slack >= -1e-12 && rep.worst_pair_slack >= -1e-12 &&
             rep.jacobi_scales_quadratically() &&
             rep.worst_reconstruction <= 1e-12 && rep.worst_commutation <= 1e-12 &&
             rep.worst_projection_identity <= 1e-13 &&
             rep.worst_exp_commutation <= 1e-14;
  return rep;
}

}  // namespace oldroyd
