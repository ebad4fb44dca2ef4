#include "oldroyd/driver.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>

namespace oldroyd {

Mesh build_run_mesh(const RunConfig& cfg) {
  Mesh m = cfg.mesh_source == RunConfig::MeshSource::Structured
               ? build_structured_mesh(cfg.nx, cfg.ny, cfg.domain_lo, cfg.domain_hi)
               : read_mesh_file(cfg.mesh_file);
  if (cfg.barycentric) return barycentric_refine(m);
  return m;
}

namespace {

State vortex_state(const RunConfig& cfg, const Mesh& m) {
  const Vec2 lo = cfg.domain_lo, hi = cfg.domain_hi;
  const double lx = hi.x - lo.x, ly = hi.y - lo.y;
  const double amp = cfg.vortex_amplitude;
  auto hat = [&](const Vec2& p) {
    return Vec2{(p.x - lo.x) / lx, (p.y - lo.y) / ly};
  };
  // Velocity from a stream potential: automatically solenoidal and
  // no-slip compatible once projected.
  AnalyticVelocity seed(
      [=](const Vec2& p) {
        const Vec2 h = hat(p);
        const double sx = std::sin(M_PI * h.x), cx = std::cos(M_PI * h.x);
        const double sy = std::sin(M_PI * h.y), cy = std::cos(M_PI * h.y);
        return Vec2{amp * M_PI / ly * sx * cy, -amp * M_PI / lx * cx * sy};
      });
  auto u0 = std::make_shared<ProjectedVelocity>(project_rot(m, seed));

  State s;
  s.flow.velocity = u0;
  s.stress.space = SpaceSpec::tensor(cfg.scheme.stress_family());
  s.stress.dofs = std::make_shared<DofMap>(build_dof_map(m, s.stress.space));
  s.stress.values.resize(s.stress.dofs->num_nodes);
  const double samp = cfg.vortex_stress_amplitude;
  for (int n = 0; n < s.stress.dofs->num_nodes; ++n) {
    const Vec2 h = hat(s.stress.dofs->nodes[n].position);
    const double w = std::sin(M_PI * h.x) * std::sin(M_PI * h.y);
    const double theta = M_PI * (h.x + h.y);
    const double c = std::cos(theta), si = std::sin(theta);
    const SymMat dir{c * c, c * si, si * si};
    const SymMat sigma = SymMat::identity() + dir * (samp * w);
    s.stress.values[n] =
        cfg.scheme.formulation == Formulation::Log ? spd_log(SpdMat(sigma)) : sigma;
  }
  return s;
}

}  // namespace

State build_initial_state(const RunConfig& cfg, const Mesh& m) {
  switch (cfg.initial) {
    case RunConfig::Initial::Equilibrium:
      return State::equilibrium(m, cfg.scheme);
    case RunConfig::Initial::Relaxation: {
      State s = State::equilibrium(m, cfg.scheme);
      const SymMat v = cfg.scheme.formulation == Formulation::Log
                           ? spd_log(SpdMat(cfg.sigma0))
                           : cfg.sigma0;
      for (auto& sv : s.stress.values) sv = v;
      return s;
    }
    case RunConfig::Initial::Vortex:
      return vortex_state(cfg, m);
  }
  throw ConfigError("unknown initial condition");
}

SimulationResult run_simulation(const RunConfig& cfg, const Mesh& m,
                                const StepCallback& on_step) {
  SimulationResult result;
  result.summary.steps_requested = cfg.n_steps;
  result.summary.status = "ok";

  State state = build_initial_state(cfg, m);
  EnergyRecord rec = compute_free_energy(state, cfg.scheme, m);
  result.records.push_back(rec);
  if (on_step) on_step(state, rec);
  const double tol = dissipation_tolerance(cfg.scheme, rec.total);
  result.summary.tol_dissipation = tol;
  result.summary.worst_slack = 0.0;

  for (int n = 1; n <= cfg.n_steps; ++n) {
    State prev = state;
    StepReport report;
    try {
      auto [next, rep] = step(state, cfg.scheme, m);
      state = std::move(next);
      report = rep;
      rec = compute_free_energy(state, cfg.scheme, m);
    } catch (const Error& e) {
      result.summary.status = "solver-failure";
      result.summary.failure_message = e.what();
      result.exit_code = 3;
      break;
    }
    add_dissipation_terms(rec, prev, state, cfg.scheme, m);
    const Certificate cert = check_dissipation(result.records.back(), rec, tol);
    rec.slack = cert.slack;
    rec.fp_iters = report.fixed_point_iterations;
    if (!cert.pass) ++result.summary.certificate_failures;
    result.summary.worst_slack = std::max(result.summary.worst_slack, cert.slack);
    result.records.push_back(rec);
    result.summary.steps_completed = n;
    if (on_step) on_step(state, rec);
  }

  if (result.exit_code == 0 && result.summary.certificate_failures > 0) {
    result.summary.status = "certificate-failure";
    result.exit_code = 2;
  }
  result.summary.final_energy = result.records.back().total;
  result.summary.min_eig = result.records.back().min_eig;
  result.final_state = std::move(state);
  return result;
}

int run_simulation_file(const std::string& config_path, std::ostream& log) {
  RunConfig cfg;
  Mesh m;
  try {
    cfg = RunConfig::parse_file(config_path);
    m = build_run_mesh(cfg);
  } catch (const Error& e) {
    log << "config error: " << e.what() << "\n";
    return 4;
  }

  StepCallback on_step;
  if (!cfg.vtk_prefix.empty() && cfg.vtk_every > 0) {
    on_step = [&cfg, &m](const State& s, const EnergyRecord&) {
      if (s.step_index % cfg.vtk_every == 0)
        write_vtk(m, s, cfg.scheme,
                  cfg.vtk_prefix + "_" + std::to_string(s.step_index) + ".vtk");
    };
  }
  SimulationResult result = run_simulation(cfg, m, on_step);

  if (!cfg.energy_csv.empty()) {
    std::ofstream csv(cfg.energy_csv);
    if (!csv) {
      log << "cannot open " << cfg.energy_csv << "\n";
      return 4;
    }
    write_energy_csv_header(csv);
    for (const auto& r : result.records) write_energy_csv_row(csv, r);
  }
  if (!cfg.summary_json.empty())
    write_summary_json(result.summary, cfg.scheme, cfg.summary_json);

  log << "steps " << result.summary.steps_completed << "/"
      << result.summary.steps_requested << ", F " << result.summary.final_energy
      << ", worst slack " << result.summary.worst_slack << " (tol "
      << result.summary.tol_dissipation << "), status " << result.summary.status
      << "\n";
  if (!result.summary.failure_message.empty())
    log << "failure: " << result.summary.failure_message << "\n";
  return result.exit_code;
}

int verify_lemmas_main(int samples, std::uint64_t seed, std::ostream& log) {
  const LemmaReport rep = verify_lemmas(samples, seed);
  log << "samples " << rep.samples << ", seed " << rep.seed << "\n";
  log << "  trace-log identity    max " << rep.worst_trace_log_identity << "\n";
  log << "  entropy terms         min slack " << rep.worst_entropy_slack << "\n";
  log << "  pair inequalities     min slack " << rep.worst_pair_slack << "\n";
  log << "  fd trace identities   max residual " << rep.jacobi_residual[0] << " (h=1e-3) "
      << rep.jacobi_residual[1] << " (1e-4) " << rep.jacobi_residual[2]
      << " (1e-5), O(h^2) " << (rep.jacobi_scales_quadratically() ? "yes" : "NO")
      << "\n";
  log << "  decomposition         max reconstruction " << rep.worst_reconstruction
      << ", max commutation " << rep.worst_commutation << "\n";
  log << "  barycenter projection max residual " << rep.worst_projection_identity
      << ", exp commutation " << rep.worst_exp_commutation << "\n";
  log << (rep.pass ? "PASS" : "FAIL") << "\n";
  return rep.pass ? 0 : 2;
}

}  // namespace oldroyd
