#include "oldroyd/output.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>

namespace oldroyd {

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

void write_energy_csv_header(std::ostream& out) {
  out << "step,time,F,kinetic,entropic,diss_kinetic,diss_viscous,diss_stress,"
         "min_eig,fp_iters,slack\n";
}

void write_energy_csv_row(std::ostream& out, const EnergyRecord& r) {
  out << r.step << ',' << fmt(r.time) << ',' << fmt(r.total) << ',' << fmt(r.kinetic)
      << ',' << fmt(r.entropic) << ',' << fmt(r.diss_kinetic) << ','
      << fmt(r.diss_viscous) << ',' << fmt(r.diss_stress) << ',' << fmt(r.min_eig)
      << ',' << r.fp_iters << ',' << fmt(r.slack) << '\n';
}

void write_vtk(const Mesh& m, const State& state, const SchemeConfig& cfg,
               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open VTK output file " + path);
  out.precision(16);
  out << "# vtk DataFile Version 3.0\n";
  out << "oldroyd state, step " << state.step_index << "\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << m.num_vertices() << " double\n";
  for (const Vec2& v : m.vertices()) out << v.x << ' ' << v.y << " 0\n";
  out << "CELLS " << m.num_triangles() << ' ' << 4 * m.num_triangles() << "\n";
  for (int k = 0; k < m.num_triangles(); ++k) {
    const auto& t = m.tri(k);
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << "\n";
  }
  out << "CELL_TYPES " << m.num_triangles() << "\n";
  for (int k = 0; k < m.num_triangles(); ++k) out << "5\n";

  // Velocity at vertices, averaged over incident elements.
  std::vector<Vec2> vel(m.num_vertices(), Vec2{0.0, 0.0});
  std::vector<int> count(m.num_vertices(), 0);
  static const std::array<double, 3> corners[3] = {
      {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  for (int k = 0; k < m.num_triangles(); ++k) {
    const auto& t = m.tri(k);
    for (int i = 0; i < 3; ++i) {
      vel[t[i]] += state.flow.velocity->value(m, k, corners[i]);
      count[t[i]] += 1;
    }
  }
  out << "POINT_DATA " << m.num_vertices() << "\n";
  out << "VECTORS velocity double\n";
  for (int v = 0; v < m.num_vertices(); ++v) {
    const double inv = count[v] > 0 ? 1.0 / count[v] : 0.0;
    out << vel[v].x * inv << ' ' << vel[v].y * inv << " 0\n";
  }

  out << "CELL_DATA " << m.num_triangles() << "\n";
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  const std::array<double, 3> center{1.0 / 3, 1.0 / 3, 1.0 / 3};
  for (int k = 0; k < m.num_triangles(); ++k) {
    const double p = state.flow.pressure.coeff.empty()
                         ? 0.0
                         : state.flow.pressure.value(m, k, center);
    out << p << "\n";
  }
  const char* names[3] = {"sigma_xx", "sigma_xy", "sigma_yy"};
  for (int c = 0; c < 3; ++c) {
    out << "SCALARS " << names[c] << " double 1\nLOOKUP_TABLE default\n";
    for (int k = 0; k < m.num_triangles(); ++k) {
      SymMat s = state.stress.barycenter_value(k);
      if (cfg.formulation == Formulation::Log) s = spd_exp(s).sym();
      out << (c == 0 ? s.a11 : c == 1 ? s.a12 : s.a22) << "\n";
    }
  }
}

void write_summary_json(const RunSummary& summary, const SchemeConfig& cfg,
                        const std::string& path) {
  nlohmann::json j;
  j["status"] = summary.status;
  if (!summary.failure_message.empty()) j["failure"] = summary.failure_message;
  j["steps_completed"] = summary.steps_completed;
  j["steps_requested"] = summary.steps_requested;
  j["tol_dissipation"] = summary.tol_dissipation;
  j["worst_slack"] = summary.worst_slack;
  j["final_energy"] = summary.final_energy;
  j["min_eig"] = summary.min_eig;
  j["certificate_failures"] = summary.certificate_failures;
  j["scheme"] = {{"formulation", formulation_name(cfg.formulation)},
                 {"advection", advection_name(cfg.advection)},
                 {"elements", element_pair_name(cfg.elements)},
                 {"stress_space", stress_space_name(cfg.stress_space)},
                 {"velocity_projector", projector_name(cfg.projector)},
                 {"dt", cfg.dt},
                 {"re", cfg.params.re},
                 {"wi", cfg.params.wi},
                 {"eps", cfg.params.eps}};
  std::ofstream out(path);
  if (!out) throw Error("cannot open summary file " + path);
  out << j.dump(2) << "\n";
}

}  // namespace oldroyd
