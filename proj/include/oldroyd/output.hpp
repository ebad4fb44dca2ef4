#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "oldroyd/diagnostics.hpp"

namespace oldroyd {

/// CSV with the fixed header
/// step,time,F,kinetic,entropic,diss_kinetic,diss_viscous,diss_stress,min_eig,fp_iters,slack
void write_energy_csv_header(std::ostream& out);
void write_energy_csv_row(std::ostream& out, const EnergyRecord& r);

/// Legacy ASCII VTK unstructured grid: velocity as point data, pressure and
/// the conformation tensor as cell data.
void write_vtk(const Mesh& m, const State& state, const SchemeConfig& cfg,
               const std::string& path);

struct RunSummary {
  std::string status;  ///< "ok", "certificate-failure", "solver-failure"
  std::string failure_message;
  int steps_completed = 0;
  int steps_requested = 0;
  double tol_dissipation = 0.0;
  double worst_slack = 0.0;
  double final_energy = 0.0;
  double min_eig = 0.0;
  int certificate_failures = 0;
};

void write_summary_json(const RunSummary& summary, const SchemeConfig& cfg,
                        const std::string& path);

}  // namespace oldroyd
