#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "oldroyd/config.hpp"
#include "oldroyd/diagnostics.hpp"
#include "oldroyd/output.hpp"

namespace oldroyd {

Mesh build_run_mesh(const RunConfig& cfg);
State build_initial_state(const RunConfig& cfg, const Mesh& m);

/// Exit codes of a simulation: 0 all certificates pass, 2 a certificate
/// failed, 3 the solver failed (nonconvergence, positivity loss, step size).
struct SimulationResult {
  std::vector<EnergyRecord> records;
  RunSummary summary;
  int exit_code = 0;
  State final_state;
};

using StepCallback = std::function<void(const State&, const EnergyRecord&)>;

SimulationResult run_simulation(const RunConfig& cfg, const Mesh& m,
                                const StepCallback& on_step = nullptr);

/// Parse, build, run, and write the configured outputs. Config errors exit
/// with code 4 before any compute.
int run_simulation_file(const std::string& config_path, std::ostream& log);

int verify_lemmas_main(int samples, std::uint64_t seed, std::ostream& log);

}  // namespace oldroyd
