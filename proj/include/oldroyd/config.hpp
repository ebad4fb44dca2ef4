#pragma once

#include <iosfwd>
#include <string>

#include "oldroyd/schemes.hpp"

namespace oldroyd {

/// File-backed run description: scheme, mesh source, initial condition, step
/// count and output paths. Unknown keys are hard errors.
struct RunConfig {
  SchemeConfig scheme;

  enum class MeshSource { Structured, File };
  MeshSource mesh_source = MeshSource::Structured;
  std::string mesh_file;
  int nx = 8;
  int ny = 8;
  bool barycentric = true;
  Vec2 domain_lo{0.0, 0.0};
  Vec2 domain_hi{1.0, 1.0};

  enum class Initial { Equilibrium, Relaxation, Vortex };
  Initial initial = Initial::Equilibrium;
  SymMat sigma0{2.0, 0.0, 0.5};
  double vortex_amplitude = 0.05;
  double vortex_stress_amplitude = 0.5;

  int n_steps = 50;
  std::uint64_t seed = 0;

  std::string energy_csv;
  std::string vtk_prefix;
  int vtk_every = 0;
  std::string summary_json;

  /// Tables-driven compatibility checks; runs before any allocation.
  void validate() const;

  static RunConfig parse(std::istream& in);
  static RunConfig parse_file(const std::string& path);
};

}  // namespace oldroyd
