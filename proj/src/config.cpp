#include "oldroyd/config.hpp"

#include <fstream>
#include <istream>
#include <sstream>

namespace oldroyd {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse number from '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int i = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse integer from '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': cannot parse boolean from '" + v + "'");
}

Formulation parse_formulation(const std::string& v) {
  if (v == "conformation") return Formulation::Conformation;
  if (v == "log") return Formulation::Log;
  if (v == "lie") return Formulation::Lie;
  throw ConfigError("unknown formulation '" + v + "'");
}

Advection parse_advection(const std::string& v) {
  if (v == "characteristic") return Advection::Characteristic;
  if (v == "dg") return Advection::DG;
  throw ConfigError("unknown advection '" + v + "'");
}

ElementPair parse_elements(const std::string& v) {
  if (v == "scott-vogelius") return ElementPair::ScottVogelius;
  if (v == "taylor-hood") return ElementPair::TaylorHood;
  if (v == "crouzeix-raviart") return ElementPair::CrouzeixRaviart;
  if (v == "p1p1-stab") return ElementPair::P1P1Stabilized;
  if (v == "p1p0-stab") return ElementPair::P1P0Stabilized;
  throw ConfigError("unknown element pair '" + v + "'");
}

StressSpace parse_stress_space(const std::string& v) {
  if (v == "P0") return StressSpace::P0;
  if (v == "P1disc") return StressSpace::P1Disc;
  throw ConfigError("unknown stress space '" + v + "'");
}

Projector parse_projector(const std::string& v) {
  if (v == "none") return Projector::None;
  if (v == "rot") return Projector::Rot;
  if (v == "rt0") return Projector::RT0;
  if (v == "bdm") return Projector::BDM;
  throw ConfigError("unknown velocity projector '" + v + "'");
}

}  // namespace

void RunConfig::validate() const {
  scheme.validate();
  if (n_steps < 0) throw ConfigError("n_steps must be >= 0");
  if (mesh_source == MeshSource::Structured) {
    if (nx < 1 || ny < 1) throw ConfigError("structured mesh requires nx, ny >= 1");
    if (!(domain_hi.x > domain_lo.x) || !(domain_hi.y > domain_lo.y))
      throw ConfigError("degenerate domain rectangle");
  } else if (mesh_file.empty()) {
    throw ConfigError("mesh source 'file' requires mesh.file");
  }
  if (scheme.elements == ElementPair::ScottVogelius && !barycentric)
    throw ConfigError(
        "scott-vogelius requires a barycentric-refined (macro-element) mesh; "
        "set mesh.barycentric_refine = true");
  if (initial == Initial::Relaxation) {
    if (!is_spd(sigma0)) throw ConfigError("sigma0 must be SPD");
  }
  if (vtk_every < 0) throw ConfigError("vtk_every must be >= 0");
}

RunConfig RunConfig::parse(std::istream& in) {
  RunConfig cfg;
  std::string line, section;
  int lineno = 0;
  bool freeze_explicit = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "scheme" && section != "params" && section != "fixed_point" &&
          section != "linear_solver" && section != "mesh" && section != "run" &&
          section != "output")
        throw ConfigError("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string qual = section.empty() ? key : section + "." + key;

    if (qual == "scheme.formulation") cfg.scheme.formulation = parse_formulation(value);
    else if (qual == "scheme.advection") cfg.scheme.advection = parse_advection(value);
    else if (qual == "scheme.elements") cfg.scheme.elements = parse_elements(value);
    else if (qual == "scheme.stress_space") cfg.scheme.stress_space = parse_stress_space(value);
    else if (qual == "scheme.velocity_projector") cfg.scheme.projector = parse_projector(value);
    else if (qual == "scheme.dt") cfg.scheme.dt = to_double(qual, value);
    else if (qual == "scheme.degeneracy_tol") cfg.scheme.degeneracy_tol = to_double(qual, value);
    else if (qual == "scheme.flow_substeps") cfg.scheme.flow_substeps = to_int(qual, value);
    else if (qual == "scheme.freeze_velocity") {
      cfg.scheme.freeze_velocity = to_bool(qual, value);
      freeze_explicit = true;
    }
    else if (qual == "params.re") cfg.scheme.params.re = to_double(qual, value);
    else if (qual == "params.wi") cfg.scheme.params.wi = to_double(qual, value);
    else if (qual == "params.eps") cfg.scheme.params.eps = to_double(qual, value);
    else if (qual == "fixed_point.tol") cfg.scheme.fixed_point.tol = to_double(qual, value);
    else if (qual == "fixed_point.max_iters") cfg.scheme.fixed_point.max_iters = to_int(qual, value);
    else if (qual == "linear_solver.tol") cfg.scheme.linear_solver.tol = to_double(qual, value);
    else if (qual == "linear_solver.max_iters") cfg.scheme.linear_solver.max_iters = to_int(qual, value);
    else if (qual == "mesh.source") {
      if (value == "structured") cfg.mesh_source = MeshSource::Structured;
      else if (value == "file") cfg.mesh_source = MeshSource::File;
      else throw ConfigError("unknown mesh source '" + value + "'");
    }
    else if (qual == "mesh.file") cfg.mesh_file = value;
    else if (qual == "mesh.nx") cfg.nx = to_int(qual, value);
    else if (qual == "mesh.ny") cfg.ny = to_int(qual, value);
    else if (qual == "mesh.barycentric_refine") cfg.barycentric = to_bool(qual, value);
    else if (qual == "mesh.domain") {
      std::istringstream os(value);
      if (!(os >> cfg.domain_lo.x >> cfg.domain_lo.y >> cfg.domain_hi.x >> cfg.domain_hi.y))
        throw ConfigError("mesh.domain expects 'x0 y0 x1 y1'");
    }
    else if (qual == "run.initial") {
      if (value == "equilibrium") cfg.initial = Initial::Equilibrium;
      else if (value == "relaxation") cfg.initial = Initial::Relaxation;
      else if (value == "vortex") cfg.initial = Initial::Vortex;
      else throw ConfigError("unknown initial condition '" + value + "'");
    }
    else if (qual == "run.sigma0") {
      std::istringstream os(value);
      if (!(os >> cfg.sigma0.a11 >> cfg.sigma0.a12 >> cfg.sigma0.a22))
        throw ConfigError("run.sigma0 expects 'a11 a12 a22'");
    }
    else if (qual == "run.vortex_amplitude") cfg.vortex_amplitude = to_double(qual, value);
    else if (qual == "run.vortex_stress_amplitude") cfg.vortex_stress_amplitude = to_double(qual, value);
    else if (qual == "run.n_steps") cfg.n_steps = to_int(qual, value);
    else if (qual == "run.seed") cfg.seed = static_cast<std::uint64_t>(to_int(qual, value));
    else if (qual == "output.energy_csv") cfg.energy_csv = value;
    else if (qual == "output.vtk_prefix") cfg.vtk_prefix = value;
    else if (qual == "output.vtk_every") cfg.vtk_every = to_int(qual, value);
    else if (qual == "output.summary_json") cfg.summary_json = value;
    else
      throw ConfigError("unknown key '" + qual + "' (line " + std::to_string(lineno) + ")");
  }
  // The pure-relaxation scenario freezes the velocity unless overridden.
  if (cfg.initial == Initial::Relaxation && !freeze_explicit)
    cfg.scheme.freeze_velocity = true;
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse(in);
}

}  // namespace oldroyd
