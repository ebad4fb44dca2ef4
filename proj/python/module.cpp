#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "oldroyd/diagnostics.hpp"
#include "oldroyd/driver.hpp"

namespace py = pybind11;
using namespace oldroyd;

namespace {

SymMat sym_from_tuple(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }
std::array<double, 3> sym_to_tuple(const SymMat& m) { return {m.a11, m.a12, m.a22}; }

py::dict record_to_dict(const EnergyRecord& r) {
  py::dict d;
  d["step"] = r.step;
  d["time"] = r.time;
  d["F"] = r.total;
  d["kinetic"] = r.kinetic;
  d["entropic"] = r.entropic;
  d["diss_kinetic"] = r.diss_kinetic;
  d["diss_viscous"] = r.diss_viscous;
  d["diss_stress"] = r.diss_stress;
  d["min_eig"] = r.min_eig;
  d["fp_iters"] = r.fp_iters;
  d["slack"] = r.slack;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Free-energy-dissipative finite element schemes for the Oldroyd-B model";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DomainError>(m, "DomainError");

  // Symmetric 2x2 matrix calculus on (a11, a12, a22) triples.
  m.def(
      "spd_log",
      [](const std::array<double, 3>& s) {
        return sym_to_tuple(spd_log(SpdMat(sym_from_tuple(s))));
      },
      py::arg("spd"), "Matrix logarithm of an SPD matrix (a11, a12, a22)");
  m.def(
      "spd_exp",
      [](const std::array<double, 3>& s) {
        return sym_to_tuple(spd_exp(sym_from_tuple(s)).sym());
      },
      py::arg("sym"), "Matrix exponential of a symmetric matrix (a11, a12, a22)");
  m.def(
      "entropy_terms",
      [](const std::array<double, 3>& s) {
        return entropy_terms(SpdMat(sym_from_tuple(s)));
      },
      py::arg("spd"), "(tr(s - ln s - I), tr(s + s^-1 - 2I))");
  m.def(
      "pair_inequality_slacks",
      [](const std::array<double, 3>& s, const std::array<double, 3>& t) {
        const auto r =
            verify_pair_inequalities(SpdMat(sym_from_tuple(s)), SpdMat(sym_from_tuple(t)));
        py::dict d;
        d["trace_product"] = r.trace_product;
        d["relative_entropy"] = r.relative_entropy;
        d["bregman"] = r.bregman;
        return d;
      },
      py::arg("s"), py::arg("t"));
  m.def(
      "decompose_gradient",
      [](const std::array<double, 4>& g, const std::array<double, 3>& s,
         double degeneracy_tol) {
        const GradDecomposition d = decompose_gradient(
            Mat2{g[0], g[1], g[2], g[3]}, SpdMat(sym_from_tuple(s)), degeneracy_tol);
        py::dict out;
        out["omega"] = d.omega;
        out["b"] = sym_to_tuple(d.b);
        out["n"] = d.n;
        return out;
      },
      py::arg("grad"), py::arg("spd"), py::arg("degeneracy_tol") = 1e-10,
      "Split grad = Omega + B + N s^-1 (antisymmetric parts as coefficients of "
      "[[0,1],[-1,0]])");

  py::class_<Mesh>(m, "Mesh")
      .def_property_readonly("num_vertices", &Mesh::num_vertices)
      .def_property_readonly("num_triangles", &Mesh::num_triangles)
      .def_property_readonly("num_edges", &Mesh::num_edges)
      .def_property_readonly("total_area", &Mesh::total_area)
      .def_property_readonly("mesh_size", &Mesh::mesh_size)
      .def("locate",
           [](const Mesh& mm, double x, double y, int hint) {
             const auto loc = mm.locate({x, y}, hint);
             return py::make_tuple(loc.element, loc.bary);
           },
           py::arg("x"), py::arg("y"), py::arg("hint") = 0);

  m.def("build_structured_mesh",
        [](int nx, int ny) { return build_structured_mesh(nx, ny); }, py::arg("nx"),
        py::arg("ny"));
  m.def("barycentric_refine", &barycentric_refine);

  m.def(
      "verify_lemmas",
      [](int samples, std::uint64_t seed) {
        const LemmaReport r = verify_lemmas(samples, seed);
        py::dict d;
        d["samples"] = r.samples;
        d["seed"] = r.seed;
        d["worst_trace_log_identity"] = r.worst_trace_log_identity;
        d["worst_entropy_slack"] = r.worst_entropy_slack;
        d["worst_pair_slack"] = r.worst_pair_slack;
        d["jacobi_residual"] = r.jacobi_residual;
        d["worst_reconstruction"] = r.worst_reconstruction;
        d["worst_commutation"] = r.worst_commutation;
        d["worst_projection_identity"] = r.worst_projection_identity;
        d["worst_exp_commutation"] = r.worst_exp_commutation;
        d["pass"] = r.pass;
        return d;
      },
      py::arg("samples") = 1000, py::arg("seed") = 20240101);

  m.def(
      "run_simulation",
      [](const std::string& config_path) {
        std::ostringstream log;
        const int code = run_simulation_file(config_path, log);
        py::dict d;
        d["exit_code"] = code;
        d["log"] = log.str();
        return d;
      },
      py::arg("config_path"), "Run a simulation from a config file; returns the "
                              "exit code (0 ok, 2 certificate, 3 solver, 4 config)");

  m.def(
      "simulate",
      [](const std::string& config_text) {
        std::istringstream in(config_text);
        const RunConfig cfg = RunConfig::parse(in);
        const Mesh mesh = build_run_mesh(cfg);
        const SimulationResult res = run_simulation(cfg, mesh);
        py::dict d;
        d["exit_code"] = res.exit_code;
        d["status"] = res.summary.status;
        d["worst_slack"] = res.summary.worst_slack;
        d["tol_dissipation"] = res.summary.tol_dissipation;
        py::list recs;
        for (const auto& r : res.records) recs.append(record_to_dict(r));
        d["records"] = recs;
        return d;
      },
      py::arg("config_text"),
      "Run a simulation from config text; returns records and the certificate "
      "outcome");
}
