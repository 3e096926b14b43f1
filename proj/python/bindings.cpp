// Thin pybind11 layer. Structured values cross the boundary as JSON text; the
// Python package decodes them with the json module.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "renewal/bounds.hpp"
#include "renewal/config.hpp"
#include "renewal/coupling.hpp"
#include "renewal/errors.hpp"
#include "renewal/experiment.hpp"
#include "renewal/simulation.hpp"

namespace py = pybind11;
using namespace renewal;
using nlohmann::json;

namespace {

RunConfig parse_config(const std::string& text) { return config_from_json(json::parse(text)); }

LawPtr parse_law(const std::string& text) { return make_law(json::parse(text)); }

std::string bounds_json(const std::string& config) {
  py::gil_scoped_release release;
  return to_json(compute_bounds(parse_config(config))).dump();
}

py::tuple experiment_json(const std::string& config) {
  std::string bounds;
  std::string sim;
  std::string csv;
  bool pass = false;
  {
    py::gil_scoped_release release;
    const ExperimentReport r = run_experiment(parse_config(config));
    bounds = to_json(r.bounds).dump();
    sim = to_json(r.sim, r.verdicts).dump();
    csv = tv_curve_csv(r.bounds, &r.sim);
    pass = all_gating_pass(r.verdicts);
  }
  return py::make_tuple(bounds, sim, csv, pass);
}

std::string coupling_params_json(const std::string& law, double threshold) {
  const CouplingParams p = coupling_params(parse_law(law), threshold);
  return json{{"theta", p.threshold}, {"R", p.lorden_ratio}, {"p0", p.p0},
              {"kappa_theta", p.kappa_theta}, {"pi", p.pi}, {"q", p.q}}
      .dump();
}

std::vector<double> tau_samples(const std::string& law, double b, double b_prime, double threshold,
                                std::size_t replicas, std::uint64_t seed) {
  const LawPtr l = parse_law(law);
  py::gil_scoped_release release;
  return simulate_tau(l, b, b_prime, threshold, replicas, seed).samples;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Coupling-epoch bounds for renewal processes";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

  m.def("toml_to_json", [](const std::string& text) { return toml_to_json(text).dump(); }, py::arg("text"));
  m.def("normalize_config", [](const std::string& config) { return config_to_json(parse_config(config)).dump(); },
        py::arg("config"));
  m.def("load_config", [](const std::string& path) { return config_to_json(load_config(path)).dump(); },
        py::arg("path"));
  m.def("compute_bounds", &bounds_json, py::arg("config"));
  m.def("run_experiment", &experiment_json, py::arg("config"));
  m.def("check_report", &check_report, py::arg("kind"), py::arg("text"));

  m.def("overlap", [](const std::string& a, const std::string& b) { return overlap(parse_law(a), parse_law(b)); },
        py::arg("first"), py::arg("second"));
  m.def("s_ell", [](double q, double ell) { return s_ell(q, ell); }, py::arg("q"), py::arg("ell"));
  m.def("coupling_params", &coupling_params_json, py::arg("law"), py::arg("theta"));
  m.def("simulate_tau", &tau_samples, py::arg("law"), py::arg("b"), py::arg("b_prime"), py::arg("theta"),
        py::arg("replicas"), py::arg("seed"));
}
