#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mixlab/fock.hpp"
#include "mixlab/harness.hpp"
#include "mixlab/hartree.hpp"

namespace py = pybind11;
using namespace mixlab;

namespace {

py::dict record_dict(const ConvergenceRecord& r) {
  py::dict d;
  d["pipeline"] = to_string(r.pipeline);
  d["N1"] = r.n1;
  d["N2"] = r.n2;
  d["t"] = r.t;
  d["trace_distance"] = r.trace_distance;
  d["p_sum"] = r.p_sum;
  d["m10"] = r.m10;
  d["m01"] = r.m01;
  d["m11"] = r.m11;
  d["mass_drift"] = r.mass_drift;
  d["energy_drift"] = r.energy_drift;
  d["truncation_deficit"] = r.truncation_deficit;
  d["deficit_flag"] = r.deficit_flag;
  return d;
}

py::dict result_dict(const ExperimentResult& res) {
  py::list records;
  for (const auto& r : res.records) records.append(record_dict(r));
  py::dict d;
  d["records"] = records;
  d["skipped"] = res.skipped;
  return d;
}

RunConfig checked(const std::string& json_text) {
  RunConfig c = parse_config(json_text);
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-species mean-field convergence experiments";
  m.attr("__version__") = MIXLAB_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("default_cutoff", &default_cutoff, py::arg("n"));
  m.def("sector_dimension", &sector_dimension, py::arg("modes"), py::arg("particles"));
  m.def(
      "normalize_config", [](const std::string& text) { return config_to_json(checked(text)); },
      py::arg("config_json"), "Parse, validate and echo a configuration with defaults filled in.");

  m.def(
      "hartree_trajectory",
      [](const std::string& text) {
        const RunConfig c = checked(text);
        const LatticeModel model = build_model(c);
        const auto [u, v] = initial_orbitals(c);
        HartreeTrajectory traj;
        {
          py::gil_scoped_release release;
          traj = evolve({u, v, 0.0}, model, c.couplings, c.time.t_final, c.time.dt, c.time.stride);
        }
        std::vector<double> t, m1, m2, e;
        for (const auto& s : traj.samples) {
          t.push_back(s.t);
          m1.push_back(s.mass1);
          m2.push_back(s.mass2);
          e.push_back(s.energy);
        }
        py::dict d;
        d["t"] = t;
        d["mass1"] = m1;
        d["mass2"] = m2;
        d["energy"] = e;
        return d;
      },
      py::arg("config_json"));

  m.def(
      "run_exact",
      [](const std::string& text) {
        const RunConfig c = checked(text);
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_fixed_sector_experiment(c);
        }
        return result_dict(res);
      },
      py::arg("config_json"));

  m.def(
      "run_coherent",
      [](const std::string& text) {
        const RunConfig c = checked(text);
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_coherent_experiment(c);
        }
        return result_dict(res);
      },
      py::arg("config_json"));
}
