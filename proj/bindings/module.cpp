#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <stdexcept>
#include <string>
#include <vector>

#include "fpkit/generator.hpp"
#include "fpkit/harness.hpp"
#include "fpkit/hille1d.hpp"

namespace py = pybind11;
using namespace fpkit;

namespace {

Extension parse_extension(const std::string& name) {
    if (name == "neumann") return Extension::Neumann;
    if (name == "dirichlet") return Extension::Dirichlet;
    throw std::invalid_argument("unknown extension '" + name + "' (neumann, dirichlet)");
}

std::vector<std::string> extension_names(const Scenario& s) {
    std::vector<std::string> out;
    for (Extension e : s.extensions) out.emplace_back(extension_name(e));
    return out;
}

} // namespace

PYBIND11_MODULE(_fpkit, m) {
    m.doc() = "Fokker-Planck generator assembly, evolution and condition checking";

    py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
    py::register_exception<AssemblyError>(m, "AssemblyError", PyExc_ValueError);

    // symbolic layer, string in / string out
    m.def(
        "evaluate",
        [](const std::string& src, const std::vector<double>& x, double t) {
            return expr::evaluate(expr::parse(src), {t, x});
        },
        py::arg("expression"), py::arg("x"), py::arg("t") = 0.0,
        "Evaluate an expression at x = (x1, x2, ...) and time t.");
    m.def(
        "differentiate",
        [](const std::string& src, const std::string& var) {
            expr::Derivative d = expr::differentiate(expr::parse(src), var);
            return py::make_tuple(expr::to_string(d.expr), d.kink);
        },
        py::arg("expression"), py::arg("var"),
        "Symbolic derivative; returns (expression, kink) where kink marks a "
        "one-sided convention at abs/min/max/sign.");

    py::class_<Scenario>(m, "Scenario")
        .def_readonly("name", &Scenario::name)
        .def_readonly("T", &Scenario::T)
        .def_readonly("dt", &Scenario::dt)
        .def_property_readonly("extensions", &extension_names)
        .def_property_readonly("cells", [](const Scenario& s) { return s.grid.cells(); })
        .def("initial_masses",
             [](const Scenario& s) { return s.initial_measure().masses(); })
        .def("__repr__", [](const Scenario& s) {
            return "<Scenario '" + s.name + "', " + std::to_string(s.grid.cells()) + " cells>";
        });

    m.def("catalog", &catalog_names, "Names of the bundled scenarios.");
    m.def("scenario", &catalog_scenario, py::arg("name"), "Load a bundled scenario.");
    m.def("load_scenario", &load_scenario, py::arg("path"), "Load a scenario from a JSON file.");
    m.def("parse_scenario", &parse_scenario, py::arg("text"), py::arg("origin") = "<string>",
          "Parse a scenario from JSON text.");
    m.def("with_resolution", &with_resolution, py::arg("scenario"), py::arg("n1"),
          py::arg("n2") = 0, "Same scenario on a different grid resolution.");

    py::class_<GeneratorMatrix>(m, "Generator")
        .def_property_readonly("size", &GeneratorMatrix::size)
        .def("symmetry_residual", &GeneratorMatrix::symmetry_residual)
        .def("offdiag_min", &GeneratorMatrix::offdiag_min)
        .def("rowsum_relative_max", &GeneratorMatrix::rowsum_relative_max)
        .def("diag_max_abs", &GeneratorMatrix::diag_max_abs)
        .def("apply",
             py::overload_cast<const std::vector<double>&>(&GeneratorMatrix::apply, py::const_),
             py::arg("u"), "Matrix-vector product L u.")
        .def("quad_form", &GeneratorMatrix::quad_form, py::arg("u"), py::arg("v"),
             "Bilinear form u^T (W L) v of the symmetrized generator.");

    m.def(
        "assemble",
        [](const Scenario& s, const std::string& extension) {
            return assemble(s.coeffs, s.grid, parse_extension(extension));
        },
        py::arg("scenario"), py::arg("extension"),
        "Assemble the finite-volume generator under one boundary closure.");

    m.def(
        "solve",
        [](const Scenario& s, const std::string& extension, double dt, double T) {
            GeneratorMatrix gen = assemble(s.coeffs, s.grid, parse_extension(extension));
            SolutionPath path = solve_fpke(gen, s.initial_measure(), dt > 0 ? dt : s.dt,
                                           T > 0 ? T : s.T, TimeScheme::BackwardEuler, extension);
            py::dict out;
            out["times"] = path.times;
            out["mass"] = path.mass_curve();
            out["final_masses"] = path.measures.back().masses();
            return out;
        },
        py::arg("scenario"), py::arg("extension"), py::arg("dt") = 0.0, py::arg("T") = 0.0,
        "Backward-Euler evolution of the scenario's initial measure; returns "
        "times, total-mass curve and the final cell masses.");

    m.def(
        "check",
        [](const Scenario& s, std::uint64_t seed) {
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            for (const ConditionReport& r : run_checkers(s, nullptr, seed)) arr.push_back(r.to_json());
            return arr.dump();
        },
        py::arg("scenario"), py::arg("seed") = 7,
        "Run every condition checker; returns a JSON array string of reports.");

    m.def(
        "compare_extensions",
        [](const Scenario& s, int threads, std::uint64_t seed) {
            return run_uniqueness_proxy(s, threads, seed).to_json().dump();
        },
        py::arg("scenario"), py::arg("threads") = 1, py::arg("seed") = 7,
        "Solve under both closures and compare; returns the experiment as a JSON string.");

    m.def(
        "convergence_study",
        [](const Scenario& s, const std::vector<double>& dts, const std::vector<int>& resolutions,
           int threads) { return run_convergence_study(s, dts, resolutions, threads).to_json().dump(); },
        py::arg("scenario"), py::arg("dts"), py::arg("resolutions"), py::arg("threads") = 1,
        "Residual ladders over dt and a consistency ladder over resolution, as a JSON string.");

    m.def(
        "hille_classify",
        [](const std::string& drift, int ladder_max) {
            return hille_classify(expr::parse(drift), ladder_max).to_json().dump();
        },
        py::arg("drift"), py::arg("ladder_max") = 14,
        "Solvability of the 1-D problems for drift b, as a JSON string.");
    m.def("hille_drift_catalog", &hille_drift_catalog,
          "Drift expressions of the bundled solvability table.");

    m.def(
        "render_report",
        [](const std::vector<std::string>& experiments, const std::filesystem::path& out_dir) {
            std::vector<ExperimentResult> results;
            results.reserve(experiments.size());
            for (const std::string& text : experiments)
                results.push_back(ExperimentResult::from_json(nlohmann::ordered_json::parse(text)));
            render_report(std::move(results), out_dir);
        },
        py::arg("experiments"), py::arg("out_dir"),
        "Write report.json, report.md and curves.csv from experiment JSON strings.");
}
