#include "ctraj/runs.hpp"
#include "ctraj/wkb.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace ctraj;

namespace {

py::object from_json(const std::string& text) {
    return py::module_::import("json").attr("loads")(text);
}

py::dict field_dict(const SemiclassicalField& f) {
    const std::size_t n = f.targets.size();
    const int d = n ? static_cast<int>(f.targets.front().X.size()) : 0;
    py::array_t<double> X({n, static_cast<std::size_t>(d)});
    py::array_t<Complex> total(n);
    py::array_t<bool> empty(n);
    auto x = X.mutable_unchecked<2>();
    auto t = total.mutable_unchecked<1>();
    auto e = empty.mutable_unchecked<1>();
    py::list branches;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& tr = f.targets[k];
        for (int i = 0; i < d; ++i) x(k, i) = tr.X[i];
        t(k) = tr.total;
        e(k) = tr.empty;
        py::list bs;
        for (const auto& b : tr.branches) {
            py::dict bd;
            bd["id"] = b.branch_id;
            bd["x_start"] = b.x_start;
            bd["contribution"] = b.contribution;
            bd["classification"] = std::string(to_string(b.classification));
            bd["det_U"] = b.det_U;
            bs.append(bd);
        }
        branches.append(bs);
    }
    py::dict out;
    out["X"] = X;
    out["total"] = total;
    out["empty"] = empty;
    out["branches"] = branches;
    out["method"] = std::string(to_string(f.method));
    out["order"] = f.order;
    out["newton_iterations"] = f.newton_iterations();
    out["shooting_attempts"] = f.shooting_attempts();
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Complex-trajectory semiclassical propagation (C++ core)";

    py::register_exception<Error>(m, "CtrajError", PyExc_RuntimeError);

    py::class_<RunConfig>(m, "RunConfig")
        .def_readwrite("potential", &RunConfig::potential)
        .def_readwrite("dimension", &RunConfig::dimension)
        .def_readwrite("potential_params", &RunConfig::potential_params)
        .def_readwrite("hbar", &RunConfig::hbar)
        .def_readwrite("mass", &RunConfig::mass)
        .def_readwrite("T", &RunConfig::T)
        .def_readwrite("order", &RunConfig::order)
        .def_readwrite("seed", &RunConfig::seed)
        .def_readwrite("jitter", &RunConfig::jitter)
        .def_readwrite("continuation", &RunConfig::continuation)
        .def_readwrite("oracle_enabled", &RunConfig::oracle_enabled)
        .def_readwrite("oracle_steps", &RunConfig::oracle_steps)
        .def_property(
            "method", [](const RunConfig& c) { return std::string(to_string(c.method)); },
            [](RunConfig& c, const std::string& s) { c.method = method_from_string(s); })
        .def("validate", [](const RunConfig& c) { validate(c); })
        .def("to_ini", [](const RunConfig& c) { return to_ini(c); })
        .def("__eq__", [](const RunConfig& a, const RunConfig& b) { return a == b; });

    m.def("parse_config", &parse_config_string, py::arg("text"), "Parse an INI run configuration.");
    m.def("load_config", &parse_config_file, py::arg("path"));

    m.def(
        "propagate",
        [](const RunConfig& c) {
            SemiclassicalField f;
            {
                py::gil_scoped_release release;
                f = run_propagate(c);
            }
            return field_dict(f);
        },
        py::arg("config"), "Semiclassical wave function over the configured targets.");
    m.def(
        "propagate_csv", [](const RunConfig& c) { return field_to_csv(run_propagate(c)); }, py::arg("config"));
    m.def(
        "compare",
        [](const RunConfig& c) {
            std::string text;
            {
                py::gil_scoped_release release;
                text = compare_to_json(c, run_compare(c));
            }
            return from_json(text);
        },
        py::arg("config"), "Semiclassical field against the split-step oracle; JSON report as a dict.");
    m.def(
        "checks",
        [](const RunConfig& c, const std::string& selector) {
            std::string text;
            {
                py::gil_scoped_release release;
                text = reports_to_json(run_checks(c, check_selector_from_string(selector)));
            }
            return from_json(text);
        },
        py::arg("config"), py::arg("selector") = "all");
    m.def(
        "propagator",
        [](const RunConfig& c) {
            std::string text;
            {
                py::gil_scoped_release release;
                text = propagator_to_json(run_propagator(c));
            }
            return from_json(text);
        },
        py::arg("config"), "Coherent-state overlap between [packet] and [final_packet].");
    m.def(
        "branches", [](const RunConfig& c) { return from_json(branches_to_json(run_propagate(c))); },
        py::arg("config"));

    m.def(
        "free_particle_exact",
        [](double X, double x0, double p0, Complex a, double hbar, double mass, double T) {
            return free_particle_exact(X, GaussianPacket::one_d(x0, p0, a, hbar, mass), T);
        },
        py::arg("X"), py::arg("x0"), py::arg("p0"), py::arg("a"), py::arg("hbar"), py::arg("mass"), py::arg("T"),
        "Closed-form free evolution of exp(-a (x-x0)^2/hbar + i p0 (x-x0)/hbar).");
    m.def(
        "harmonic_exact",
        [](double X, double k, double x0, double p0, Complex a, double hbar, double mass, double T) {
            return harmonic_exact(X, k, GaussianPacket::one_d(x0, p0, a, hbar, mass), T);
        },
        py::arg("X"), py::arg("k"), py::arg("x0"), py::arg("p0"), py::arg("a"), py::arg("hbar"), py::arg("mass"),
        py::arg("T"));
    m.def("state_size", &state_size, py::arg("n"), py::arg("d"),
          "Number of complex scalars in the order-n hierarchy in d dimensions.");
    m.def("capability_matrix", &capability_matrix);
    m.def(
        "stirling",
        [](double n, double N, double S) {
            const auto r = stirling_modified(n, N, S);
            py::dict d;
            d["correction"] = r.correction;
            d["log_leading"] = r.log_leading;
            d["log_corrected"] = r.log_corrected;
            d["log_reference"] = r.log_reference;
            d["leading_error"] = r.leading_error;
            d["corrected_error"] = r.corrected_error;
            return d;
        },
        py::arg("n"), py::arg("N"), py::arg("S"));
}
