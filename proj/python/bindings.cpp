#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "runner.hpp"
#include "ucplan/random_termination.hpp"
#include "ucplan/robust.hpp"
#include "ucplan/scenarios.hpp"
#include "ucplan/time_marching.hpp"

namespace py = pybind11;
using namespace ucplan;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using BoolArray = py::array_t<bool, py::array::c_style | py::array::forcecast>;

// Arrays are indexed [j, i] with j along y, matching the row-major lattice.
GridSpec spec_of(const Array& a, double h, Point origin) {
    if (a.ndim() != 2) throw InvalidInput("expected a 2-D array");
    return GridSpec(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), origin, h);
}

ScalarField to_field(const Array& a, const GridSpec& spec) {
    if (a.ndim() != 2 || a.shape(0) != spec.ny() || a.shape(1) != spec.nx())
        throw InvalidInput("array shape does not match the lattice");
    return ScalarField(spec, std::vector<double>(a.data(), a.data() + a.size()));
}

DomainMask to_mask(const std::optional<BoolArray>& m, const GridSpec& spec) {
    if (!m) return DomainMask(spec);
    if (m->ndim() != 2 || m->shape(0) != spec.ny() || m->shape(1) != spec.nx())
        throw InvalidInput("mask shape does not match the lattice");
    return DomainMask(spec, std::vector<unsigned char>(m->data(), m->data() + m->size()));
}

Array to_array(const ScalarField& f) {
    Array out({f.spec().ny(), f.spec().nx()});
    std::copy(f.values().begin(), f.values().end(), out.mutable_data());
    return out;
}

BoolArray mask_array(const DomainMask& m) {
    BoolArray out({m.spec().ny(), m.spec().nx()});
    bool* d = out.mutable_data();
    for (std::size_t k = 0; k < m.spec().size(); ++k) d[k] = m.inside(k);
    return out;
}

TargetEnsemble to_ensemble(const std::vector<Array>& fields, const std::vector<double>& probs, double h) {
    if (fields.empty()) throw InvalidInput("need at least one field");
    const GridSpec spec = spec_of(fields.front(), h, {0.0, 0.0});
    TargetEnsemble e;
    for (const auto& f : fields) {
        e.fields.push_back(to_field(f, spec));
        e.targets.push_back({});
    }
    e.probs = probs;
    validate_ensemble(e);
    return e;
}

Point to_point(const std::pair<double, double>& p) { return {p.first, p.second}; }

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Grid-based planning under delayed target certainty";

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<Infeasible>(m, "Infeasible", PyExc_RuntimeError);
    py::register_exception<Stagnation>(m, "Stagnation", PyExc_RuntimeError);

    m.def(
        "solve_eikonal",
        [](const Array& speed, const Array& cost, const std::vector<std::pair<double, double>>& sources, double h,
           std::pair<double, double> origin, std::optional<BoolArray> mask) {
            const GridSpec spec = spec_of(speed, h, to_point(origin));
            std::vector<Point> pts;
            for (const auto& s : sources) pts.push_back(to_point(s));
            const ScalarField f = to_field(speed, spec);
            const ScalarField K = to_field(cost, spec);
            const DomainMask dom = to_mask(mask, spec);
            const ValueSolution sol = [&] {
                py::gil_scoped_release release;
                return solve_stationary(f, K, pts, dom);
            }();
            return py::make_tuple(to_array(sol.u), sol.max_residual);
        },
        py::arg("speed"), py::arg("cost"), py::arg("sources"), py::arg("h"), py::arg("origin") = std::pair{0.0, 0.0},
        py::arg("mask") = py::none(),
        "Value of |grad u| f = K with u = 0 at the sources. Returns (u, max_residual).");

    m.def(
        "solve_random_termination",
        [](const Array& q, const Array& speed, double lambda, double h, std::optional<Array> cost,
           std::optional<BoolArray> mask) {
            const GridSpec spec = spec_of(q, h, {0.0, 0.0});
            const ScalarField K = cost ? to_field(*cost, spec) : ScalarField(spec, 0.0);
            const auto sol =
                solve_random_termination(to_field(q, spec), to_field(speed, spec), lambda, to_mask(mask, spec), K);
            return py::make_tuple(to_array(sol.u), mask_array(sol.motionless), sol.max_residual);
        },
        py::arg("q"), py::arg("speed"), py::arg("lam"), py::arg("h"), py::arg("cost") = py::none(),
        py::arg("mask") = py::none(), "Returns (u, motionless, max_residual).");

    m.def(
        "march_backward",
        [](const Array& terminal, const Array& speed, const Array& cost, double t_end, double t_start, double h,
           std::optional<BoolArray> mask) {
            const GridSpec spec = spec_of(terminal, h, {0.0, 0.0});
            const auto v = march_backward(to_field(terminal, spec), to_field(speed, spec), to_field(cost, spec), t_end,
                                          t_start, to_mask(mask, spec));
            return to_array(v.initial());
        },
        py::arg("terminal"), py::arg("speed"), py::arg("cost"), py::arg("t_end"), py::arg("t_start"), py::arg("h"),
        py::arg("mask") = py::none(), "Value at t_start of the backward explicit march.");

    m.def(
        "expected_field",
        [](const std::vector<Array>& fields, const std::vector<double>& probs) {
            return to_array(expected_field(to_ensemble(fields, probs, 1.0)));
        },
        py::arg("fields"), py::arg("probs"));
    m.def(
        "worst_field",
        [](const std::vector<Array>& fields) {
            return to_array(worst_field(to_ensemble(fields, std::vector<double>(fields.size(), 1.0 / fields.size()), 1.0)));
        },
        py::arg("fields"));
    m.def(
        "risk_sensitive_field",
        [](const std::vector<Array>& fields, const std::vector<double>& probs, double beta) {
            return to_array(risk_sensitive_field(to_ensemble(fields, probs, 1.0), beta));
        },
        py::arg("fields"), py::arg("probs"), py::arg("beta"));
    m.def(
        "dr_field",
        [](const std::vector<Array>& fields, const std::vector<double>& probs, double delta) {
            return to_array(dr_field(to_ensemble(fields, probs, 1.0), delta));
        },
        py::arg("fields"), py::arg("probs"), py::arg("delta"));

    m.def("tv_distance", [](const std::vector<double>& p, const std::vector<double>& o) { return tv_distance(p, o); });
    m.def(
        "dr_worst_distribution",
        [](const std::vector<double>& p, const std::vector<double>& u, double delta) {
            return dr_worst_distribution(p, u, delta);
        },
        py::arg("probs"), py::arg("values"), py::arg("delta"));

    m.def(
        "chance_constrained_policy",
        [](const std::vector<Array>& fields, const std::vector<double>& probs, const BoolArray& reachable, double C,
           double epsilon) {
            const TargetEnsemble e = to_ensemble(fields, probs, 1.0);
            const DomainMask R = to_mask(reachable, e.spec());
            const WaypointPolicy pol = chance_constrained_policy(e, expected_field(e), R, C, epsilon);
            py::list atoms;
            for (const auto& a : pol.atoms) {
                const NodeIndex n = e.spec().index_of(a.waypoint.node);
                atoms.append(py::make_tuple(n.j, n.i, a.probability));
            }
            return py::make_tuple(atoms, pol.objective, pol.risk);
        },
        py::arg("fields"), py::arg("probs"), py::arg("reachable"), py::arg("C"), py::arg("epsilon"),
        "Returns ([(j, i, probability)], objective, risk).");

    m.def("builtin_scenario_names", &builtin_scenario_names);
    m.def(
        "scenario_json", [](const std::string& name_or_path) { return scenario_to_json(load_scenario(name_or_path)); },
        py::arg("name_or_path"), "Normalized JSON text of a built-in scenario or config file.");

    m.def(
        "scenario_fields",
        [](const std::string& name_or_path, std::optional<int> grid) {
            ScenarioDef def = load_scenario(name_or_path);
            if (grid) def.grid = *grid;
            validate_scenario(def);
            py::dict out;
            std::vector<Array> fields;
            Scenario sc = build_scenario(def);
            const auto [e, start] = [&] {
                py::gil_scoped_release release;
                return std::pair{solve_ensemble(sc), solve_from_start(sc)};
            }();
            for (const auto& f : e.fields) fields.push_back(to_array(f));
            out["start"] = to_array(start.u);
            out["probs"] = e.probs;
            out["h"] = sc.grid.h();
            out["mask"] = mask_array(sc.mask);
            out["speed"] = to_array(sc.speed);
            out["fields"] = fields;
            return out;
        },
        py::arg("name_or_path"), py::arg("grid") = py::none(),
        "Solved lattice data of a scenario: speed, mask, per-hypothesis fields and start distances.");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process. Returns (exit_code, stdout, stderr).");
}
