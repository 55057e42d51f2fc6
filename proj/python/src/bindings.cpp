#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "qtoc/clockform.hpp"
#include "qtoc/errors.hpp"
#include "qtoc/flows.hpp"
#include "qtoc/selfcheck.hpp"
#include "qtoc/synthesis.hpp"

namespace py = pybind11;
using namespace qtoc;

namespace {

using Pair = std::pair<double, double>;

Vec2 vec(const Pair& p) { return {p.first, p.second}; }
Pair pair(const Vec2& v) { return {v.x(), v.y()}; }

std::vector<Pair> pairs(const std::vector<Vec2>& pts) {
    std::vector<Pair> out;
    out.reserve(pts.size());
    for (const auto& x : pts) {
        out.push_back(pair(x));
    }
    return out;
}

py::dict trajectory_dict(const Trajectory& tr) {
    std::vector<double> t, x2, x3, u;
    for (const auto& s : tr.samples) {
        t.push_back(s.t);
        x2.push_back(s.x.x());
        x3.push_back(s.x.y());
        u.push_back(s.u);
    }
    py::dict d;
    d["t"] = t;
    d["x2"] = x2;
    d["x3"] = x3;
    d["u"] = u;
    d["word"] = tr.word.pattern();
    return d;
}

py::dict query_dict(const QueryResult& q) {
    std::vector<std::string> ties;
    for (const auto& w : q.ties) {
        ties.push_back(w.pattern());
    }
    std::vector<std::pair<std::string, double>> arcs;
    for (const auto& a : q.word.arcs()) {
        arcs.emplace_back(to_string(a.kind), a.duration);
    }
    py::dict d;
    d["word"] = q.word.pattern();
    d["time"] = q.time;
    d["arcs"] = arcs;
    d["ties"] = ties;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Time-optimal control of a dissipative two-level system on the Bloch disk";

    static py::exception<InfeasibleQueryError> infeasible(m, "InfeasibleQueryError", PyExc_RuntimeError);
    static py::exception<ClockFormSingularError> clock_singular(m, "ClockFormSingularError", PyExc_ArithmeticError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const InfeasibleQueryError& e) {
            py::set_error(infeasible, e.what());
        } catch (const ClockFormSingularError& e) {
            py::set_error(clock_singular, e.what());
        } catch (const ValidationError& e) {
            py::set_error(PyExc_ValueError, e.what());
        } catch (const InadmissibleSingularError& e) {
            py::set_error(PyExc_ValueError, e.what());
        } catch (const NumericalError& e) {
            py::set_error(PyExc_RuntimeError, e.what());
        }
    });

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init(&ModelParams::make), py::arg("gamma_total"), py::arg("gamma12"), py::arg("gamma21"))
        .def_readonly("gamma_total", &ModelParams::gamma_total)
        .def_readonly("gamma12", &ModelParams::gamma12)
        .def_readonly("gamma21", &ModelParams::gamma21)
        .def_property_readonly("gamma_plus", &ModelParams::gamma_plus)
        .def_property_readonly("gamma_minus", &ModelParams::gamma_minus)
        .def("__repr__", [](const ModelParams& p) {
            std::ostringstream s;
            s << "ModelParams(gamma_total=" << p.gamma_total << ", gamma12=" << p.gamma12
              << ", gamma21=" << p.gamma21 << ")";
            return s.str();
        });

    m.def("table_case", &table_case, py::arg("tag"), "Reference parameter set 'a'..'d'");
    m.def("table_initial_state", [](char tag) { return pair(table_initial_state(tag)); }, py::arg("tag"));
    m.def("classify_case", [](const ModelParams& p) { return to_string(classify_case(p)); }, py::arg("params"));
    m.def("delta_A", [](const Pair& x, const ModelParams& p) { return delta_A(vec(x), p); });
    m.def("delta_B", [](const Pair& x, const ModelParams& p) { return delta_B(vec(x), p); });
    m.def("accessibility_dimension", &accessibility_dimension, py::arg("params"));

    m.def(
        "bang_flow",
        [](const Pair& x0, const ModelParams& p, int eps, double t) {
            return pair(bang_flow(BlochState(vec(x0)), p, eps, t).vec());
        },
        py::arg("x0"), py::arg("params"), py::arg("eps"), py::arg("t"));
    m.def(
        "propagate_word",
        [](const Pair& x0, const ModelParams& p, const std::string& word, double spacing) {
            return trajectory_dict(propagate_word(BlochState(vec(x0)), p, ControlWord::parse(word), spacing));
        },
        py::arg("x0"), py::arg("params"), py::arg("word"), py::arg("sample_spacing") = kSampleSpacing);
    m.def(
        "compare_words",
        [](const Pair& x0, const ModelParams& p, const std::string& w1, const std::string& w2) {
            const BlochState s0(vec(x0));
            const Trajectory t1 = propagate_word(s0, p, ControlWord::parse(w1));
            const Trajectory t2 = propagate_word(s0, p, ControlWord::parse(w2));
            StokesReport r;
            try {
                r = stokes_compare(t1, t2, p);
            } catch (const ClockFormSingularError&) {
                r = direct_compare(t1, t2);
            }
            return to_json(r).dump();
        },
        py::arg("x0"), py::arg("params"), py::arg("word1"), py::arg("word2"),
        "JSON report comparing two words with common endpoints");

    py::class_<ReachableSet>(m, "ReachableSet")
        .def("contains", [](const ReachableSet& r, const Pair& x) { return r.contains(vec(x)); }, py::arg("x"))
        .def("distance_to_boundary", [](const ReachableSet& r, const Pair& x) { return r.distance_to_boundary(vec(x)); })
        .def_property_readonly("polygon", [](const ReachableSet& r) { return pairs(r.polygon); })
        .def_property_readonly("limit_points", [](const ReachableSet& r) { return pairs(r.limit_points); })
        .def_readonly("warnings", &ReachableSet::warnings)
        .def("to_json", [](const ReachableSet& r) { return reachable_to_json(r).dump(); });
    m.def(
        "reachable_set",
        [](const Pair& x0, const ModelParams& p, double horizon) { return reachable_set(BlochState(vec(x0)), p, horizon); },
        py::arg("x0"), py::arg("params"), py::arg("horizon") = 30.0);

    py::class_<SynthesisChart>(m, "SynthesisChart")
        .def_property_readonly("case_class", [](const SynthesisChart& c) { return to_string(c.case_class); })
        .def_readonly("resolution", &SynthesisChart::resolution)
        .def_readonly("flags", &SynthesisChart::flags)
        .def_property_readonly("reach", [](const SynthesisChart& c) { return c.reach; })
        .def_property_readonly("words",
                               [](const SynthesisChart& c) {
                                   std::vector<std::string> out;
                                   for (const auto& r : c.regions) {
                                       if (std::find(out.begin(), out.end(), r.word) == out.end()) {
                                           out.push_back(r.word);
                                       }
                                   }
                                   return out;
                               })
        .def(
            "query",
            [](const SynthesisChart& c, const Pair& x) { return query_dict(min_time_query(c, BlochState(vec(x)))); },
            py::arg("target"))
        .def("check", &check_chart)
        .def("to_json", [](const SynthesisChart& c) { return chart_to_json(c).dump(); })
        .def("svg", [](const SynthesisChart& c) {
            std::ostringstream s;
            write_chart_svg(s, c);
            return s.str();
        })
        .def("grid_csv", [](const SynthesisChart& c) {
            std::ostringstream s;
            write_grid_csv(s, c);
            return s.str();
        });
    m.def(
        "build_synthesis",
        [](const Pair& x0, const ModelParams& p, double horizon, int resolution) {
            py::gil_scoped_release release;
            return build_synthesis(BlochState(vec(x0)), p, horizon, resolution);
        },
        py::arg("x0"), py::arg("params"), py::arg("horizon") = 30.0, py::arg("resolution") = 201);

    m.def(
        "brute_force_oracle",
        [](const Pair& x0, const ModelParams& p, const Pair& target, double dt, int levels, int grid) {
            py::gil_scoped_release release;
            const OracleResult r = brute_force_oracle(BlochState(vec(x0)), p, BlochState(vec(target)), dt, levels, grid);
            return std::make_pair(r.reached, r.time);
        },
        py::arg("x0"), py::arg("params"), py::arg("target"), py::arg("dt") = 1e-3, py::arg("levels") = 1,
        py::arg("grid") = 101, "(reached, time) from grid dynamic programming");

    m.def("selfcheck", []() { return to_json(selfcheck_reference()).dump(); },
          "JSON report of the invariant suite over the reference cases");
}
