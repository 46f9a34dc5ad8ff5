#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rcchain/chain_detect.hpp"
#include "rcchain/error.hpp"
#include "rcchain/harness.hpp"
#include "rcchain/reducer.hpp"
#include "rcchain/spectral.hpp"
#include "rcchain/transim.hpp"

namespace py = pybind11;
using namespace rcchain;

namespace {

WaveformSpec wave_arg(const std::string& text) {
    const auto low = to_lower(text);
    if (low == "sin") return standard_sin();
    if (low == "pulse") return standard_pulse();
    if (low == "exp") return standard_exp();
    return parse_waveform(text);
}

py::dict chain_dict(const Chain& c) {
    py::dict d;
    d["port"] = c.port;
    d["interior"] = c.interior;
    d["n"] = c.n;
    d["R"] = c.R;
    d["C"] = c.C;
    d["closed_terminal"] = c.closed_terminal;
    d["tau_c"] = time_constant(c);
    return d;
}

}  // namespace

PYBIND11_MODULE(_rcchain, m) {
    m.doc() = "RC chain detection, spectral coefficients and chain reduction";

    // Translators run newest first, so the base class goes in first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
    py::register_exception<QuadratureError>(m, "QuadratureError", PyExc_RuntimeError);

    m.def(
        "detect_chains",
        [](const std::string& text, double rel_tol) {
            const auto nl = parse_netlist(text);
            py::list out;
            for (const auto& c : detect_chains(build_graph(nl), rel_tol)) out.append(chain_dict(c));
            return out;
        },
        py::arg("netlist_text"), py::arg("rel_tol") = kDefaultChainRelTol,
        "Chains of a netlist given as text, as a list of dicts.");

    m.def(
        "reduce",
        [](const std::string& text, double step, double duration, double alpha, std::size_t min_chain_len) {
            ReducerConfig cfg;
            cfg.step_s = step;
            cfg.sim_duration_T = duration;
            cfg.alpha = alpha;
            ReduceOptions opt;
            opt.min_chain_len = min_chain_len;
            const auto plan = reduce_netlist(parse_netlist(text), cfg, opt);
            return py::make_tuple(emit_netlist(plan.result.netlist), format_reduction_report(plan.rows));
        },
        py::arg("netlist_text"), py::arg("step") = 1e-12, py::arg("duration") = 1e-9, py::arg("alpha") = 10.0,
        py::arg("min_chain_len") = 1, "Returns (reduced netlist text, report CSV).");

    m.def(
        "roundtrip",
        [](const std::string& text) { return emit_netlist(parse_netlist(text)); }, py::arg("netlist_text"));

    m.def(
        "admittance",
        [](std::size_t n, double R, double C, double omega) { return admittance({n, R, C, 1e4, 1e-12}, omega); },
        py::arg("n"), py::arg("R"), py::arg("C"), py::arg("omega"));

    m.def(
        "fn_gn",
        [](std::size_t n, double R, double C, double s, double M) {
            const auto fg = fn_gn({n, R, C, M, s});
            return py::make_tuple(fg.F, fg.G);
        },
        py::arg("n"), py::arg("R"), py::arg("C"), py::arg("s") = 1e-12, py::arg("M") = 1e4,
        "(F_n, G_n) of a uniform chain.");

    m.def(
        "simulate_full",
        [](std::size_t n, double R, double C, const std::string& source, double step, double duration) {
            const auto tr = simulate_full(make_uniform_chain(n, R, C), wave_arg(source), {step, duration, 0.0});
            return py::make_tuple(tr.times, tr.v0, tr.current);
        },
        py::arg("n"), py::arg("R"), py::arg("C"), py::arg("source") = "sin", py::arg("step") = 1e-12,
        py::arg("duration") = 1e-9, "(times, v0, current) of the full chain.");

    m.def(
        "weighted_errors",
        [](const std::vector<double>& ref, const std::vector<double>& our) {
            const auto r = weighted_errors(ref, our);
            return py::make_tuple(r.E_abs, r.E_rel);
        },
        py::arg("ref"), py::arg("our"), "(E_abs, E_rel).");

    m.def(
        "run_sweep",
        [](const std::string& wave, double C, std::vector<std::size_t> ns, double step, double duration,
           unsigned jobs) {
            ExperimentConfig cfg;
            cfg.waveform = wave_arg(wave);
            cfg.C = C;
            cfg.n_sweep = std::move(ns);
            cfg.step_s = step;
            cfg.duration_T = duration;
            py::list out;
            for (const auto& r : run_sweep(cfg, jobs)) {
                py::dict d;
                d["n"] = r.n;
                d["regime"] = to_string(r.regime);
                d["model"] = r.model;
                d["E_abs"] = r.E_abs;
                d["E_rel"] = r.E_rel;
                d["diverged"] = r.diverged;
                out.append(d);
            }
            return out;
        },
        py::arg("wave"), py::arg("C"), py::arg("n"), py::arg("step") = 1e-12, py::arg("duration") = 1e-9,
        py::arg("jobs") = 1);
}
