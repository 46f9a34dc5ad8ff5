// Command-line front end: detect, reduce, simulate, sweep, compare, tabulate-fg.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rcchain/chain_detect.hpp"
#include "rcchain/harness.hpp"
#include "rcchain/netlist.hpp"
#include "rcchain/reducer.hpp"
#include "rcchain/spectral.hpp"
#include "rcchain/transim.hpp"

using namespace rcchain;

namespace {

constexpr int kExitAssert = 2;

struct Timing {
    std::string step = "1ps";
    std::string duration = "1ns";
    std::string alpha = "10";
};

void add_timing(CLI::App* cmd, Timing& t) {
    cmd->add_option("--step", t.step, "time step s (SPICE units accepted)")->capture_default_str();
    cmd->add_option("--duration", t.duration, "simulated duration T")->capture_default_str();
    cmd->add_option("--alpha", t.alpha, "regime threshold alpha")->capture_default_str();
}

ReducerConfig reducer_config(const Timing& t) {
    ReducerConfig c;
    c.step_s = require_spice_value(t.step, "--step");
    c.sim_duration_T = require_spice_value(t.duration, "--duration");
    c.alpha = require_spice_value(t.alpha, "--alpha");
    c.validate();
    return c;
}

// Writes to `path`, or stdout when it is empty or "-".
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
        return;
    }
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    fn(f);
    if (!f) throw Error("write failed: " + path);
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

WaveformSpec wave_arg(const std::string& text, double step_s) {
    const auto low = to_lower(text);
    // Paper waveforms by family name, scaled to the 1ns/100ns table when the
    // step is 1 ns.
    const bool slow = step_s >= 1e-9 * (1.0 - 1e-9);
    if (low == "sin") return slow ? WaveformSpec{SinWave{0, 1, 100e6, 0, 0, 90}} : standard_sin();
    if (low == "pulse") return slow ? WaveformSpec{PulseWave{-1, 1, 2e-9, 2e-9, 2e-9, 50e-9, 100e-9}} : standard_pulse();
    if (low == "exp") return slow ? WaveformSpec{ExpWave{-4, -1, 2e-9, 30e-9, 60e-9, 40e-9}} : standard_exp();
    return parse_waveform(text);
}

std::vector<std::size_t> parse_n_list(const std::string& text) {
    // "1,2,4" or "1..128" or "pow2:128"
    std::vector<std::size_t> out;
    if (text.rfind("pow2:", 0) == 0) {
        const auto max = std::stoul(text.substr(5));
        for (std::size_t n = 1; n <= max; n *= 2) out.push_back(n);
        return out;
    }
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const auto lo = std::stoul(text.substr(0, dots));
        const auto hi = std::stoul(text.substr(dots + 2));
        for (auto n = lo; n <= hi; ++n) out.push_back(n);
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
    return out;
}

int cmd_detect(const std::string& in, const std::string& out, const Timing& t, double rel_tol) {
    const auto nl = read_netlist_file(in);
    const auto cfg = reducer_config(t);
    const auto chains = detect_chains(build_graph(nl), rel_tol);
    const auto stats = chain_stats(nl, chains);
    with_output(out, [&](std::ostream& o) {
        o << "# nodes=" << stats.total_nodes_N << " chains=" << stats.chain_count << " max_len=" << stats.max_len
          << " N_tot=" << stats.N_tot << " split_ratio=" << fmt17(stats.split_ratio) << "\n"
          << "# node count covers R, C, V and M element nodes only\n"
          << "port,n,R,C,tau_c,regime\n";
        for (const auto& c : chains)
            o << c.port << ',' << c.n << ',' << fmt17(c.R) << ',' << fmt17(c.C) << ',' << fmt17(time_constant(c))
              << ',' << to_string(classify(c, cfg).kind) << '\n';
    });
    return 0;
}

int cmd_reduce(const std::string& in, const std::string& out, const std::string& report, const Timing& t,
               bool enable_recurrence, std::size_t min_len) {
    const auto nl = read_netlist_file(in);
    ReduceOptions opt;
    opt.enable_recurrence = enable_recurrence;
    opt.min_chain_len = min_len;
    const auto plan = reduce_netlist(nl, reducer_config(t), opt);
    write_netlist_file(plan.result.netlist, out);
    with_output(report, [&](std::ostream& o) { o << format_reduction_report(plan.rows); });
    return 0;
}

struct SimulateArgs {
    std::size_t n = 10;
    std::string R = "1", C = "1f", source = "SIN(0 1 1G 0 0 90)", model = "full", out;
    std::size_t order = 8;
};

int cmd_simulate(const SimulateArgs& a, const Timing& t) {
    const auto cfg = reducer_config(t);
    const SimConfig sim{cfg.step_s, cfg.sim_duration_T, 0.0};
    const double R = require_spice_value(a.R, "--R");
    const double C = require_spice_value(a.C, "--C");
    const auto src = wave_arg(a.source, cfg.step_s);
    const auto chain = make_uniform_chain(a.n, R, C);
    TransientTrace tr;
    bool diverged = false;
    const auto m = to_lower(a.model);
    if (m == "full") {
        tr = simulate_full(chain, src, sim);
    } else if (m == "small") {
        tr = simulate_small_tau(a.n, R, C, src, sim);
    } else if (m == "auto") {
        tr = simulate_reduced(choose_model(chain, classify(chain, cfg), cfg), src, sim, &diverged);
    } else if (m == "lumped") {
        tr = simulate_reduced(Lumped{(a.n + 1.0) * C}, src, sim);
    } else if (m == "halved") {
        const std::size_t half = std::max<std::size_t>(1, a.n / 2);
        tr = simulate_reduced(HalvedChain{half, halved_resistance(a.n, half, R), (a.n + 1.0) * C / (half + 1.0)},
                              src, sim);
    } else if (m == "large") {
        tr = simulate_reduced(PortCurrent{R, C}, src, sim);
    } else if (m == "recurrence") {
        const auto model = fit_recurrence(chain, src, sim, std::min(a.order, a.n));
        std::cerr << "recurrence (experimental) m=" << model.m << " rms residual " << model.rms_residual << " A\n";
        tr = simulate_reduced(model, src, sim, &diverged);
    } else {
        throw PreconditionError("unknown --model '" + a.model + "'");
    }
    if (diverged) std::cerr << "warning: recurrence rollout diverged; currents clamped at 1e6 A\n";
    with_output(a.out, [&](std::ostream& o) { write_trace_csv(tr, o); });
    return 0;
}

struct SweepArgs {
    std::string wave = "sin", R = "1", C = "1f", n_list = "pow2:128", plot_dir, out;
    bool assert_thresholds = false;
    double max_erel = 1e-2;
};

int cmd_sweep(const SweepArgs& a, const Timing& t, unsigned jobs) {
    const auto cfg = reducer_config(t);
    ExperimentConfig ex;
    ex.step_s = cfg.step_s;
    ex.duration_T = cfg.sim_duration_T;
    ex.alpha = cfg.alpha;
    ex.R = require_spice_value(a.R, "--R");
    ex.C = require_spice_value(a.C, "--C");
    ex.waveform = wave_arg(a.wave, ex.step_s);
    ex.n_sweep = parse_n_list(a.n_list);
    const auto rows = run_sweep(ex, jobs);
    with_output(a.out, [&](std::ostream& o) {
        o << "n,regime,model,E_abs,E_rel\n";
        for (const auto& r : rows)
            o << r.n << ',' << to_string(r.regime) << ',' << r.model << (r.diverged ? "(diverged)" : "") << ','
              << fmt17(r.E_abs) << ',' << fmt17(r.E_rel) << '\n';
    });
    if (!a.plot_dir.empty()) {
        const auto path = emit_plot_data(rows, {waveform_family(ex.waveform), ex.C, step_label(ex.step_s, ex.duration_T)},
                                         a.plot_dir);
        std::cerr << "wrote " << path << '\n';
    }
    if (a.assert_thresholds) {
        int bad = 0;
        for (const auto& r : rows)
            if (!(r.E_rel <= a.max_erel)) {
                std::cerr << "n=" << r.n << ": E_rel " << r.E_rel << " exceeds " << a.max_erel << '\n';
                ++bad;
            }
        if (bad) return kExitAssert;
    }
    return 0;
}

int cmd_compare(const std::string& ann, const std::string& simp, const std::string& ann_trace,
                const std::string& simp_trace) {
    CompareOptions opt;
    if (!ann_trace.empty() || !simp_trace.empty()) {
        if (ann_trace.empty() || simp_trace.empty())
            throw PreconditionError("--ann-trace and --simp-trace must be given together");
        opt.external_traces = std::make_pair(ann_trace, simp_trace);
    }
    const auto r = compare_netlists(ann, simp, opt);
    std::cout << "mode,pairs,points,E_abs,E_rel\n"
              << r.mode << ',' << r.node_pairs.size() << ',' << r.report.point_count << ',' << fmt17(r.report.E_abs)
              << ',' << fmt17(r.report.E_rel) << '\n';
    return 0;
}

struct FgArgs {
    std::string R = "1", C = "1", s = "1ps", M;
    std::size_t n_max = 10;
    std::string out;
};

int cmd_tabulate_fg(const FgArgs& a) {
    SpectralParams p;
    p.R = require_spice_value(a.R, "--R");
    p.C = require_spice_value(a.C, "--C");
    p.s = require_spice_value(a.s, "--s");
    p.M = a.M.empty() ? default_damping(p.s) : require_spice_value(a.M, "--M");
    int failures = 0;
    with_output(a.out, [&](std::ostream& o) {
        o << "n,F,F_err_abs,G,G_err_abs\n";
        for (std::size_t n = 1; n <= a.n_max; ++n) {
            p.n = n;
            FGCoefficients fg;
            try {
                fg = fn_gn(p);
            } catch (const QuadratureError& e) {
                std::cerr << e.what() << '\n';
                fg = e.partial();
                ++failures;
            }
            o << n << ',' << fmt17(fg.F) << ',' << fmt17(fg.F_err_abs) << ',' << fmt17(fg.G) << ','
              << fmt17(fg.G_err_abs) << '\n';
        }
    });
    return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RC long-chain detection, reduction and simulation"};
    app.require_subcommand(1);
    app.fallthrough();
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--jobs", jobs, "parallel sweep workers")->check(CLI::PositiveNumber);

    Timing timing;
    std::string in, in2, out, report, ann_trace, simp_trace;
    double rel_tol = kDefaultChainRelTol;

    auto* detect = app.add_subcommand("detect", "list RC chains as CSV");
    detect->add_option("netlist", in, "input netlist")->required();
    detect->add_option("-o,--output", out, "CSV path (default stdout)");
    detect->add_option("--rel-tol", rel_tol, "uniformity tolerance for R and C")->capture_default_str();
    add_timing(detect, timing);

    bool enable_recurrence = false;
    std::size_t min_len = 3;
    auto* reduce = app.add_subcommand("reduce", "rewrite chains with reduced models");
    reduce->add_option("netlist", in, "input netlist")->required();
    reduce->add_option("-o,--output", out, "reduced netlist")->required();
    reduce->add_option("--report", report, "reduction report CSV (default stdout)");
    reduce->add_flag("--enable-recurrence", enable_recurrence, "also rewrite same-order chains (experimental)");
    reduce->add_option("--min-chain-len", min_len, "skip chains with fewer resistors")->capture_default_str();
    add_timing(reduce, timing);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "port current of a uniform chain");
    simulate->add_option("--n", sim.n, "chain length")->capture_default_str();
    simulate->add_option("--R", sim.R)->capture_default_str();
    simulate->add_option("--C", sim.C)->capture_default_str();
    simulate->add_option("--source", sim.source, "SIN(...)/PULSE(...)/EXP(...) or sin/pulse/exp")
        ->capture_default_str();
    simulate->add_option("--model", sim.model, "full|auto|small|lumped|halved|large|recurrence")
        ->capture_default_str();
    simulate->add_option("--order", sim.order, "recurrence order m")->capture_default_str();
    simulate->add_option("-o,--output", sim.out, "trace CSV (default stdout)");
    add_timing(simulate, timing);

    SweepArgs sw;
    auto* sweep = app.add_subcommand("sweep", "reduced vs. full error over chain lengths");
    sweep->add_option("--wave", sw.wave, "sin|pulse|exp or an explicit source")->capture_default_str();
    sweep->add_option("--R", sw.R)->capture_default_str();
    sweep->add_option("--C", sw.C)->capture_default_str();
    sweep->add_option("--n", sw.n_list, "1,2,4 | 1..128 | pow2:128")->capture_default_str();
    sweep->add_option("--plot-dir", sw.plot_dir, "also write err_<wave>_<C>_<sT>.csv here");
    sweep->add_option("-o,--output", sw.out, "table CSV (default stdout)");
    sweep->add_flag("--assert", sw.assert_thresholds, "exit 2 when some E_rel exceeds --max-erel");
    sweep->add_option("--max-erel", sw.max_erel)->capture_default_str();
    add_timing(sweep, timing);

    auto* compare = app.add_subcommand("compare", "error between original and reduced netlist outputs");
    compare->add_option("ann", in, "original netlist")->required();
    compare->add_option("simp", in2, "reduced netlist")->required();
    compare->add_option("--ann-trace", ann_trace, "external trace of the original");
    compare->add_option("--simp-trace", simp_trace, "external trace of the reduced netlist");

    FgArgs fg;
    auto* tabulate = app.add_subcommand("tabulate-fg", "F_n and G_n for n = 1..n-max");
    tabulate->add_option("--R", fg.R)->capture_default_str();
    tabulate->add_option("--C", fg.C)->capture_default_str();
    tabulate->add_option("--s", fg.s, "time step")->capture_default_str();
    tabulate->add_option("--M", fg.M, "Gaussian damping (default 1e-8/s clamped to [1, 1e-6/s])");
    tabulate->add_option("--n-max", fg.n_max)->capture_default_str();
    tabulate->add_option("-o,--output", fg.out, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*detect) return cmd_detect(in, out, timing, rel_tol);
        if (*reduce) return cmd_reduce(in, out, report, timing, enable_recurrence, min_len);
        if (*simulate) return cmd_simulate(sim, timing);
        if (*sweep) return cmd_sweep(sw, timing, jobs);
        if (*compare) return cmd_compare(in, in2, ann_trace, simp_trace);
        if (*tabulate) return cmd_tabulate_fg(fg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
