#include "rcchain/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "rcchain/error.hpp"
#include "rcchain/netlist.hpp"

namespace rcchain {

ErrorReport weighted_errors(const std::vector<double>& ref, const std::vector<double>& our, bool keep_points) {
    if (ref.size() != our.size())
        throw PreconditionError("weighted_errors: traces have " + std::to_string(ref.size()) + " and " +
                                std::to_string(our.size()) + " points");
    if (ref.empty()) throw PreconditionError("weighted_errors: empty traces");
    ErrorReport r;
    r.point_count = ref.size();
    double sum_delta = 0.0, sum_weight = 0.0;
    if (keep_points) {
        r.deltas.reserve(ref.size());
        r.weights.reserve(ref.size());
    }
    for (std::size_t k = 0; k < ref.size(); ++k) {
        const double d = std::abs(ref[k] - our[k]);
        const double w = std::abs(ref[k]) + std::abs(our[k]);
        sum_delta += d;
        sum_weight += w;
        if (keep_points) {
            r.deltas.push_back(d);
            r.weights.push_back(w);
        }
    }
    r.E_abs = ref.empty() ? 0.0 : sum_delta / static_cast<double>(ref.size());
    r.E_rel = sum_weight == 0.0 ? 0.0 : std::min(1.0, sum_delta / sum_weight);
    return r;
}

ErrorReport weighted_errors(const TransientTrace& ref, const TransientTrace& our, bool keep_points) {
    if (ref.times.size() != our.times.size() || ref.current.size() != our.current.size())
        throw PreconditionError("weighted_errors: traces differ in length");
    for (std::size_t k = 0; k < ref.times.size(); ++k) {
        const double tol = 1e-9 * std::max(std::abs(ref.times[k]), std::abs(ref.times.back()));
        if (std::abs(ref.times[k] - our.times[k]) > tol)
            throw PreconditionError("weighted_errors: time grids differ at sample " + std::to_string(k));
    }
    return weighted_errors(ref.current, our.current, keep_points);
}

void ExperimentConfig::validate() const {
    SimConfig{step_s, duration_T, 0.0}.validate();
    if (!(R > 0.0) || !(C > 0.0)) throw PreconditionError("experiment needs R, C > 0");
    if (n_sweep.empty()) throw PreconditionError("n_sweep must not be empty");
    for (auto n : n_sweep)
        if (n < 1) throw PreconditionError("n_sweep values must be >= 1");
    validate_waveform(waveform);
}

WaveformSpec standard_sin() { return SinWave{0.0, 1.0, 1e9, 0.0, 0.0, 90.0}; }
WaveformSpec standard_pulse() { return PulseWave{-1.0, 1.0, 2e-12, 200e-12, 200e-12, 500e-12, 1e-9}; }
WaveformSpec standard_exp() { return ExpWave{-4.0, -1.0, 20e-12, 300e-12, 600e-12, 400e-12}; }

namespace {

SweepRow sweep_point(const ExperimentConfig& cfg, std::size_t n) {
    ReducerConfig rc;
    rc.alpha = cfg.alpha;
    rc.step_s = cfg.step_s;
    rc.sim_duration_T = cfg.duration_T;
    rc.halve_threshold = cfg.halve_threshold;
    rc.recurrence_order_m = cfg.recurrence_order_m;
    rc.calibration_source = cfg.waveform;

    const SimConfig sim{cfg.step_s, cfg.duration_T, 0.0};
    const Chain chain = make_uniform_chain(n, cfg.R, cfg.C);
    SweepRow row;
    row.n = n;
    row.regime = classify(chain, rc).kind;
    const auto model = choose_model(chain, classify(chain, rc), rc);
    const auto ref = simulate_full(chain, cfg.waveform, sim);
    TransientTrace ours;
    if (std::holds_alternative<Lumped>(model)) {
        // The derivative model is what the lumped capacitor approximates to
        // first order; the sweep evaluates the full two-term form.
        ours = simulate_small_tau(n, cfg.R, cfg.C, cfg.waveform, sim);
        row.model = "derivative";
    } else {
        ours = simulate_reduced(model, cfg.waveform, sim, &row.diverged);
        row.model = model_name(model);
    }
    const auto err = weighted_errors(ref, ours);
    row.E_abs = err.E_abs;
    row.E_rel = err.E_rel;
    return row;
}

}  // namespace

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, unsigned jobs) {
    config.validate();
    std::vector<SweepRow> rows(config.n_sweep.size());
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(rows.size())));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto work = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            try {
                rows[i] = sweep_point(config, config.n_sweep[i]);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return rows;
}

// ---------------------------------------------------------------------------
// compare_netlists

namespace {

std::vector<std::string> all_output_nodes(const Netlist& nl) {
    std::vector<std::string> out;
    for (const auto& d : nl.directives())
        for (auto& n : output_nodes(d)) out.push_back(std::move(n));
    return out;
}

struct Columns {
    std::vector<std::string> names;  // lowercase
    std::vector<std::vector<double>> data;
};

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',' || c == ' ' || c == '\t' || c == '\r') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

Columns read_columns(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read " + path);
    Columns cols;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        auto fields = split_fields(line);
        if (fields.empty() || fields[0][0] == '#') continue;
        std::vector<double> nums;
        bool numeric = true;
        for (const auto& s : fields) {
            char* end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (end != s.c_str() + s.size()) {
                numeric = false;
                break;
            }
            nums.push_back(v);
        }
        if (!numeric) {
            if (!cols.data.empty() || !cols.names.empty())
                throw ParseError(lineno, path + ": unexpected non-numeric row");
            for (auto& s : fields) cols.names.push_back(to_lower(s));
            cols.data.resize(cols.names.size());
            continue;
        }
        if (cols.data.empty()) cols.data.resize(nums.size());
        if (nums.size() != cols.data.size()) throw ParseError(lineno, path + ": ragged row");
        for (std::size_t i = 0; i < nums.size(); ++i) cols.data[i].push_back(nums[i]);
    }
    if (cols.data.empty() || cols.data[0].empty()) throw Error(path + ": no data rows");
    return cols;
}

// Time column and one voltage column per requested node. Named columns are
// matched as "v(node)" or "node"; a headerless file is read in the wrdata
// layout "t v1 t v2 ..." in output-node order.
std::pair<std::vector<double>, std::vector<std::vector<double>>> node_columns(const Columns& cols,
                                                                              const std::vector<std::string>& nodes,
                                                                              const std::string& path) {
    std::vector<std::vector<double>> out;
    if (cols.names.empty()) {
        if (cols.data.size() < 2 * nodes.size())
            throw Error(path + ": headerless trace has too few columns for the output nodes");
        for (std::size_t k = 0; k < nodes.size(); ++k) out.push_back(cols.data[2 * k + 1]);
        return {cols.data[0], out};
    }
    std::size_t tcol = 0;
    for (std::size_t i = 0; i < cols.names.size(); ++i)
        if (cols.names[i] == "t" || cols.names[i] == "time") tcol = i;
    for (const auto& n : nodes) {
        std::optional<std::size_t> hit;
        for (std::size_t i = 0; i < cols.names.size(); ++i)
            if (cols.names[i] == "v(" + n + ")" || cols.names[i] == n) hit = i;
        if (!hit) throw Error(path + ": no column for output node " + n);
        out.push_back(cols.data[*hit]);
    }
    return {cols.data[tcol], out};
}

double typical_step(const std::vector<double>& t) {
    std::vector<double> d;
    for (std::size_t i = 1; i < t.size(); ++i) d.push_back(t[i] - t[i - 1]);
    if (d.empty()) return 0.0;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
    return d[d.size() / 2];
}

struct TranSettings {
    double step = 1e-12;
    double stop = 1e-9;
};

TranSettings tran_settings(const Netlist& nl) {
    TranSettings ts;
    for (const auto& d : nl.directives()) {
        std::istringstream in(d.raw);
        std::string head, a, b;
        in >> head;
        if (to_lower(head) != ".tran" && to_lower(head) != "tran") continue;
        if (in >> a >> b) {
            const auto s = parse_spice_value(a);
            const auto t = parse_spice_value(b);
            if (s && t && *s > 0 && *t >= *s) {
                ts.step = *s;
                ts.stop = *t;
            }
        }
    }
    return ts;
}

WaveformSpec first_source(const Netlist& nl) {
    for (const auto& e : nl.elements())
        if (e.kind == ElementKind::VoltageSource && e.source_spec &&
            !std::holds_alternative<DcWave>(*e.source_spec))
            return *e.source_spec;
    return standard_sin();
}

CompareResult compare_external(const std::vector<std::pair<std::string, std::string>>& pairs,
                               const std::string& ann_csv, const std::string& simp_csv) {
    std::vector<std::string> ann_nodes, simp_nodes;
    for (const auto& [a, s] : pairs) {
        ann_nodes.push_back(a);
        simp_nodes.push_back(s);
    }
    const auto [ta, va] = node_columns(read_columns(ann_csv), ann_nodes, ann_csv);
    const auto [ts, vs] = node_columns(read_columns(simp_csv), simp_nodes, simp_csv);
    const double step = typical_step(ta);
    std::vector<double> ref, our;
    std::size_t j = 0;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        while (j + 1 < ts.size() && std::abs(ts[j + 1] - ta[i]) <= std::abs(ts[j] - ta[i])) ++j;
        if (std::abs(ts[j] - ta[i]) > 0.1 * step)
            throw Error("external traces do not share a time grid near t = " + format_value(ta[i]));
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            ref.push_back(va[k][i]);
            our.push_back(vs[k][j]);
        }
    }
    CompareResult r;
    r.report = weighted_errors(ref, our);
    r.node_pairs = pairs;
    r.mode = "external";
    return r;
}

}  // namespace

CompareResult compare_netlists(const std::string& ann_path, const std::string& simp_path,
                               const CompareOptions& options) {
    const Netlist ann = read_netlist_file(ann_path);
    const Netlist simp = read_netlist_file(simp_path);
    const auto ann_nodes = all_output_nodes(ann);
    const auto simp_nodes = all_output_nodes(simp);
    const std::size_t count = std::min(ann_nodes.size(), simp_nodes.size());
    if (count == 0) throw Error("no common output nodes between " + ann_path + " and " + simp_path);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t k = 0; k < count; ++k) pairs.emplace_back(ann_nodes[k], simp_nodes[k]);

    if (options.external_traces)
        return compare_external(pairs, options.external_traces->first, options.external_traces->second);

    // Chain-only comparison: an output node inside a chain of the original is
    // simulated there; in the reduced netlist it has been folded into the
    // port, whose voltage is the driving source itself.
    CompareResult r;
    r.node_pairs = pairs;
    r.mode = "chain";
    const auto chains = detect_chains(build_graph(ann));
    const auto ts = tran_settings(ann);
    const SimConfig sim{ts.step, ts.stop, 0.0};
    const auto source = first_source(ann);
    std::vector<double> ref, our;
    for (const auto& [a, s] : pairs) {
        for (const auto& chain : chains) {
            const auto nodes = chain.all_nodes();
            const auto it = std::find(nodes.begin(), nodes.end(), a);
            if (it == nodes.end() || it == nodes.begin()) continue;
            if (s != chain.port && s != a) continue;
            const auto trace = simulate_full(chain, source, sim, true);
            const auto& va = trace.node_voltages[static_cast<std::size_t>(it - nodes.begin())];
            // s == a means the node survived in the reduced netlist, so the
            // chain was left alone there.
            const auto& vs = s == a ? va : trace.v0;
            ref.insert(ref.end(), va.begin(), va.end());
            our.insert(our.end(), vs.begin(), vs.end());
            break;
        }
    }
    r.report = weighted_errors(ref, our);
    return r;
}

// ---------------------------------------------------------------------------
// plot data

namespace {

std::string si_label(double v) {
    static const std::pair<double, const char*> units[] = {
        {1e-15, "fs"}, {1e-12, "ps"}, {1e-9, "ns"}, {1e-6, "us"}, {1e-3, "ms"}, {1.0, "s"}};
    const char* unit = "s";
    double scale = 1.0;
    for (const auto& [f, u] : units)
        if (std::abs(v) >= f * (1.0 - 1e-12)) {
            scale = f;
            unit = u;
        }
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g%s", v / scale, unit);
    return buf;
}

}  // namespace

std::string step_label(double step_s, double duration_T) { return si_label(step_s) + "-" + si_label(duration_T); }

std::string emit_plot_data(const std::vector<SweepRow>& table, const PlotKey& key, const std::string& dir) {
    if (table.empty()) throw PreconditionError("emit_plot_data: empty table");
    char cbuf[32];
    std::snprintf(cbuf, sizeof cbuf, "%g", key.C);
    const auto path = (std::filesystem::path(dir) / ("err_" + key.wave + "_" + cbuf + "_" + key.sT + ".csv")).string();
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    f << "n,E_abs,E_rel\n";
    char buf[96];
    for (const auto& r : table) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r.n, r.E_abs, r.E_rel);
        f << buf;
    }
    if (!f) throw Error("write failed: " + path);
    return path;
}

std::vector<SweepRow> read_plot_data(const std::string& path) {
    const auto cols = read_columns(path);
    if (cols.data.size() < 3) throw Error(path + ": expected columns n,E_abs,E_rel");
    std::vector<SweepRow> rows(cols.data[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].n = static_cast<std::size_t>(cols.data[0][i]);
        rows[i].E_abs = cols.data[1][i];
        rows[i].E_rel = cols.data[2][i];
    }
    return rows;
}

}  // namespace rcchain
