#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rcchain/reducer.hpp"
#include "rcchain/transim.hpp"
#include "rcchain/waveform.hpp"

namespace rcchain {

struct ErrorReport {
    double E_abs = 0.0;
    double E_rel = 0.0;
    std::size_t point_count = 0;
    std::vector<double> deltas;   // |I_ref - I_our|
    std::vector<double> weights;  // |I_ref| + |I_our|
};

/// E_abs = mean |dI|, E_rel = sum |dI| / sum(|I_ref| + |I_our|), 0 when the
/// weights sum to zero. Throws PreconditionError on empty traces and on
/// length or grid mismatch.
ErrorReport weighted_errors(const TransientTrace& ref, const TransientTrace& our, bool keep_points = false);

/// Same on bare current vectors.
ErrorReport weighted_errors(const std::vector<double>& ref, const std::vector<double>& our,
                            bool keep_points = false);

struct ExperimentConfig {
    double step_s = 1e-12;
    double duration_T = 1e-9;
    double R = 1.0;
    double C = 1e-15;
    WaveformSpec waveform = SinWave{0.0, 1.0, 1e9, 0.0, 0.0, 90.0};
    std::vector<std::size_t> n_sweep;
    double alpha = 10.0;
    std::size_t halve_threshold = 64;
    std::size_t recurrence_order_m = 8;

    void validate() const;
};

struct SweepRow {
    std::size_t n = 0;
    RegimeKind regime = RegimeKind::SameOrder;
    std::string model;
    double E_abs = 0.0;
    double E_rel = 0.0;
    bool diverged = false;
};

/// One row per n, in n_sweep order whatever the thread count.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, unsigned jobs = 1);

/// Standard SIN, PULSE and EXP sources for 1ps/1ns runs.
WaveformSpec standard_sin();
WaveformSpec standard_pulse();
WaveformSpec standard_exp();

struct CompareOptions {
    /// Third-party traces for ann and simp: CSV with a time column and one
    /// column per output node, named "v(node)" or "node".
    std::optional<std::pair<std::string, std::string>> external_traces;
};

struct CompareResult {
    ErrorReport report;
    std::vector<std::pair<std::string, std::string>> node_pairs;  // ann node, simp node
    std::string mode;  // "external", "chain" or "empty"
};

/// Compares the output nodes of an annotated netlist and its reduced form.
/// Output nodes are paired by position in the output directives. Without
/// external traces each chain touched by an output node is simulated twice
/// here: the original chain's node voltage against the reduced netlist's
/// (the port, after remapping). Throws Error when neither file has output
/// nodes.
CompareResult compare_netlists(const std::string& ann_path, const std::string& simp_path,
                               const CompareOptions& options = {});

struct PlotKey {
    std::string wave;
    double C = 0.0;
    std::string sT;  // e.g. "1ps-1ns"
};

/// Writes `<dir>/err_<wave>_<C>_<sT>.csv` with columns n,E_abs,E_rel and
/// returns its path. Throws PreconditionError for an empty table.
std::string emit_plot_data(const std::vector<SweepRow>& table, const PlotKey& key, const std::string& dir);

/// Reads back a file written by emit_plot_data (n, E_abs, E_rel only).
std::vector<SweepRow> read_plot_data(const std::string& path);

/// "1ps-1ns" style label.
std::string step_label(double step_s, double duration_T);

}  // namespace rcchain
