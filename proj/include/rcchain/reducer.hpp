#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rcchain/chain_detect.hpp"
#include "rcchain/models.hpp"
#include "rcchain/netlist.hpp"
#include "rcchain/waveform.hpp"

namespace rcchain {

struct ReducerConfig {
    double alpha = 10.0;
    double step_s = 1e-12;
    double sim_duration_T = 1e-9;
    std::size_t halve_threshold = 64;
    /// Upper bound on the recurrence order; the order used is min(n, this).
    std::size_t recurrence_order_m = 8;
    /// Waveform class the recurrence coefficients are fitted against.
    WaveformSpec calibration_source = SinWave{0.0, 1.0, 1e9, 0.0, 0.0, 90.0};

    /// Throws PreconditionError unless alpha > 1, step > 0, T >= step, m >= 1.
    void validate() const;
};

enum class RegimeKind { SmallTau, SameOrder, LargeTau };

std::string to_string(RegimeKind kind);

struct Regime {
    RegimeKind kind = RegimeKind::SameOrder;
    double tau_c = 0.0;
    double d = 0.0;
};

/// SmallTau for tau_c < s/alpha, LargeTau for tau_c > alpha*d, SameOrder
/// otherwise (both boundaries included). Precondition: tau_c > 0, d > 0.
Regime classify(double tau_c, const ReducerConfig& config, double d);

/// Regime of a chain with d = T, the whole run.
Regime classify(const Chain& chain, const ReducerConfig& config);

/// Resistor value of the m-node replacement of an n-resistor chain. Keeps the
/// second-order term of the port admittance; with R unchanged the halved
/// chain has half of it.
double halved_resistance(std::size_t n, std::size_t m, double R);

/// SmallTau: Lumped((n+1)C) up to halve_threshold, else HalvedChain with
/// m = n/2, C_each = (n+1)C/(m+1) and R from halved_resistance.
/// SameOrder fits the recurrence against config.calibration_source on a
/// simulate_full run of the chain, which may throw RankDeficientError.
ReducedModel choose_model(const Chain& chain, const Regime& regime, const ReducerConfig& config);

struct RewriteResult {
    Netlist netlist;
    /// Every deleted node -> the port of its chain.
    std::map<std::string, std::string> mapping;
};

/// Replaces each chain by its model. Lumped and HalvedChain become passive
/// elements; PortCurrent and Recurrence delete the interior and leave a
/// "*RCRED MODEL=..." comment after the port capacitor. The port capacitor
/// is always kept. Throws Error for overlapping chains or chains whose
/// elements are not in the netlist.
RewriteResult rewrite(const Netlist& netlist, const std::vector<std::pair<Chain, ReducedModel>>& chains);

struct ReductionRow {
    std::string port;
    std::size_t n = 0;
    Regime regime;
    /// Empty when the chain was left alone.
    std::optional<ReducedModel> model;
    std::size_t nodes_removed = 0;
    /// Why a chain was skipped, or notes such as "experimental".
    std::string note;
};

struct ReductionPlan {
    RewriteResult result;
    std::vector<ReductionRow> rows;
};

struct ReduceOptions {
    bool enable_recurrence = false;
    /// Chains with fewer than this many resistors are left alone.
    std::size_t min_chain_len = 1;
    double rel_tol = kDefaultChainRelTol;
};

/// detect -> classify -> choose -> rewrite for a whole netlist. Chains cut by
/// a non-uniform element (no closed terminal) and SameOrder chains without
/// enable_recurrence are reported and left in place.
ReductionPlan reduce_netlist(const Netlist& netlist, const ReducerConfig& config, const ReduceOptions& options);

/// CSV: port,n,tau_c,regime,model,nodes_removed,note
std::string format_reduction_report(const std::vector<ReductionRow>& rows);

/// Parameters recovered from an "*RCRED ..." comment.
struct ModelMarker {
    std::string port;
    std::size_t n = 0;
    ReducedModel model;
};

/// nullopt when `raw` is not a marker; throws ParseError(0, ..) on a
/// malformed one.
std::optional<ModelMarker> parse_model_marker(std::string_view raw);

}  // namespace rcchain
