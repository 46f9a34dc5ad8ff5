#include "rcchain/reducer.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "rcchain/error.hpp"
#include "rcchain/transim.hpp"

namespace rcchain {

namespace {

constexpr std::string_view kMarkerPrefix = "*RCRED";

std::string join_values(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_value(v[i]);
    }
    return out;
}

std::string marker_text(const Chain& chain, const ReducedModel& model) {
    std::string out = std::string(kMarkerPrefix) + " MODEL=";
    if (const auto* p = std::get_if<PortCurrent>(&model)) {
        out += "PORTCURRENT PORT=" + chain.port + " N=" + std::to_string(chain.n) + " R=" + format_value(p->R) +
               " C=" + format_value(p->C);
    } else {
        const auto& r = std::get<RecurrenceModel>(model);
        out += "RECURRENCE PORT=" + chain.port + " N=" + std::to_string(chain.n) + " M=" + std::to_string(r.m) +
               " GAMMA=" + join_values(r.gamma) + " BETA=" + join_values(r.beta) +
               " RMS=" + format_value(r.rms_residual);
    }
    return out;
}

// What a chain turns into inside the rewritten netlist.
struct Replacement {
    std::set<std::string> drop_elements;     // lowercase names
    std::string port_cap;                    // lowercase name
    std::optional<double> port_cap_value;    // new value, if changed
    std::vector<Element> add_elements;       // inserted after the port capacitor
    std::optional<std::string> marker;
};

class NameAllocator {
public:
    explicit NameAllocator(const Netlist& nl) {
        for (const auto& e : nl.elements()) elements_.insert(to_lower(e.name));
        nodes_ = nl.nodes();
    }
    std::string element(const std::string& want) { return unique(want, elements_); }
    std::string node(const std::string& want) { return unique(want, nodes_); }

private:
    static std::string unique(const std::string& want, std::set<std::string>& used) {
        std::string name = want;
        for (int k = 1; used.count(to_lower(name)); ++k) name = want + "_" + std::to_string(k);
        used.insert(to_lower(name));
        return name;
    }
    std::set<std::string> elements_;
    std::set<std::string> nodes_;
};

void check_chain_in_netlist(const Netlist& nl, const Chain& chain) {
    const auto nodes = chain.all_nodes();
    if (chain.resistor_elements.size() != chain.n || chain.capacitor_elements.size() != chain.n + 1 ||
        nodes.size() != chain.n + 1)
        throw Error("chain at " + chain.port + " is inconsistent (n=" + std::to_string(chain.n) + ")");
    auto expect = [&](const std::string& name, ElementKind kind, const std::string& a, const std::string& b) {
        const auto idx = nl.find_element(name);
        if (!idx) throw Error("chain at " + chain.port + ": element " + name + " not found in netlist");
        const auto& e = nl.elements()[*idx];
        const bool match = e.kind == kind && e.nodes.size() == 2 &&
                           ((e.nodes[0] == a && e.nodes[1] == b) || (e.nodes[0] == b && e.nodes[1] == a));
        if (!match) throw Error("chain at " + chain.port + ": element " + name + " does not connect " + a + " and " + b);
    };
    for (std::size_t k = 0; k < chain.n; ++k)
        expect(chain.resistor_elements[k], ElementKind::Resistor, nodes[k], nodes[k + 1]);
    for (std::size_t k = 0; k <= chain.n; ++k)
        expect(chain.capacitor_elements[k], ElementKind::Capacitor, nodes[k], std::string(kGround));
}

Replacement plan_replacement(const Netlist& nl, const Chain& chain, const ReducedModel& model, NameAllocator& names) {
    Replacement rep;
    rep.port_cap = to_lower(chain.capacitor_elements.front());
    for (const auto& r : chain.resistor_elements) rep.drop_elements.insert(to_lower(r));
    for (std::size_t k = 1; k < chain.capacitor_elements.size(); ++k)
        rep.drop_elements.insert(to_lower(chain.capacitor_elements[k]));

    if (const auto* l = std::get_if<Lumped>(&model)) {
        rep.port_cap_value = l->C_total;
    } else if (const auto* h = std::get_if<HalvedChain>(&model)) {
        rep.port_cap_value = h->C_each;
        std::string prev = chain.port;
        const auto& port_cap = nl.elements()[*nl.find_element(chain.capacitor_elements.front())];
        for (std::size_t k = 1; k <= h->m; ++k) {
            const std::string node = names.node(chain.port + "_rch" + std::to_string(k));
            Element r;
            r.kind = ElementKind::Resistor;
            r.name = names.element("R" + chain.port + "_rch" + std::to_string(k));
            r.nodes = {prev, node};
            r.value = h->R;
            r.modified = true;
            Element c;
            c.kind = ElementKind::Capacitor;
            c.name = names.element("C" + chain.port + "_rch" + std::to_string(k));
            c.nodes = {node, std::string(kGround)};
            c.value = h->C_each;
            c.params = port_cap.params;
            c.modified = true;
            rep.add_elements.push_back(std::move(r));
            rep.add_elements.push_back(std::move(c));
            prev = node;
        }
    } else {
        rep.marker = marker_text(chain, model);
    }
    return rep;
}

std::size_t removed_nodes(const Chain& chain, const ReducedModel& model) {
    if (const auto* h = std::get_if<HalvedChain>(&model)) return chain.n - h->m;
    return chain.n;
}

}  // namespace

void ReducerConfig::validate() const {
    if (!(alpha > 1.0)) throw PreconditionError("alpha must be > 1");
    if (!(step_s > 0.0)) throw PreconditionError("step must be > 0");
    if (!(sim_duration_T >= step_s)) throw PreconditionError("duration must be >= step");
    if (recurrence_order_m < 1) throw PreconditionError("recurrence order must be >= 1");
    validate_waveform(calibration_source);
}

std::string to_string(RegimeKind kind) {
    switch (kind) {
        case RegimeKind::SmallTau: return "small";
        case RegimeKind::SameOrder: return "same";
        case RegimeKind::LargeTau: return "large";
    }
    return "?";
}

Regime classify(double tau_c, const ReducerConfig& config, double d) {
    if (!(tau_c > 0.0)) throw PreconditionError("classify: tau_c must be > 0");
    if (!(d > 0.0)) throw PreconditionError("classify: d must be > 0");
    Regime r{RegimeKind::SameOrder, tau_c, d};
    if (tau_c < config.step_s / config.alpha)
        r.kind = RegimeKind::SmallTau;
    else if (tau_c > config.alpha * d)
        r.kind = RegimeKind::LargeTau;
    return r;
}

Regime classify(const Chain& chain, const ReducerConfig& config) {
    return classify(time_constant(chain), config, config.sim_duration_T);
}

double halved_resistance(std::size_t n, std::size_t m, double R) {
    if (m < 1 || m > n) throw PreconditionError("halved_resistance: need 1 <= m <= n");
    // Y_n(w) = (n+1)Cjw + n(n+1)(2n+1)/6 R C^2 w^2 + O(w^3); with C' =
    // (n+1)C/(m+1) the m-chain reproduces both terms when R' is chosen so.
    const double nn = static_cast<double>(n), mm = static_cast<double>(m);
    return R * nn * (2.0 * nn + 1.0) * (mm + 1.0) / (mm * (2.0 * mm + 1.0) * (nn + 1.0));
}

ReducedModel choose_model(const Chain& chain, const Regime& regime, const ReducerConfig& config) {
    const double np1 = static_cast<double>(chain.n) + 1.0;
    switch (regime.kind) {
        case RegimeKind::SmallTau:
            if (chain.n <= config.halve_threshold) return Lumped{np1 * chain.C};
            {
                const std::size_t m = chain.n / 2;
                return HalvedChain{m, halved_resistance(chain.n, m, chain.R),
                                   np1 * chain.C / (static_cast<double>(m) + 1.0)};
            }
        case RegimeKind::LargeTau:
            return PortCurrent{chain.R, chain.C};
        case RegimeKind::SameOrder:
            break;
    }
    const std::size_t m = std::min(chain.n, config.recurrence_order_m);
    return fit_recurrence(chain, config.calibration_source, SimConfig{config.step_s, config.sim_duration_T, 0.0}, m);
}

RewriteResult rewrite(const Netlist& netlist, const std::vector<std::pair<Chain, ReducedModel>>& chains) {
    RewriteResult out;
    if (chains.empty()) {
        out.netlist = netlist;
        return out;
    }

    std::set<std::string> claimed;
    for (const auto& [chain, model] : chains) {
        for (const auto& node : chain.all_nodes())
            if (!claimed.insert(node).second) throw Error("overlapping chains at node " + node);
        check_chain_in_netlist(netlist, chain);
    }

    NameAllocator names(netlist);
    std::map<std::string, Replacement> by_port_cap;
    for (const auto& [chain, model] : chains) {
        auto rep = plan_replacement(netlist, chain, model, names);
        for (const auto& node : chain.interior) out.mapping[node] = chain.port;
        by_port_cap.emplace(rep.port_cap, std::move(rep));
    }
    std::set<std::string> dropped;
    for (const auto& [cap, rep] : by_port_cap) dropped.insert(rep.drop_elements.begin(), rep.drop_elements.end());

    Netlist next;
    next.title = netlist.title;
    next.trailing_newline = netlist.trailing_newline;
    netlist.for_each_in_order(
        [&](const Element& e) {
            const auto key = to_lower(e.name);
            if (dropped.count(key)) return;
            const auto it = by_port_cap.find(key);
            if (it == by_port_cap.end()) {
                next.add_element(e);
                return;
            }
            Element cap = e;
            if (it->second.port_cap_value) {
                cap.value = it->second.port_cap_value;
                cap.modified = true;
            }
            next.add_element(std::move(cap));
            for (const auto& extra : it->second.add_elements) next.add_element(extra);
            if (it->second.marker) next.add_directive({*it->second.marker, 0});
        },
        [&](const Directive& d) { next.add_directive(d); });

    out.netlist = remap_output_nodes(next, out.mapping);
    return out;
}

ReductionPlan reduce_netlist(const Netlist& netlist, const ReducerConfig& config, const ReduceOptions& options) {
    config.validate();
    ReductionPlan plan;
    const auto chains = detect_chains(build_graph(netlist), options.rel_tol);
    std::vector<std::pair<Chain, ReducedModel>> chosen;
    for (const auto& chain : chains) {
        ReductionRow row;
        row.port = chain.port;
        row.n = chain.n;
        row.regime = classify(chain, config);
        if (!chain.closed_terminal) {
            row.note = "no closed terminal; left in place";
        } else if (chain.n < options.min_chain_len) {
            row.note = "shorter than min chain length";
        } else if (row.regime.kind == RegimeKind::SameOrder && !options.enable_recurrence) {
            row.note = "same-order regime; recurrence disabled";
        } else {
            try {
                auto model = choose_model(chain, row.regime, config);
                if (const auto* r = std::get_if<RecurrenceModel>(&model)) {
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "experimental; rms residual %.6g A", r->rms_residual);
                    row.note = buf;
                }
                row.model = model;
                row.nodes_removed = removed_nodes(chain, model);
                chosen.emplace_back(chain, std::move(model));
            } catch (const RankDeficientError& e) {
                row.note = std::string("recurrence fit failed: ") + e.what();
            }
        }
        plan.rows.push_back(std::move(row));
    }
    plan.result = rewrite(netlist, chosen);
    return plan;
}

std::string format_reduction_report(const std::vector<ReductionRow>& rows) {
    std::ostringstream out;
    out << "port,n,tau_c,regime,model,nodes_removed,note\n";
    for (const auto& r : rows) {
        std::string note = r.note;
        std::replace(note.begin(), note.end(), ',', ';');
        out << r.port << ',' << r.n << ',' << format_value(r.regime.tau_c) << ',' << to_string(r.regime.kind) << ','
            << (r.model ? model_name(*r.model) : "none") << ',' << r.nodes_removed << ',' << note << '\n';
    }
    return out.str();
}

std::optional<ModelMarker> parse_model_marker(std::string_view raw) {
    std::istringstream in{std::string(raw)};
    std::string head;
    if (!(in >> head) || to_lower(head) != to_lower(kMarkerPrefix)) return std::nullopt;
    std::map<std::string, std::string> kv;
    std::string tok;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos || eq == 0) throw ParseError(0, "bad RCRED field '" + tok + "'");
        kv[to_lower(tok.substr(0, eq))] = tok.substr(eq + 1);
    }
    auto get = [&](const char* key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(0, std::string("RCRED marker lacks ") + key);
        return it->second;
    };
    auto number = [&](const std::string& s) {
        const auto v = parse_spice_value(s);
        if (!v) throw ParseError(0, "bad RCRED number '" + s + "'");
        return *v;
    };
    auto list = [&](const std::string& s) {
        std::vector<double> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(number(item));
        return out;
    };
    ModelMarker mk;
    mk.port = to_lower(get("port"));
    mk.n = static_cast<std::size_t>(number(get("n")));
    const auto kind = to_lower(get("model"));
    if (kind == "portcurrent") {
        mk.model = PortCurrent{number(get("r")), number(get("c"))};
    } else if (kind == "recurrence") {
        RecurrenceModel r;
        r.m = static_cast<std::size_t>(number(get("m")));
        r.gamma = list(get("gamma"));
        r.beta = list(get("beta"));
        if (kv.count("rms")) r.rms_residual = number(kv["rms"]);
        if (r.m == 0 || r.gamma.size() != r.m || r.beta.size() != r.m + 1)
            throw ParseError(0, "RCRED recurrence needs M gammas and M+1 betas");
        mk.model = std::move(r);
    } else {
        throw ParseError(0, "unknown RCRED model '" + kind + "'");
    }
    return mk;
}

}  // namespace rcchain
