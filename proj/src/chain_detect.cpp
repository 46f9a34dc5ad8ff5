#include "rcchain/chain_detect.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "rcchain/error.hpp"

namespace rcchain {

namespace {

bool close_rel(double a, double b, double rel_tol) {
    return std::abs(a - b) <= rel_tol * std::max(std::abs(a), std::abs(b));
}

struct Hop {
    std::string to;
    std::size_t edge;
};

class ChainFinder {
public:
    ChainFinder(const CircuitGraph& g, double rel_tol) : g_(g), tol_(rel_tol) {}

    std::vector<Chain> run() {
        for (const auto& v : g_.nodes)
            if (interior_ok(v)) eligible_.insert(v);

        std::vector<std::vector<std::string>> paths;
        std::set<std::string> visited;
        for (const auto& v : eligible_) {
            if (visited.count(v)) continue;
            auto comp = component(v, visited);
            if (comp) paths.push_back(std::move(*comp));
        }

        // A core node adjacent to more than one path cannot be the port of
        // all of them; it is then the port of none.
        std::map<std::string, int> port_claims;
        for (const auto& p : paths)
            if (auto x = external_neighbour(p.front())) ++port_claims[x->to];

        std::vector<Chain> chains;
        for (const auto& p : paths) split_into_chains(p, port_claims, chains);
        std::sort(chains.begin(), chains.end(),
                  [](const Chain& a, const Chain& b) { return a.port < b.port; });
        return chains;
    }

private:
    std::vector<Hop> resistor_hops(const std::string& v) const {
        std::vector<Hop> hops;
        const auto it = g_.adjacency.find(v);
        if (it == g_.adjacency.end()) return hops;
        for (std::size_t ei : it->second) {
            const auto& e = g_.edges[ei];
            if (e.kind != ElementKind::Resistor) continue;
            hops.push_back({e.a == v ? e.b : e.a, ei});
        }
        return hops;
    }

    const GroundedCap* single_cap(const std::string& v) const {
        const auto it = g_.grounded_caps.find(v);
        if (it == g_.grounded_caps.end() || it->second.size() != 1) return nullptr;
        if (!(it->second.front().value > 0.0)) return nullptr;
        return &it->second.front();
    }

    // Node may sit inside a chain: one grounded capacitor, one or two
    // resistors to distinct non-ground neighbours, nothing else.
    bool interior_ok(const std::string& v) const {
        if (g_.core.count(v) || !single_cap(v)) return false;
        const auto it = g_.adjacency.find(v);
        if (it == g_.adjacency.end()) return false;
        std::set<std::string> neighbours;
        for (std::size_t ei : it->second) {
            const auto& e = g_.edges[ei];
            if (e.kind != ElementKind::Resistor) return false;
            const auto& other = e.a == v ? e.b : e.a;
            if (other == kGround || other == v) return false;
            if (!neighbours.insert(other).second) return false;
        }
        return !neighbours.empty() && neighbours.size() <= 2;
    }

    // The resistor hop from a path end to a node outside the eligible set.
    std::optional<Hop> external_neighbour(const std::string& end) const {
        for (const auto& h : resistor_hops(end))
            if (!eligible_.count(h.to)) return h;
        return std::nullopt;
    }

    bool is_closed_end(const std::string& v) const { return !external_neighbour(v).has_value(); }

    // Ordered eligible path containing `start`, oriented port side first.
    // Returns nullopt for cycles and for paths without a closed end.
    std::optional<std::vector<std::string>> component(const std::string& start,
                                                      std::set<std::string>& visited) const {
        std::vector<std::string> members;
        std::vector<std::string> stack{start};
        visited.insert(start);
        while (!stack.empty()) {
            auto v = stack.back();
            stack.pop_back();
            members.push_back(v);
            for (const auto& h : resistor_hops(v))
                if (eligible_.count(h.to) && visited.insert(h.to).second) stack.push_back(h.to);
        }

        std::vector<std::string> ends;
        for (const auto& v : members) {
            int inside = 0;
            for (const auto& h : resistor_hops(v)) inside += eligible_.count(h.to) ? 1 : 0;
            if (inside <= 1) ends.push_back(v);
        }
        if (ends.empty()) return std::nullopt;  // cycle
        if (members.size() == 1) {
            // Lone node: a terminal hanging off one external neighbour.
            if (resistor_hops(start).size() != 1) return std::nullopt;
            return members;
        }

        const bool closed0 = is_closed_end(ends[0]);
        const bool closed1 = is_closed_end(ends[1]);
        std::string head;
        if (closed0 && closed1)
            head = std::min(ends[0], ends[1]);
        else if (closed0)
            head = ends[1];
        else if (closed1)
            head = ends[0];
        else
            return std::nullopt;

        std::vector<std::string> path{head};
        std::string prev;
        while (true) {
            const auto& cur = path.back();
            std::optional<std::string> next;
            for (const auto& h : resistor_hops(cur))
                if (eligible_.count(h.to) && h.to != prev) next = h.to;
            if (!next) break;
            prev = cur;
            path.push_back(*next);
        }
        return path;
    }

    void split_into_chains(const std::vector<std::string>& path, const std::map<std::string, int>& claims,
                           std::vector<Chain>& out) const {
        // Sequence of candidate chain nodes with their capacitors and the
        // resistors between consecutive entries.
        std::vector<std::string> seq;
        std::vector<const GroundedCap*> caps;
        std::vector<const GraphEdge*> res;  // res[i] joins seq[i] and seq[i+1]

        if (auto x = external_neighbour(path.front())) {
            const auto* cap = x->to == kGround ? nullptr : single_cap(x->to);
            if (cap && claims.at(x->to) == 1 && single_resistor_between(x->to, path.front())) {
                seq.push_back(x->to);
                caps.push_back(cap);
                res.push_back(&g_.edges[x->edge]);
            }
        }
        for (std::size_t i = 0; i < path.size(); ++i) {
            seq.push_back(path[i]);
            caps.push_back(single_cap(path[i]));
            if (i + 1 < path.size()) res.push_back(&g_.edges[hop_between(path[i], path[i + 1])]);
        }

        // Walk back from the closed end, cutting wherever R or C changes.
        std::size_t hi = seq.size() - 1;
        bool closed = true;
        while (true) {
            std::size_t lo = hi;
            const double c_ref = caps[hi]->value;
            std::optional<double> r_ref;
            while (lo > 0) {
                const double r = res[lo - 1]->value;
                if (r_ref && !close_rel(r, *r_ref, tol_)) break;
                if (!close_rel(caps[lo - 1]->value, c_ref, tol_)) break;
                r_ref = r;
                --lo;
            }
            if (hi > lo) out.push_back(make_chain(seq, caps, res, lo, hi, closed));
            if (lo == 0) break;
            hi = lo - 1;
            closed = false;
        }
    }

    bool single_resistor_between(const std::string& a, const std::string& b) const {
        int count = 0;
        for (const auto& h : resistor_hops(a)) count += h.to == b ? 1 : 0;
        return count == 1;
    }

    std::size_t hop_between(const std::string& a, const std::string& b) const {
        for (const auto& h : resistor_hops(a))
            if (h.to == b) return h.edge;
        throw Error("internal: no resistor between " + a + " and " + b);
    }

    static Chain make_chain(const std::vector<std::string>& seq, const std::vector<const GroundedCap*>& caps,
                            const std::vector<const GraphEdge*>& res, std::size_t lo, std::size_t hi,
                            bool closed) {
        Chain c;
        c.port = seq[lo];
        c.n = hi - lo;
        c.R = res[lo]->value;
        c.C = caps[lo]->value;
        c.closed_terminal = closed;
        c.capacitor_elements.push_back(caps[lo]->element);
        for (std::size_t i = lo + 1; i <= hi; ++i) {
            c.interior.push_back(seq[i]);
            c.capacitor_elements.push_back(caps[i]->element);
            c.resistor_elements.push_back(res[i - 1]->element);
        }
        return c;
    }

    const CircuitGraph& g_;
    double tol_;
    std::set<std::string> eligible_;
};

}  // namespace

std::vector<std::string> Chain::all_nodes() const {
    std::vector<std::string> out;
    out.reserve(interior.size() + 1);
    out.push_back(port);
    out.insert(out.end(), interior.begin(), interior.end());
    return out;
}

std::size_t CircuitGraph::chain_eligible_edge_count() const {
    return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [](const GraphEdge& e) {
        return e.kind == ElementKind::Resistor && e.a != kGround && e.b != kGround;
    }));
}

CircuitGraph build_graph(const Netlist& netlist) {
    CircuitGraph g;
    for (const auto& e : netlist.elements()) {
        for (const auto& n : e.nodes)
            if (n != kGround) g.nodes.insert(n);

        const bool two_terminal = e.nodes.size() == 2 && (e.kind == ElementKind::Resistor ||
                                                          e.kind == ElementKind::Capacitor ||
                                                          e.kind == ElementKind::VoltageSource);
        if (!two_terminal) {
            for (const auto& n : e.nodes)
                if (n != kGround) g.core.insert(n);
            continue;
        }
        const auto& a = e.nodes[0];
        const auto& b = e.nodes[1];
        if (e.kind == ElementKind::Capacitor && (a == kGround) != (b == kGround)) {
            g.grounded_caps[a == kGround ? b : a].push_back({e.name, e.value.value_or(0.0)});
            continue;
        }
        if (a == kGround && b == kGround) continue;
        if (e.kind == ElementKind::VoltageSource) {
            if (a != kGround) g.core.insert(a);
            if (b != kGround) g.core.insert(b);
        }
        const std::size_t idx = g.edges.size();
        g.edges.push_back({a, b, e.kind, e.name, e.value.value_or(0.0)});
        if (a != kGround) g.adjacency[a].push_back(idx);
        if (b != kGround && b != a) g.adjacency[b].push_back(idx);
    }
    return g;
}

std::vector<Chain> detect_chains(const CircuitGraph& graph, double rel_tol) {
    if (!(rel_tol > 0.0 && rel_tol <= 1e-3))
        throw PreconditionError("detect_chains: rel_tol must lie in (0, 1e-3]");
    return ChainFinder(graph, rel_tol).run();
}

ChainStats chain_stats(const Netlist& netlist, const std::vector<Chain>& chains) {
    ChainStats s;
    s.total_nodes_N = netlist.nodes().size();
    s.chain_count = chains.size();
    for (const auto& c : chains) {
        s.N_tot += c.n;
        s.max_len = std::max(s.max_len, c.n);
        const double t = ticer_time_constant(c);
        s.min_tau_ticer = s.min_tau_ticer == 0.0 ? t : std::min(s.min_tau_ticer, t);
        s.max_tau_ticer = std::max(s.max_tau_ticer, t);
    }
    s.split_ratio = s.total_nodes_N == 0 ? 0.0
                                         : static_cast<double>(s.N_tot) / static_cast<double>(s.total_nodes_N);
    return s;
}

double time_constant(const Chain& chain) { return chain.R * chain.C; }

double ticer_time_constant(const Chain& chain) { return chain.R * chain.C / 2.0; }

}  // namespace rcchain
