#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rcchain/netlist.hpp"

namespace rcchain {

/// Two-terminal element seen as an edge of the circuit graph.
struct GraphEdge {
    std::string a;
    std::string b;
    ElementKind kind;
    std::string element;  // element name
    double value = 0.0;
};

struct GroundedCap {
    std::string element;
    double value = 0.0;
};

/// Element graph of a netlist. Ground never appears in `nodes`.
struct CircuitGraph {
    std::set<std::string> nodes;
    std::vector<GraphEdge> edges;
    std::map<std::string, std::vector<GroundedCap>> grounded_caps;
    /// Nodes touched by a MOSFET, a voltage source or an uninterpreted
    /// element. They may serve as a chain port but never as chain interior.
    std::set<std::string> core;
    /// node -> indices into `edges` of every edge touching it (grounded
    /// capacitors excluded).
    std::map<std::string, std::vector<std::size_t>> adjacency;

    std::size_t chain_eligible_edge_count() const;
};

/// One RC long chain: port, then `interior` from the port's neighbour to the
/// terminal, joined by `n` resistors of value R, each node grounded through
/// one capacitor of value C.
struct Chain {
    std::string port;
    std::vector<std::string> interior;
    std::size_t n = 0;
    double R = 0.0;
    double C = 0.0;
    /// resistor_elements[k] joins node k and node k+1 of [port, interior...].
    std::vector<std::string> resistor_elements;
    /// capacitor_elements[0] is the port capacitor.
    std::vector<std::string> capacitor_elements;
    /// False when the chain was cut off by a non-uniform resistor or capacitor
    /// beyond its last node instead of ending at an isolated terminal. Such
    /// chains are reported but the reducer leaves them alone.
    bool closed_terminal = true;

    /// [port, interior...]
    std::vector<std::string> all_nodes() const;
};

struct ChainStats {
    std::size_t total_nodes_N = 0;  // netlist-declared non-ground nodes
    std::size_t chain_count = 0;
    std::size_t max_len = 0;  // largest n (port excluded)
    std::size_t N_tot = 0;    // sum of n over chains
    double split_ratio = 0.0;
    /// Interior-node time constant RC/2 used by TICER-style elimination,
    /// for reference only. Zero when there are no chains.
    double min_tau_ticer = 0.0;
    double max_tau_ticer = 0.0;
};

CircuitGraph build_graph(const Netlist& netlist);

inline constexpr double kDefaultChainRelTol = 1e-9;

/// Maximal node-disjoint RC chains, sorted by port name.
/// Precondition: rel_tol in (0, 1e-3].
std::vector<Chain> detect_chains(const CircuitGraph& graph, double rel_tol = kDefaultChainRelTol);

ChainStats chain_stats(const Netlist& netlist, const std::vector<Chain>& chains);

/// tau_c = R*C, the quantity used for regime classification.
double time_constant(const Chain& chain);

/// R*C/2, the TICER time constant of an interior chain node.
double ticer_time_constant(const Chain& chain);

}  // namespace rcchain
