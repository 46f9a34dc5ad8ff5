#pragma once

// Synthetic netlists with planted RC chains, shared by the unit tests and the
// acceptance binary.

#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

namespace rcchain::testing {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct PlantedChain {
    std::size_t n = 1;
    double R = 0.953316;
    double C = 0.891774e-15;
    /// Index of a resistor whose value is scaled by (1 + perturb), or -1.
    long perturb_at = -1;
    double perturb = 0.0;
};

/// Core of `core_nodes` nodes tied together by MOSFETs and driven by a source,
/// plus one chain per entry hanging off core nodes. Chain k has port "p<k>"
/// and interior "p<k>_1".."p<k>_n". Node count = core_nodes + 1 (drv) +
/// sum(n + 1).
inline std::string planted_netlist(const std::vector<PlantedChain>& chains, std::size_t core_nodes = 8,
                                   const std::string& extra = "") {
    std::string s = "* planted chains\n";
    s += "V1 drv 0 SIN(0 1 1G 0 0 90)\n";
    for (std::size_t i = 0; i < core_nodes; ++i) {
        const std::string a = "g" + std::to_string(i);
        const std::string b = "g" + std::to_string((i + 1) % core_nodes);
        s += "M" + std::to_string(i) + " " + a + " drv " + b + " 0 nmos\n";
        s += "Cg" + std::to_string(i) + " " + a + " 0 2f\n";
    }
    for (std::size_t k = 0; k < chains.size(); ++k) {
        const auto& c = chains[k];
        const std::string p = "p" + std::to_string(k);
        s += "Mp" + std::to_string(k) + " " + p + " drv g" + std::to_string(k % core_nodes) + " 0 nmos\n";
        s += "C" + p + " " + p + " 0 " + num(c.C) + "\n";
        std::string prev = p;
        for (std::size_t i = 1; i <= c.n; ++i) {
            const std::string node = p + "_" + std::to_string(i);
            double r = c.R;
            if (static_cast<long>(i - 1) == c.perturb_at) r *= 1.0 + c.perturb;
            s += "R" + node + " " + prev + " " + node + " " + num(r) + "\n";
            s += "C" + node + " " + node + " 0 " + num(c.C) + "\n";
            prev = node;
        }
    }
    s += extra;
    s += ".model nmos nmos level=1\n.tran 1p 1n\n.end\n";
    return s;
}

}  // namespace rcchain::testing
