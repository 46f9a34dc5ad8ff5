#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <limits>

#include "rcchain/error.hpp"
#include "rcchain/reducer.hpp"
#include "support.hpp"

using namespace rcchain;
using namespace rcchain::testing;
using Catch::Approx;

namespace {

ReducerConfig cfg_1ps_1ns() {
    ReducerConfig c;
    c.step_s = 1e-12;
    c.sim_duration_T = 1e-9;
    c.alpha = 10;
    return c;
}

// Sum of grounded capacitor values on the given nodes, accumulated in long
// double so the oracle adds no rounding of its own before the final cast.
double grounded_c(const Netlist& nl, const std::set<std::string>& nodes) {
    long double sum = 0.0;
    for (const auto& e : nl.elements())
        if (e.kind == ElementKind::Capacitor && (e.nodes[1] == "0" || e.nodes[0] == "0")) {
            const auto& n = e.nodes[0] == "0" ? e.nodes[1] : e.nodes[0];
            if (nodes.count(n)) sum += *e.value;
        }
    return static_cast<double>(sum);
}

std::set<std::string> footprint(const Netlist& nl, const std::string& port) {
    std::set<std::string> out;
    for (const auto& n : nl.nodes())
        if (n == port || n.rfind(port + "_", 0) == 0) out.insert(n);
    return out;
}

}  // namespace

TEST_CASE("regime classification", "[reducer]") {
    const auto c = cfg_1ps_1ns();
    CHECK(classify(1e-15, c, 1e-9).kind == RegimeKind::SmallTau);
    CHECK(classify(1e-7, c, 1e-9).kind == RegimeKind::LargeTau);
    CHECK(classify(c.step_s / c.alpha, c, 1e-9).kind == RegimeKind::SameOrder);
    CHECK(classify(c.alpha * 1e-9, c, 1e-9).kind == RegimeKind::SameOrder);
    CHECK(classify(1e-12, c, 1e-9).kind == RegimeKind::SameOrder);
    CHECK_THROWS_AS(classify(0.0, c, 1e-9), PreconditionError);
    CHECK_THROWS_AS(classify(1.0, c, 0.0), PreconditionError);

    // Totality over a log sweep: every value lands in exactly one interval.
    for (int e = -180; e <= 30; ++e) {
        const double tau = std::pow(10.0, e / 10.0);
        const auto k = classify(tau, c, 1e-9).kind;
        const int matches = (tau < c.step_s / c.alpha) + (tau > c.alpha * 1e-9) +
                            (tau >= c.step_s / c.alpha && tau <= c.alpha * 1e-9);
        CHECK(matches == 1);
        if (tau < c.step_s / c.alpha) CHECK(k == RegimeKind::SmallTau);
        if (tau > c.alpha * 1e-9) CHECK(k == RegimeKind::LargeTau);
    }
}

TEST_CASE("model choice", "[reducer]") {
    const auto c = cfg_1ps_1ns();
    Chain ch;
    ch.R = 0.953316;
    ch.C = 0.891774e-15;

    ch.n = 78;
    const auto h = std::get<HalvedChain>(choose_model(ch, classify(ch, c), c));
    CHECK(h.m == 39);
    CHECK(h.C_each == Approx(79.0 / 40.0 * ch.C).epsilon(1e-15));
    CHECK(h.R == Approx(ch.R * 78.0 * 157.0 * 40.0 / (39.0 * 79.0 * 79.0)).epsilon(1e-15));

    ch.n = 10;
    CHECK(std::get<Lumped>(choose_model(ch, classify(ch, c), c)).C_total == Approx(11 * ch.C));

    ch.n = 64;
    CHECK(std::holds_alternative<Lumped>(choose_model(ch, classify(ch, c), c)));
    ch.n = 65;
    CHECK(std::holds_alternative<HalvedChain>(choose_model(ch, classify(ch, c), c)));

    Chain big;
    big.n = 5;
    big.R = 1.0;
    big.C = 1e-7;
    const auto p = std::get<PortCurrent>(choose_model(big, classify(big, c), c));
    CHECK(p.R == 1.0);
    CHECK(p.C == 1e-7);
}

TEST_CASE("halved resistance keeps the second admittance moment", "[reducer]") {
    for (std::size_t n : {65, 78, 128, 139}) {
        const std::size_t m = n / 2;
        const double R = 1.0, C = 1.0;
        const double Ce = (n + 1.0) * C / (m + 1.0);
        const double Rm = halved_resistance(n, m, R);
        auto s2 = [](double k) { return k * (k + 1) * (2 * k + 1) / 6; };
        CHECK(s2(static_cast<double>(m)) * Rm * Ce * Ce == Approx(s2(static_cast<double>(n)) * R * C * C));
    }
}

TEST_CASE("lumped rewrite in a 100-node netlist", "[reducer]") {
    std::string pad;
    for (int i = 0; i < 80; ++i) pad += "Mpad" + std::to_string(i) + " pad" + std::to_string(i) + " drv 0 0 nmos\n";
    pad += ".control\nwrdata out.dat V(p0_7) V(g1)\n.endc\n";
    const auto nl = parse_netlist(planted_netlist({{10}}, 8, pad));
    REQUIRE(nl.nodes().size() == 100);
    const auto chains = detect_chains(build_graph(nl));
    REQUIRE(chains.size() == 1);
    const double C = chains[0].C;
    const auto before = grounded_c(nl, footprint(nl, "p0"));

    const auto r = rewrite(nl, {{chains[0], Lumped{11 * C}}});
    CHECK(r.netlist.nodes().size() == 90);
    CHECK(r.mapping.size() == 10);
    CHECK(r.mapping.at("p0_7") == "p0");
    const auto idx = r.netlist.find_element("Cp0");
    REQUIRE(idx);
    CHECK(*r.netlist.elements()[*idx].value == 11 * C);
    CHECK(emit_netlist(r.netlist).find("wrdata out.dat V(p0) V(g1)") != std::string::npos);
    const auto after = grounded_c(r.netlist, footprint(r.netlist, "p0"));
    CHECK((after == before || std::nextafter(before, after) == after));
}

TEST_CASE("halved rewrite", "[reducer]") {
    const auto nl = parse_netlist(planted_netlist({{78}}));
    const auto chains = detect_chains(build_graph(nl));
    REQUIRE(chains.size() == 1);
    const auto c = cfg_1ps_1ns();
    const auto model = choose_model(chains[0], classify(chains[0], c), c);
    const auto& h = std::get<HalvedChain>(model);
    const auto r = rewrite(nl, {{chains[0], model}});
    CHECK(r.netlist.nodes().size() == nl.nodes().size() - (78 - 39));
    CHECK(r.netlist.nodes().count("p0_rch1") == 1);
    CHECK(r.netlist.nodes().count("p0_rch39") == 1);
    CHECK(r.netlist.nodes().count("p0_1") == 0);

    const auto before = grounded_c(nl, footprint(nl, "p0"));
    const auto after = grounded_c(r.netlist, footprint(r.netlist, "p0"));
    CHECK((after == before || std::nextafter(before, after) == after));

    // The rewritten chain is detected again as a 39-resistor chain.
    const auto again = detect_chains(build_graph(r.netlist));
    REQUIRE(again.size() == 1);
    CHECK(again[0].n == h.m);
    CHECK(again[0].R == h.R);
    CHECK(again[0].C == h.C_each);
}

TEST_CASE("port-current rewrite leaves a marker", "[reducer]") {
    PlantedChain big{5, 1.0, 1e-7};
    const auto nl = parse_netlist(planted_netlist({big}));
    const auto chains = detect_chains(build_graph(nl));
    const auto r = rewrite(nl, {{chains[0], PortCurrent{1.0, 1e-7}}});
    CHECK(r.netlist.nodes().size() == nl.nodes().size() - 5);
    const auto text = emit_netlist(r.netlist);
    CHECK(text.find("*RCRED MODEL=PORTCURRENT PORT=p0 N=5 R=1 C=9.9999999999999995e-08") != std::string::npos);
    bool found = false;
    for (const auto& d : r.netlist.directives())
        if (auto mk = parse_model_marker(d.raw)) {
            found = true;
            CHECK(mk->port == "p0");
            CHECK(mk->n == 5);
            CHECK(std::get<PortCurrent>(mk->model).C == 1e-7);
        }
    CHECK(found);
    CHECK_FALSE(parse_model_marker("* just a comment"));
    CHECK_THROWS_AS(parse_model_marker("*RCRED MODEL=WHAT PORT=a N=1"), ParseError);
}

TEST_CASE("recurrence marker round trip", "[reducer]") {
    const auto nl = parse_netlist(planted_netlist({{3}}));
    const auto chains = detect_chains(build_graph(nl));
    const RecurrenceModel m{2, {0.5, -0.25}, {1.0, 2.0, 3.0}, 1e-9};
    const auto r = rewrite(nl, {{chains[0], m}});
    for (const auto& d : r.netlist.directives())
        if (auto mk = parse_model_marker(d.raw)) {
            const auto& back = std::get<RecurrenceModel>(mk->model);
            CHECK(back.gamma == m.gamma);
            CHECK(back.beta == m.beta);
        }
}

TEST_CASE("rewrite with no chains is the identity", "[reducer]") {
    const auto text = planted_netlist({{4}, {9}});
    const auto nl = parse_netlist(text);
    CHECK(emit_netlist(rewrite(nl, {}).netlist) == text);
}

TEST_CASE("rewrite errors", "[reducer]") {
    const auto nl = parse_netlist(planted_netlist({{4}}));
    const auto chains = detect_chains(build_graph(nl));
    CHECK_THROWS_AS(rewrite(nl, {{chains[0], Lumped{1}}, {chains[0], Lumped{1}}}), Error);
    Chain ghost = chains[0];
    ghost.resistor_elements[1] = "Rnowhere";
    ghost.port = "q";
    ghost.interior = {"q1", "q2", "q3", "q4"};
    CHECK_THROWS_AS(rewrite(nl, {{ghost, Lumped{1}}}), Error);
}

TEST_CASE("whole-netlist reduction", "[reducer]") {
    std::vector<PlantedChain> planted{{10}, {78}, {2}, {6, 1.0, 1e-7}, {6, 1.0, 1e-12}};
    const auto nl = parse_netlist(planted_netlist(planted));
    ReduceOptions opt;
    opt.min_chain_len = 3;
    const auto plan = reduce_netlist(nl, cfg_1ps_1ns(), opt);
    REQUIRE(plan.rows.size() == 5);
    std::size_t removed = 0;
    for (const auto& row : plan.rows) removed += row.nodes_removed;
    CHECK(plan.rows[0].model);  // p0: lumped
    CHECK(model_name(*plan.rows[0].model) == "lumped");
    CHECK(model_name(*plan.rows[1].model) == "halved");
    CHECK_FALSE(plan.rows[2].model);  // shorter than 3
    CHECK(model_name(*plan.rows[3].model) == "portcurrent");
    CHECK_FALSE(plan.rows[4].model);  // same order, recurrence disabled
    CHECK(plan.result.netlist.nodes().size() == nl.nodes().size() - removed);
    const auto report = format_reduction_report(plan.rows);
    CHECK(report.rfind("port,n,tau_c,regime,model,nodes_removed,note\n", 0) == 0);

    opt.enable_recurrence = true;
    const auto with_rec = reduce_netlist(nl, cfg_1ps_1ns(), opt);
    const auto& row = with_rec.rows[4];
    CHECK(row.regime.kind == RegimeKind::SameOrder);
    if (row.model) CHECK(model_name(*row.model) == "recurrence");
}
