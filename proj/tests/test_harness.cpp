#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "rcchain/error.hpp"
#include "rcchain/harness.hpp"
#include "support.hpp"

using namespace rcchain;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("rcchain_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("weighted error worked example", "[harness]") {
    const auto r = weighted_errors(std::vector<double>{1e-3, 1e-7}, std::vector<double>{1.01e-3, 1e-10});
    // Independent: (1e-5 + 9.99e-8) / (2.01e-3 + 1.001e-7).
    const double oracle = (1e-5 + 9.99e-8) / (2.01e-3 + 1.001e-7);
    CHECK(r.E_rel == Approx(oracle).epsilon(1e-12));
    CHECK(std::abs(r.E_rel - 5.02e-3) <= 1e-5);
    CHECK(r.E_abs == Approx((1e-5 + 9.99e-8) / 2));
    CHECK(r.point_count == 2);
}

TEST_CASE("weighted error edge cases", "[harness]") {
    const std::vector<double> a{1.0, -2.0, 3.0};
    CHECK(weighted_errors(a, a).E_rel == 0.0);
    CHECK(weighted_errors(std::vector<double>{0, 0}, std::vector<double>{0, 0}).E_rel == 0.0);
    CHECK(weighted_errors(std::vector<double>{2.0}, std::vector<double>{0.0}).E_rel == 1.0);
    CHECK_THROWS_AS(weighted_errors(std::vector<double>{1, 2}, std::vector<double>{1}), PreconditionError);
    CHECK_THROWS_AS(weighted_errors(std::vector<double>{}, std::vector<double>{}), PreconditionError);

    const auto k = weighted_errors(a, std::vector<double>{1.5, -2.0, 2.0}, true);
    REQUIRE(k.deltas.size() == 3);
    CHECK(k.deltas[0] == 0.5);
    CHECK(k.weights[2] == 5.0);

    TransientTrace t1, t2;
    t1.times = {0, 1e-12};
    t1.current = {0, 1};
    t2.times = {0, 2e-12};
    t2.current = {0, 1};
    CHECK_THROWS_AS(weighted_errors(t1, t2), PreconditionError);
}

TEST_CASE("weighted error properties on random traces", "[harness]") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(50), b(50);
        for (auto& x : a) x = g(rng);
        for (auto& x : b) x = g(rng);
        const auto ab = weighted_errors(a, b);
        const auto ba = weighted_errors(b, a);
        CHECK(ab.E_rel == Approx(ba.E_rel).epsilon(1e-14));
        CHECK(ab.E_rel >= 0.0);
        CHECK(ab.E_rel <= 1.0);
        auto as = a, bs = b;
        for (auto& x : as) x *= 1e-9;
        for (auto& x : bs) x *= 1e-9;
        CHECK(weighted_errors(as, bs).E_rel == Approx(ab.E_rel).epsilon(1e-12));
    }
}

TEST_CASE("sweep is deterministic and thread-count independent", "[harness]") {
    ExperimentConfig cfg;
    cfg.C = 1e-15;
    cfg.n_sweep = {1, 2, 4, 8, 16};
    const auto a = run_sweep(cfg, 1);
    const auto b = run_sweep(cfg, 4);
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].n == cfg.n_sweep[i]);
        CHECK(a[i].E_rel == b[i].E_rel);
        CHECK(a[i].E_abs == b[i].E_abs);
        CHECK(a[i].regime == RegimeKind::SmallTau);
        CHECK(a[i].model == "derivative");
        CHECK(a[i].E_rel < 1e-2);
    }

    cfg.C = 1e-7;
    cfg.n_sweep = {1, 7};
    const auto big = run_sweep(cfg, 2);
    CHECK(big[0].regime == RegimeKind::LargeTau);
    CHECK(big[0].model == "portcurrent");

    cfg.n_sweep = {};
    CHECK_THROWS_AS(run_sweep(cfg), PreconditionError);
}

TEST_CASE("plot data files", "[harness]") {
    const auto dir = scratch("plot");
    std::vector<SweepRow> rows{{1, RegimeKind::SmallTau, "derivative", 1e-9, 1e-3, false},
                               {2, RegimeKind::SmallTau, "derivative", 2e-9, 3e-3, false}};
    std::set<std::string> paths;
    for (const char* w : {"sin", "pulse", "exp"})
        for (double C : {1e-15, 1e-7})
            for (const char* sT : {"1ps-1ns", "1ns-100ns"}) paths.insert(emit_plot_data(rows, {w, C, sT}, dir.string()));
    CHECK(paths.size() == 12);
    CHECK(paths.count((dir / "err_sin_1e-15_1ps-1ns.csv").string()) == 1);
    const auto back = read_plot_data(*paths.begin());
    REQUIRE(back.size() == 2);
    CHECK(back[1].n == 2);
    CHECK(back[1].E_abs == 2e-9);
    CHECK(back[1].E_rel == 3e-3);
    CHECK_THROWS_AS(emit_plot_data({}, {"sin", 1e-15, "1ps-1ns"}, dir.string()), PreconditionError);
    CHECK(step_label(1e-12, 1e-9) == "1ps-1ns");
    CHECK(step_label(1e-9, 100e-9) == "1ns-100ns");
}

TEST_CASE("compare: identical netlists", "[harness]") {
    const auto dir = scratch("cmp_same");
    const auto text = testing::planted_netlist({{10}}, 8, ".control\nwrdata out.dat V(p0_5)\n.endc\n");
    write_file(dir / "a.sp", text);
    write_file(dir / "b.sp", text);
    const auto r = compare_netlists((dir / "a.sp").string(), (dir / "b.sp").string());
    CHECK(r.mode == "chain");
    CHECK(r.report.E_rel == 0.0);
    CHECK(r.report.point_count > 0);
}

TEST_CASE("compare: reduced chain", "[harness]") {
    const auto dir = scratch("cmp_red");
    const auto text = testing::planted_netlist({{10}}, 8, ".control\nwrdata out.dat V(p0_10)\n.endc\n");
    const auto nl = parse_netlist(text);
    ReducerConfig cfg;
    const auto plan = reduce_netlist(nl, cfg, {});
    write_file(dir / "a.sp", text);
    write_file(dir / "b.sp", emit_netlist(plan.result.netlist));
    const auto r = compare_netlists((dir / "a.sp").string(), (dir / "b.sp").string());
    REQUIRE(r.node_pairs.size() == 1);
    CHECK(r.node_pairs[0].second == "p0");
    CHECK(r.report.E_rel < 1e-2);
}

TEST_CASE("compare: no output nodes", "[harness]") {
    const auto dir = scratch("cmp_none");
    const auto text = testing::planted_netlist({{3}});
    write_file(dir / "a.sp", text);
    write_file(dir / "b.sp", text);
    CHECK_THROWS_AS(compare_netlists((dir / "a.sp").string(), (dir / "b.sp").string()), Error);
}

TEST_CASE("compare: external traces", "[harness]") {
    const auto dir = scratch("cmp_ext");
    const auto text = testing::planted_netlist({{3}}, 8, ".control\nwrdata out.dat V(g1)\n.endc\n");
    write_file(dir / "a.sp", text);
    write_file(dir / "b.sp", text);
    write_file(dir / "a.csv", "time,v(g1)\n0,1e-3\n1e-12,1e-7\n");
    write_file(dir / "b.csv", "t g1\n0 1.01e-3\n1e-12 1e-10\n");
    CompareOptions opt;
    opt.external_traces = {(dir / "a.csv").string(), (dir / "b.csv").string()};
    const auto r = compare_netlists((dir / "a.sp").string(), (dir / "b.sp").string(), opt);
    CHECK(r.mode == "external");
    CHECK(r.report.E_rel == Approx(5.0246e-3).epsilon(1e-4));

    // Headerless wrdata layout.
    write_file(dir / "c.dat", "0 1e-3\n1e-12 1e-7\n");
    opt.external_traces = {(dir / "a.csv").string(), (dir / "c.dat").string()};
    CHECK(compare_netlists((dir / "a.sp").string(), (dir / "b.sp").string(), opt).report.E_rel == 0.0);

    write_file(dir / "d.csv", "t,g1\n0,1\n5e-13,1\n");
    opt.external_traces = {(dir / "a.csv").string(), (dir / "d.csv").string()};
    CHECK_THROWS_AS(compare_netlists((dir / "a.sp").string(), (dir / "b.sp").string(), opt), Error);
}
