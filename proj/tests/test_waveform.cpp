#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <numbers>

#include "rcchain/error.hpp"
#include "rcchain/waveform.hpp"

using namespace rcchain;
using Catch::Approx;

TEST_CASE("SIN with 90 degree phase starts at 1 V", "[waveform]") {
    const auto w = parse_waveform("SIN(0 1 1G 0 0 90)");
    CHECK(eval_waveform(w, 0.0) == Approx(1.0));
    CHECK(eval_waveform(w, 0.5e-9) == Approx(-1.0));
    CHECK(eval_waveform(w, 0.25e-9) == Approx(0.0).margin(1e-12));
}

TEST_CASE("SIN holds the offset before the delay and damps after it", "[waveform]") {
    const auto w = parse_waveform("SIN(0.5 2 1MEG 1u 1e5)");
    CHECK(eval_waveform(w, 0.5e-6) == 0.5);
    const double t = 1.3e-6;
    const double expect = 0.5 + 2.0 * std::exp(-(t - 1e-6) * 1e5) * std::sin(2 * std::numbers::pi * 1e6 * (t - 1e-6));
    CHECK(eval_waveform(w, t) == Approx(expect));
}

TEST_CASE("PULSE shape", "[waveform]") {
    const auto w = parse_waveform("PULSE(-1 1 2PS 200PS 200PS 500PS 1NS)");
    CHECK(eval_waveform(w, 0.0) == -1.0);
    CHECK(eval_waveform(w, 2e-12 + 100e-12) == Approx(0.0).margin(1e-12));
    CHECK(eval_waveform(w, 300e-12) == 1.0);
    CHECK(eval_waveform(w, 2e-12 + 200e-12 + 500e-12 + 100e-12) == Approx(0.0).margin(1e-12));
    CHECK(eval_waveform(w, 950e-12) == -1.0);
    // second period
    CHECK(eval_waveform(w, 1e-9 + 300e-12) == Approx(1.0));
}

TEST_CASE("PULSE defaults", "[waveform]") {
    const auto w = parse_waveform("PULSE(0 5)");
    CHECK(eval_waveform(w, 0.0) == 5.0);
    CHECK(eval_waveform(w, 1.0) == 5.0);
}

TEST_CASE("EXP follows the two-segment formula", "[waveform]") {
    const auto w = parse_waveform("EXP(-4 -1 20PS 300PS 600PS 400PS)");
    CHECK(eval_waveform(w, 10e-12) == -4.0);
    const double t1 = 300e-12;
    CHECK(eval_waveform(w, t1) == Approx(-4.0 + 3.0 * (1 - std::exp(-(t1 - 20e-12) / 300e-12))));
    const double t2 = 900e-12;
    const double expect = -4.0 + 3.0 * (1 - std::exp(-(t2 - 20e-12) / 300e-12)) +
                          (-3.0) * (1 - std::exp(-(t2 - 600e-12) / 400e-12));
    CHECK(eval_waveform(w, t2) == Approx(expect));
}

TEST_CASE("DC and bare numbers", "[waveform]") {
    CHECK(eval_waveform(parse_waveform("DC 1.5"), 3.0) == 1.5);
    CHECK(eval_waveform(parse_waveform("2m"), 0.0) == Approx(2e-3));
}

TEST_CASE("format_waveform round-trips", "[waveform]") {
    for (const char* text : {"SIN(0 1 1G 0 0 90)", "PULSE(-1 1 2PS 200PS 200PS 500PS 1NS)",
                             "EXP(-4 -1 20PS 300PS 600PS 400PS)"}) {
        const auto w = parse_waveform(text);
        const auto back = parse_waveform(format_waveform(w));
        for (double t : {0.0, 1e-11, 3.3e-10, 7.7e-10})
            CHECK(eval_waveform(back, t) == eval_waveform(w, t));
    }
    CHECK(waveform_family(parse_waveform("exp(0 1 0 1n 2n 1n)")) == "exp");
}

TEST_CASE("malformed waveforms are rejected", "[waveform]") {
    CHECK_THROWS_AS(parse_waveform("SIN(0 1)"), PreconditionError);
    CHECK_THROWS_AS(parse_waveform("SIN(0 1 0)"), PreconditionError);
    CHECK_THROWS_AS(parse_waveform("EXP(0 1 0 0 1 1)"), PreconditionError);
    CHECK_THROWS_AS(parse_waveform("PULSE(0 1 -1p)"), PreconditionError);
    CHECK_THROWS_AS(parse_waveform("TRIANGLE(0 1)"), PreconditionError);
}
