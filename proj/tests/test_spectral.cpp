#include "catch2/catch_amalgamated.hpp"

#include <cmath>

#include "rcchain/spectral.hpp"

using namespace rcchain;
using Catch::Approx;

namespace {

double rel(Complex a, Complex b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("characteristic roots", "[spectral]") {
    // R = C = w = 1: x = j, a = 1 + j/2 + sqrt(j - 1/4), worked by hand.
    const auto r = char_roots(1, 1, 1);
    CHECK(r.a.real() == Approx(1.6248).epsilon(1e-4));
    CHECK(r.a.imag() == Approx(1.3003).epsilon(1e-4));
    for (double w : {1e-6, 1.0, 1e3, 1e12, 1e18}) {
        const auto q = char_roots(1, 1, w);
        CHECK(std::abs(q.a * q.b - 1.0) < 1e-12);
        CHECK(std::abs(q.b) <= std::abs(q.a));
        // Both satisfy x^2 - (2 + jw) x + 1 = 0 relative to the largest term.
        const Complex t(2.0, w);
        CHECK(std::abs(q.a * q.a - t * q.a + 1.0) <= 1e-12 * std::abs(t * q.a));
    }
}

TEST_CASE("closed forms agree with the tridiagonal solve", "[spectral]") {
    for (std::size_t n : {1, 2, 3, 7, 16, 100}) {
        for (int i = 0; i <= 60; ++i) {
            const double w = std::pow(10.0, -3.0 + 21.0 * i / 60.0);
            const SpectralParams p{n, 1.0, 1.0, 1e4, 1e-12};
            CHECK(rel(admittance(p, w), admittance_bruteforce(p, w)) < 1e-9);
        }
    }
}

TEST_CASE("n = 1 closed form", "[spectral]") {
    // Y R = x (2 + x)/(1 + x), x = jRCw.
    for (double w : {1e-9, 0.3, 1.0, 5.0, 1e9}) {
        const SpectralParams p{1, 2.0, 0.5, 1e4, 1e-12};
        const Complex x(0.0, p.R * p.C * w);
        CHECK(rel(admittance(p, w), x * (2.0 + x) / (1.0 + x) / p.R) < 1e-13);
    }
}

TEST_CASE("limits", "[spectral]") {
    const SpectralParams p{5, 1.0, 2.0, 1e4, 1e-12};
    CHECK(admittance(p, 0.0) == Complex(0.0));
    CHECK(rel(admittance_over_omega(p, 0.0), Complex(0, 12.0)) < 1e-15);
    CHECK(rel(admittance_over_omega(p, 1e-12), Complex(0, 12.0)) < 1e-9);
    // H tends to -1 like (2n+1) sqrt(RCw), far slower than Y/w.
    CHECK(std::abs(h_ratio(p, 1e-24) + 1.0) < 1e-9);
    CHECK(std::abs(h_ratio(p, 1e-12) + 1.0) < 20 * std::sqrt(2e-12));
    CHECK(std::abs(h_ratio(p, 1e12)) < 1e-12);
    // High frequency: Y -> jwC + 1/R (port capacitor plus first resistor).
    const double w = 1e12;
    CHECK(rel(admittance(p, w), Complex(1.0, w * 2.0)) < 1e-9);
}

TEST_CASE("default damping", "[spectral]") {
    CHECK(default_damping(1e-12) == Approx(1e4));
    CHECK(default_damping(1e-9) == Approx(10.0));
    CHECK(default_damping(1.0) == 1.0);
}

TEST_CASE("F and G: large time constant", "[spectral]") {
    for (std::size_t n : {1, 4, 10}) {
        const auto fg = fn_gn({n, 1.0, 1.0, 1e4, 1e-12});
        CHECK(fg.F == Approx(1.0).margin(1e-6));
        // Expansion for small s: G = 1/R - 2 C M^2 s + O(M^4 s^3).
        CHECK(fg.G == Approx(1.0 - 2.0 * 1e8 * 1e-12).margin(1e-4));
        CHECK(std::abs(fg.F_imag) <= 1e-9 * fg.F_scale);
    }
}

TEST_CASE("F and G: small time constant", "[spectral]") {
    for (std::size_t n : {1, 2, 10}) {
        const auto fg = fn_gn({n, 1.0, 1e-15, 1e4, 1e-12});
        CHECK(fg.F == Approx((n + 1.0) * 1e-15).epsilon(1e-6));
        // From Y = (n+1)Cjw + S2 R C^2 w^2 + ..., S2 = n(n+1)(2n+1)/6, the two
        // leading terms give G = -2(n+1) C M^2 s + 2 M^2 R C^2 S2.
        const double nn = static_cast<double>(n);
        const double s2 = nn * (nn + 1) * (2 * nn + 1) / 6;
        CHECK(fg.G == Approx(-2.0 * (nn + 1) * 1e-15 * 1e8 * 1e-12 + 2e8 * 1e-30 * s2).epsilon(1e-3));
    }
}

TEST_CASE("precondition errors", "[spectral]") {
    CHECK_THROWS_AS(fn_gn({0, 1, 1, 1e4, 1e-12}), PreconditionError);
    CHECK_THROWS_AS(fn_gn({1, 1, 1, 1e7, 1e-12}), PreconditionError);
    CHECK_THROWS_AS(fn_gn({1, -1, 1, 1e4, 1e-12}), PreconditionError);
    CHECK_THROWS_AS(admittance_bruteforce({5000, 1, 1, 1e4, 1e-12}, 1.0), PreconditionError);
}
