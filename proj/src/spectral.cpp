#include "rcchain/spectral.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

namespace rcchain {

namespace {

constexpr Complex kJ{0.0, 1.0};

// Below this |RC w| the admittance is evaluated in a form where the O(sqrt)
// terms of the numerator have been cancelled analytically.
constexpr double kSmallArgument = 1.0;

// rho^k and 1 + rho + ... + rho^(k-1), by binary exponentiation.
struct PowerSum {
    Complex power;
    Complex sum;
};

PowerSum power_and_geometric_sum(Complex rho, std::size_t k) {
    PowerSum acc{1.0, 0.0};
    if (k == 0) return acc;
    std::size_t bit = std::size_t{1} << (63 - __builtin_clzll(static_cast<unsigned long long>(k)));
    for (; bit != 0; bit >>= 1) {
        acc.sum *= 1.0 + acc.power;
        acc.power *= acc.power;
        if (k & bit) {
            acc.sum = 1.0 + rho * acc.sum;
            acc.power *= rho;
        }
    }
    return acc;
}

struct ChainTerms {
    Complex x;    // j R C w
    Complex u;    // sqrt(x^2/4 + x), principal branch
    Complex a;    // 1 + x/2 + u
    Complex rho;  // b/a = 1/a^2
    Complex tau_a_minus_1;  // (1 + x) a - 1
};

ChainTerms chain_terms(double R, double C, double omega) {
    ChainTerms t;
    const double r = R * C * omega;
    t.x = Complex(0.0, r);
    t.u = std::sqrt(Complex(-0.25 * r * r, r));
    t.a = 1.0 + 0.5 * t.x + t.u;
    t.rho = 1.0 / (t.a * t.a);
    t.tau_a_minus_1 = t.u * (1.0 + t.x) + 0.5 * t.x * (3.0 + t.x);
    if (!(std::abs(t.rho) <= 1.0 + 1e-12))
        throw Error("admittance: |b/a| > 1 at omega = " + std::to_string(omega) + " (branch selection failed)");
    return t;
}

// Y_n(w) R / x for |x| < kSmallArgument. With k = n-1, S = sum_{i<k} rho^i,
// W = 1 + 2x + x^2/2 - u(2+x) and P - Q = x/(tau a - 1):
//     Y R / x = ((2 + x) + W S / a) / ((1 + x) - (P - Q) S / a)
Complex scaled_admittance_small(const ChainTerms& t, std::size_t n) {
    const auto ps = power_and_geometric_sum(t.rho, n - 1);
    const Complex s_over_a = ps.sum / t.a;
    const Complex w = 1.0 + 2.0 * t.x + 0.5 * t.x * t.x - t.u * (2.0 + t.x);
    const Complex p_minus_q = t.x / t.tau_a_minus_1;
    return ((2.0 + t.x) + w * s_over_a) / ((1.0 + t.x) - p_minus_q * s_over_a);
}

// Y_n(w) R from H_n, with tau - b = u + x/2, a - tau = x/(u + x/2) and
// tau b - 1 = -x/(tau a - 1).
Complex admittance_times_r_large(const ChainTerms& t, std::size_t n) {
    const auto ps = power_and_geometric_sum(t.rho, n - 1);
    const Complex h = -t.x / (t.tau_a_minus_1 * t.tau_a_minus_1) * ps.power;
    const Complex tau_minus_b = t.u + 0.5 * t.x;
    const Complex a_minus_tau = t.x / tau_minus_b;
    return (tau_minus_b + a_minus_tau * h) / (1.0 - h);
}

void check_n(std::size_t n) {
    if (n < 1) throw PreconditionError("chain length n must be >= 1");
}

struct GslWorkspace {
    explicit GslWorkspace(std::size_t limit) : ws(gsl_integration_workspace_alloc(limit)), limit(limit) {}
    ~GslWorkspace() { gsl_integration_workspace_free(ws); }
    GslWorkspace(const GslWorkspace&) = delete;
    GslWorkspace& operator=(const GslWorkspace&) = delete;
    gsl_integration_workspace* ws;
    std::size_t limit;
};

struct QuadResult {
    double value = 0.0;
    double abserr = 0.0;
    int status = GSL_SUCCESS;
};

template <class Fn>
QuadResult integrate(Fn&& fn, const std::vector<double>& points, double epsabs, double epsrel) {
    static std::once_flag once;
    std::call_once(once, [] { gsl_set_error_handler_off(); });

    constexpr std::size_t kLimit = 4000;
    GslWorkspace ws(kLimit);
    gsl_function gf;
    gf.function = [](double x, void* p) { return (*static_cast<std::remove_reference_t<Fn>*>(p))(x); };
    gf.params = &fn;
    std::vector<double> pts = points;
    QuadResult r;
    r.status = gsl_integration_qagp(&gf, pts.data(), pts.size(), epsabs, epsrel, kLimit, ws.ws, &r.value,
                                    &r.abserr);
    return r;
}

}  // namespace

void validate(const SpectralParams& p) {
    check_n(p.n);
    if (!(p.R > 0.0) || !(p.C > 0.0) || !(p.s > 0.0))
        throw PreconditionError("spectral parameters need R, C, s > 0");
    if (!(p.M >= 1.0 && p.M <= 1e-6 / p.s * (1.0 + 1e-12)))
        throw PreconditionError("damping rate M must lie in [1, 1e-6/s]");
}

double default_damping(double step_s) {
    if (!(step_s > 0.0)) throw PreconditionError("time step must be > 0");
    return std::clamp(1e-8 / step_s, 1.0, std::max(1.0, 1e-6 / step_s));
}

CharRoots char_roots(double R, double C, double omega) {
    const auto t = chain_terms(R, C, omega);
    return {t.a, 1.0 / t.a};
}

Complex h_ratio(const SpectralParams& p, double omega) {
    check_n(p.n);
    const auto t = chain_terms(p.R, p.C, omega);
    if (omega == 0.0) return -1.0;
    const auto ps = power_and_geometric_sum(t.rho, p.n - 1);
    return -t.x / (t.tau_a_minus_1 * t.tau_a_minus_1) * ps.power;
}

Complex admittance_over_omega(const SpectralParams& p, double omega) {
    check_n(p.n);
    if (omega == 0.0) return kJ * (static_cast<double>(p.n) + 1.0) * p.C;
    const auto t = chain_terms(p.R, p.C, omega);
    if (std::abs(t.x) < kSmallArgument) return kJ * p.C * scaled_admittance_small(t, p.n);
    return admittance_times_r_large(t, p.n) / (p.R * omega);
}

Complex admittance(const SpectralParams& p, double omega) {
    check_n(p.n);
    if (omega == 0.0) return 0.0;
    const auto t = chain_terms(p.R, p.C, omega);
    if (std::abs(t.x) < kSmallArgument) return t.x * scaled_admittance_small(t, p.n) / p.R;
    return admittance_times_r_large(t, p.n) / p.R;
}

Complex admittance_bruteforce(const SpectralParams& p, double omega) {
    check_n(p.n);
    if (p.n > 4096) throw PreconditionError("admittance_bruteforce: n must be <= 4096");
    if (!(p.R > 0.0) || !(p.C > 0.0)) throw PreconditionError("admittance_bruteforce: R, C must be > 0");

    // Unknowns e_i = V_0 - V_i with V_0 = 1, i = 1..n. Substituting into the
    // recurrence gives -e_{i-1} + (2+x) e_i - e_{i+1} = x (e_0 = 0) and
    // -e_{n-1} + (1+x) e_n = x; the port current is (x + e_1)/R. Solving for
    // the deviations keeps I accurate when |x| is tiny.
    const std::size_t n = p.n;
    const Complex x(0.0, p.R * p.C * omega);
    std::vector<Complex> diag(n, 2.0 + x), rhs(n, x);
    diag[n - 1] = 1.0 + x;
    // Thomas algorithm; sub- and super-diagonals are -1.
    for (std::size_t i = 1; i < n; ++i) {
        if (diag[i - 1] == 0.0) throw Error("admittance_bruteforce: singular system");
        const Complex m = -1.0 / diag[i - 1];
        diag[i] -= m * -1.0;
        rhs[i] -= m * rhs[i - 1];
    }
    std::vector<Complex> e(n);
    if (diag[n - 1] == 0.0) throw Error("admittance_bruteforce: singular system");
    e[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) e[i] = (rhs[i] + e[i + 1]) / diag[i];
    return (x + e[0]) / p.R;
}

FGCoefficients fn_gn(const SpectralParams& p) {
    validate(p);
    constexpr double kLambdaMax = 25.0;
    constexpr double kEpsAbs = 1e-12;
    constexpr double kEpsRel = 1e-9;
    const double sqrt_pi = std::sqrt(std::numbers::pi);
    const double ms = p.M * p.s;

    // g(lambda) = Y(lambda M) / (lambda M C), dimensionless.
    auto g = [&](double lambda) { return admittance_over_omega(p, lambda * p.M) / p.C; };
    auto kernel = [&](double lambda) {
        return std::exp(-0.25 * lambda * lambda) * std::polar(1.0, lambda * ms);
    };
    // Integrals over [-25, 25] folded onto [0, 25].
    auto folded_f = [&](double l) {
        return l * l * (g(l) * kernel(l) + g(-l) * kernel(-l));
    };
    auto folded_g = [&](double l) { return l * (g(l) * kernel(l) - g(-l) * kernel(-l)); };

    // Break the interval where |RC w| crosses 1 and 1/(n+1)^2, the two
    // places where Y_n changes character.
    std::vector<double> points{0.0};
    const double lambda_c = 1.0 / (p.M * p.R * p.C);
    const double np1 = static_cast<double>(p.n) + 1.0;
    for (double b : {lambda_c / (np1 * np1), lambda_c})
        if (b > 1e-12 && b < kLambdaMax) points.push_back(b);
    points.push_back(kLambdaMax);

    // F = C (-j/(4 sqrt(pi))) (A + jB) = C (B - jA)/(4 sqrt(pi)).
    const double f_pref = p.C / (4.0 * sqrt_pi);
    const auto f_im = integrate([&](double l) { return folded_f(l).imag(); }, points, kEpsAbs, kEpsRel);
    const auto f_re = integrate([&](double l) { return folded_f(l).real(); }, points, kEpsAbs, kEpsRel);
    const auto f_l1 = integrate(
        [&](double l) { return l * l * (std::abs(g(l)) + std::abs(g(-l))) * std::exp(-0.25 * l * l); },
        points, kEpsAbs, 1e-6);

    // G = C M/(2 sqrt(pi)) (A + jB).
    const double g_pref = p.C * p.M / (2.0 * sqrt_pi);
    const auto g_re = integrate([&](double l) { return folded_g(l).real(); }, points, kEpsAbs, kEpsRel);
    const auto g_im = integrate([&](double l) { return folded_g(l).imag(); }, points, kEpsAbs, kEpsRel);
    const auto g_l1 = integrate(
        [&](double l) { return l * (std::abs(g(l)) + std::abs(g(-l))) * std::exp(-0.25 * l * l); },
        points, kEpsAbs, 1e-6);

    FGCoefficients r;
    r.F = f_pref * f_im.value;
    r.F_imag = -f_pref * f_re.value;
    r.F_err_abs = f_pref * (f_im.abserr + f_re.abserr) + std::abs(r.F_imag);
    r.F_scale = f_pref * f_l1.value;
    r.G = g_pref * g_re.value;
    r.G_imag = g_pref * g_im.value;
    r.G_err_abs = g_pref * (g_re.abserr + g_im.abserr) + std::abs(r.G_imag);
    r.G_scale = g_pref * f_l1.value * 0.0 + g_pref * g_l1.value;

    const bool f_bad = !(r.F_err_abs <= 1e-6 * std::max(std::abs(r.F), 1e-30));
    const bool g_bad = !(r.G_err_abs <= 1e-6 * std::max(std::abs(r.G), p.M * std::abs(r.F)));
    if (f_bad || g_bad) {
        std::string msg = "fn_gn: quadrature did not converge (n=" + std::to_string(p.n) + ")";
        for (const auto* q : {&f_im, &f_re, &g_re, &g_im})
            if (q->status != GSL_SUCCESS) msg += std::string("; ") + gsl_strerror(q->status);
        throw QuadratureError(msg, r);
    }
    return r;
}

}  // namespace rcchain
