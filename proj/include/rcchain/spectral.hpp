#pragma once

#include <complex>
#include <cstddef>

#include "rcchain/error.hpp"

/// Frequency-domain view of an RC long chain.
///
/// Applying the Fourier transform to the nodal equations of a chain with n
/// series resistors R and n+1 grounded capacitors C gives the recurrence
///
///     (2 + RCjw) V_i - V_{i-1} = V_{i+1},      i = 1..n-1
///     (1 + RCjw) V_n           = V_{n-1}
///     (1 + RCjw) V_0 - R I     = V_1
///
/// whose characteristic polynomial x^2 - (2 + RCjw) x + 1 has the roots a, b
/// (a*b = 1). The port current is I = V_0 * Y_n(w). Y_n is evaluated through
/// the ratio H_n = ((tau b - 1)/(tau a - 1)) (b/a)^(n-1), tau = 1 + RCjw,
/// which keeps every power bounded because |b/a| <= 1.
///
/// The one-step current of the chain under a Gaussian-damped linear port
/// voltage V_0(t) = (dv/s t + v) exp(-M^2 t^2) is I(s) = F dv/s + G v, with F
/// and G the inverse Fourier transforms of Y_n against the two Gaussian
/// spectra, evaluated at t = s.
///
/// Causality. The inverse transform of V_0 * Y_n is a two-sided convolution,
/// while the physical current only sees the past of V_0. Two remedies exist:
/// damp V_0 so it vanishes after t = s (the Gaussian factor above, used
/// here), or replace Y_n by the spectrum of its causal part,
/// Y_n * (pi delta(nu) + 1/(j nu)) = pi (Y_n - j Hilbert[Y_n]). The second one
/// needs a principal-value Hilbert transform and is not implemented.
///
/// A plain truncated ramp (V_0 linear on [0, s], zero elsewhere) is not
/// usable: Y_n(w)/w tends to Cj, so the F and G integrals would have to
/// integrate 1/w and exp(jws) over the whole line and do not converge.
namespace rcchain {

using Complex = std::complex<double>;

struct SpectralParams {
    std::size_t n = 1;
    double R = 1.0;
    double C = 1.0;
    double M = 1e4;  // Gaussian damping rate (1/s)
    double s = 1e-12;  // time step (s)
};

/// Throws PreconditionError unless n >= 1, R, C, s > 0 and M in [1, 1e-6/s].
void validate(const SpectralParams& p);

/// M = 1e-8/s clamped into [1, 1e-6/s].
double default_damping(double step_s);

struct CharRoots {
    Complex a;
    Complex b;
};

/// Roots of x^2 - (2 + RCjw) x + 1 with |b| <= |a|. b is formed as 1/a, which
/// is exact in the product and avoids the cancellation in 1 + x/2 - sqrt(..)
/// when |RCw| is large.
CharRoots char_roots(double R, double C, double omega);

/// H_n(w). Tends to -1 as w -> 0 and to 0 as w -> inf.
Complex h_ratio(const SpectralParams& p, double omega);

/// Port admittance Y_n(w) in siemens; 0 at w = 0.
Complex admittance(const SpectralParams& p, double omega);

/// Y_n(w)/w in farads, continuous at w = 0 where it equals (n+1)Cj.
Complex admittance_over_omega(const SpectralParams& p, double omega);

/// Independent oracle: sets V_0 = 1, solves the complex tridiagonal system for
/// V_1..V_n with the Thomas algorithm and returns ((1 + RCjw) - V_1)/R.
/// Precondition: n <= 4096.
Complex admittance_bruteforce(const SpectralParams& p, double omega);

struct FGCoefficients {
    double F = 0.0;  // A*s/V, multiplies dv/s
    double G = 0.0;  // S, multiplies v
    double F_err_abs = 0.0;
    double G_err_abs = 0.0;
    /// Parts of the two integrals that Hermitian symmetry forces to zero.
    double F_imag = 0.0;
    double G_imag = 0.0;
    /// L1 norms of the two integrands, with the same prefactors as F and G.
    double F_scale = 0.0;
    double G_scale = 0.0;
};

class QuadratureError : public Error {
public:
    QuadratureError(const std::string& what, FGCoefficients partial)
        : Error(what), partial_(partial) {}
    const FGCoefficients& partial() const noexcept { return partial_; }

private:
    FGCoefficients partial_;
};

/// F_n(s) and G_n(s) by adaptive Gauss-Kronrod quadrature over lambda = w/M
/// in [-25, 25]. Throws QuadratureError when the error estimate of F exceeds
/// 1e-6 max(|F|, 1e-30), or that of G exceeds 1e-6 max(|G|, M |F|).
FGCoefficients fn_gn(const SpectralParams& p);

}  // namespace rcchain
