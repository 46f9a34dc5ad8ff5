#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace rcchain {

// Reduced replacements for one RC chain. Produced by the reducer, evaluated
// by transim.

/// Single grounded capacitor at the port.
struct Lumped {
    double C_total = 0.0;
};

/// Chain of m resistors R and m+1 capacitors C_each.
/// (m+1) C_each equals the original (n+1) C.
struct HalvedChain {
    std::size_t m = 0;
    double R = 0.0;
    double C_each = 0.0;
};

/// I = C dV/dt + V/R - (d/(R^2 C)) mean(V) on the port deviation V.
struct PortCurrent {
    double R = 0.0;
    double C = 0.0;
};

/// I(t) = sum_{k=1..m} gamma_k I(t-ks) + sum_{k=0..m} beta_k V(t-ks), with V
/// the port deviation from its initial value. Experimental.
struct RecurrenceModel {
    std::size_t m = 0;
    std::vector<double> gamma;  // m entries, gamma[k-1] multiplies I(t-ks)
    std::vector<double> beta;   // m+1 entries, beta[k] multiplies V(t-ks)
    double rms_residual = 0.0;  // amps, over the calibration trace
};

using ReducedModel = std::variant<Lumped, HalvedChain, PortCurrent, RecurrenceModel>;

/// "lumped", "halved", "portcurrent" or "recurrence".
std::string model_name(const ReducedModel& model);

}  // namespace rcchain
