#pragma once

#include <string>
#include <string_view>
#include <variant>

namespace rcchain {

// Independent voltage source descriptors with Ngspice argument order.

struct SinWave {
    double vo = 0.0;     // offset (V)
    double va = 0.0;     // amplitude (V)
    double freq = 0.0;   // Hz
    double td = 0.0;     // delay (s)
    double theta = 0.0;  // damping (1/s)
    double phase = 0.0;  // degrees
};

struct PulseWave {
    double v1 = 0.0;
    double v2 = 0.0;
    double td = 0.0;
    double tr = 0.0;
    double tf = 0.0;
    double pw = 0.0;
    double per = 0.0;
};

struct ExpWave {
    double v1 = 0.0;
    double v2 = 0.0;
    double td1 = 0.0;
    double tau1 = 0.0;
    double td2 = 0.0;
    double tau2 = 0.0;
};

struct DcWave {
    double level = 0.0;
};

using WaveformSpec = std::variant<SinWave, PulseWave, ExpWave, DcWave>;

/// Parses "SIN(0 1 1G 0 0 90)", "PULSE(...)", "EXP(...)", "DC 1" or a bare
/// number. Arguments may be separated by blanks or commas and accept SPICE
/// magnitude suffixes. Throws PreconditionError on malformed text or when a
/// parameter violates the waveform invariants.
WaveformSpec parse_waveform(std::string_view text);

/// Ngspice-style text for the waveform, numbers at 17 significant digits.
std::string format_waveform(const WaveformSpec& spec);

/// Short lowercase family name: "sin", "pulse", "exp" or "dc".
std::string waveform_family(const WaveformSpec& spec);

/// Throws PreconditionError when a time parameter is negative, freq <= 0 or
/// an EXP time constant is not positive.
void validate_waveform(const WaveformSpec& spec);

/// Source value at time t >= 0.
double eval_waveform(const WaveformSpec& spec, double t);

}  // namespace rcchain
