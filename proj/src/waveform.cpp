#include "rcchain/waveform.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "rcchain/error.hpp"
#include "rcchain/netlist.hpp"

namespace rcchain {

namespace {

std::vector<std::string> split_args(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == ',' || c == '\r' || c == '\n') {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<double> numeric_args(std::string_view inner, std::size_t min_count, std::size_t max_count,
                                 std::string_view fn) {
    const auto toks = split_args(inner);
    if (toks.size() < min_count || toks.size() > max_count)
        throw PreconditionError(std::string(fn) + " expects " + std::to_string(min_count) + ".." +
                                std::to_string(max_count) + " arguments, got " +
                                std::to_string(toks.size()));
    std::vector<double> v;
    for (const auto& t : toks) v.push_back(require_spice_value(t, fn));
    return v;
}

}  // namespace

WaveformSpec parse_waveform(std::string_view text) {
    std::size_t b = 0;
    while (b < text.size() && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    text.remove_prefix(b);

    const auto open = text.find('(');
    if (open == std::string_view::npos) {
        // "DC 1", "dc 1" or a bare number.
        auto toks = split_args(text);
        if (!toks.empty() && to_lower(toks.front()) == "dc") toks.erase(toks.begin());
        if (toks.size() != 1) throw PreconditionError("unrecognized source description '" + std::string(text) + "'");
        return DcWave{require_spice_value(toks.front(), "DC level")};
    }
    const auto close = text.find(')', open);
    if (close == std::string_view::npos) throw PreconditionError("missing ')' in '" + std::string(text) + "'");

    std::string name = to_lower(text.substr(0, open));
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back()))) name.pop_back();
    const std::string_view inner = text.substr(open + 1, close - open - 1);

    WaveformSpec spec;
    if (name == "sin") {
        const auto a = numeric_args(inner, 3, 6, "SIN");
        SinWave w;
        w.vo = a[0];
        w.va = a[1];
        w.freq = a[2];
        if (a.size() > 3) w.td = a[3];
        if (a.size() > 4) w.theta = a[4];
        if (a.size() > 5) w.phase = a[5];
        spec = w;
    } else if (name == "pulse") {
        const auto a = numeric_args(inner, 2, 7, "PULSE");
        PulseWave w;
        w.v1 = a[0];
        w.v2 = a[1];
        w.td = a.size() > 2 ? a[2] : 0.0;
        w.tr = a.size() > 3 ? a[3] : 0.0;
        w.tf = a.size() > 4 ? a[4] : 0.0;
        w.pw = a.size() > 5 ? a[5] : std::numeric_limits<double>::infinity();
        w.per = a.size() > 6 ? a[6] : std::numeric_limits<double>::infinity();
        spec = w;
    } else if (name == "exp") {
        const auto a = numeric_args(inner, 6, 6, "EXP");
        spec = ExpWave{a[0], a[1], a[2], a[3], a[4], a[5]};
    } else {
        throw PreconditionError("unsupported source function '" + name + "'");
    }
    validate_waveform(spec);
    return spec;
}

void validate_waveform(const WaveformSpec& spec) {
    auto nonneg = [](double v, const char* what) {
        if (!(v >= 0.0)) throw PreconditionError(std::string(what) + " must be >= 0");
    };
    std::visit(
        [&](const auto& w) {
            using T = std::decay_t<decltype(w)>;
            if constexpr (std::is_same_v<T, SinWave>) {
                if (!(w.freq > 0.0)) throw PreconditionError("SIN frequency must be > 0");
                nonneg(w.td, "SIN td");
                nonneg(w.theta, "SIN theta");
            } else if constexpr (std::is_same_v<T, PulseWave>) {
                nonneg(w.td, "PULSE td");
                nonneg(w.tr, "PULSE tr");
                nonneg(w.tf, "PULSE tf");
                nonneg(w.pw, "PULSE pw");
                nonneg(w.per, "PULSE per");
            } else if constexpr (std::is_same_v<T, ExpWave>) {
                nonneg(w.td1, "EXP td1");
                nonneg(w.td2, "EXP td2");
                if (!(w.tau1 > 0.0) || !(w.tau2 > 0.0)) throw PreconditionError("EXP time constants must be > 0");
            }
        },
        spec);
}

std::string format_waveform(const WaveformSpec& spec) {
    auto join = [](const char* fn, std::initializer_list<double> args) {
        std::string s = fn;
        s += '(';
        bool first = true;
        for (double a : args) {
            if (!first) s += ' ';
            s += format_value(a);
            first = false;
        }
        s += ')';
        return s;
    };
    return std::visit(
        [&](const auto& w) -> std::string {
            using T = std::decay_t<decltype(w)>;
            if constexpr (std::is_same_v<T, SinWave>)
                return join("SIN", {w.vo, w.va, w.freq, w.td, w.theta, w.phase});
            else if constexpr (std::is_same_v<T, PulseWave>)
                return join("PULSE", {w.v1, w.v2, w.td, w.tr, w.tf, w.pw, w.per});
            else if constexpr (std::is_same_v<T, ExpWave>)
                return join("EXP", {w.v1, w.v2, w.td1, w.tau1, w.td2, w.tau2});
            else
                return "DC " + format_value(w.level);
        },
        spec);
}

std::string waveform_family(const WaveformSpec& spec) {
    static constexpr const char* kNames[] = {"sin", "pulse", "exp", "dc"};
    return kNames[spec.index()];
}

double eval_waveform(const WaveformSpec& spec, double t) {
    return std::visit(
        [t](const auto& w) -> double {
            using T = std::decay_t<decltype(w)>;
            if constexpr (std::is_same_v<T, SinWave>) {
                if (t < w.td) return w.vo;
                const double dt = t - w.td;
                return w.vo + w.va * std::exp(-dt * w.theta) *
                                  std::sin(2.0 * std::numbers::pi * w.freq * dt + w.phase * std::numbers::pi / 180.0);
            } else if constexpr (std::is_same_v<T, PulseWave>) {
                if (t < w.td) return w.v1;
                double tt = t - w.td;
                if (std::isfinite(w.per) && w.per > 0.0) tt = std::fmod(tt, w.per);
                if (tt < w.tr) return w.v1 + (w.v2 - w.v1) * tt / w.tr;
                tt -= w.tr;
                if (tt < w.pw) return w.v2;
                tt -= w.pw;
                if (tt < w.tf) return w.v2 + (w.v1 - w.v2) * tt / w.tf;
                return w.v1;
            } else if constexpr (std::is_same_v<T, ExpWave>) {
                if (t < w.td1) return w.v1;
                double v = w.v1 + (w.v2 - w.v1) * (1.0 - std::exp(-(t - w.td1) / w.tau1));
                if (t >= w.td2) v += (w.v1 - w.v2) * (1.0 - std::exp(-(t - w.td2) / w.tau2));
                return v;
            } else {
                return w.level;
            }
        },
        spec);
}

}  // namespace rcchain
