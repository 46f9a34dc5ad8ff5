#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rcchain/waveform.hpp"

namespace rcchain {

/// Ground node name.
inline constexpr std::string_view kGround = "0";

enum class ElementKind { Resistor, Capacitor, VoltageSource, Mosfet, Other };

std::string_view to_string(ElementKind kind);

struct Element {
    ElementKind kind = ElementKind::Other;
    std::string name;
    /// Lowercased node names. For Mosfet: drain, gate, source, bulk. For Other
    /// a best-effort token list, used only to keep those nodes out of chains.
    std::vector<std::string> nodes;
    /// Ohms for R, farads for C, DC level for a plain voltage source.
    std::optional<double> value;
    std::optional<WaveformSpec> source_spec;
    /// Trailing tokens after the value of an R/C card (e.g. "tc1=0").
    std::vector<std::string> params;
    /// Original text, continuation lines included, without the final newline.
    std::string raw;
    /// Set when the element was changed or synthesized; emit then writes the
    /// canonical form instead of `raw`.
    bool modified = false;
    /// 1-based source line, 0 for synthesized elements.
    std::size_t line = 0;
};

struct Directive {
    std::string raw;
    std::size_t line = 0;
};

/// Parsed netlist. Elements and directives are kept in separate lists; the
/// interleaving of the source file is recorded so that emit() reproduces it.
class Netlist {
public:
    std::string title;

    const std::vector<Element>& elements() const { return elements_; }
    const std::vector<Directive>& directives() const { return directives_; }
    std::vector<Element>& elements() { return elements_; }
    std::vector<Directive>& directives() { return directives_; }

    void add_element(Element e);
    void add_directive(Directive d);

    /// Calls `on_element` / `on_directive` in source order.
    template <class OnElement, class OnDirective>
    void for_each_in_order(OnElement&& on_element, OnDirective&& on_directive) const {
        for (const Slot& s : layout_) {
            if (s.is_element)
                on_element(elements_[s.index]);
            else
                on_directive(directives_[s.index]);
        }
    }

    /// Index into elements() of the element called `name` (case-insensitive).
    std::optional<std::size_t> find_element(std::string_view name) const;

    /// Distinct non-ground node names referenced by elements.
    std::set<std::string> nodes() const;

    bool trailing_newline = true;

private:
    struct Slot {
        bool is_element;
        std::size_t index;
    };
    std::vector<Element> elements_;
    std::vector<Directive> directives_;
    std::vector<Slot> layout_;
};

/// Decodes a SPICE number: "1k", "0.953316", "1f", "10MEG", "2PS", "1e-15".
/// Suffixes f p n u m k meg g t are case-insensitive; trailing unit letters
/// are ignored. The suffix is folded into the decimal exponent before
/// conversion, so "1k" and "1000.0" give the same double.
std::optional<double> parse_spice_value(std::string_view token);

/// As parse_spice_value but throws PreconditionError naming `what`.
double require_spice_value(std::string_view token, std::string_view what);

/// Formats a value with 17 significant digits.
std::string format_value(double v);

Netlist parse_netlist(std::string_view text);
std::string emit_netlist(const Netlist& netlist);

Netlist read_netlist_file(const std::string& path);
void write_netlist_file(const Netlist& netlist, const std::string& path);

/// Canonical card text "NAME node1 node2 VALUE" for R/C elements.
std::string canonical_card(const Element& e);

/// True for directives that request output (.print/.plot/.probe/.save/.meas,
/// wrdata and the control-block print/plot/write/meas commands).
bool is_output_directive(std::string_view raw);

/// Node names referenced as V(x) or V(x,y) in an output directive, in order.
std::vector<std::string> output_nodes(const Directive& d);

/// Rewrites V(node) references in output directives. `deleted` lists the
/// nodes removed from the circuit; any reference to one of them must have an
/// entry in `mapping`, otherwise an Error naming the nodes is thrown.
Netlist remap_output_nodes(const Netlist& netlist,
                           const std::map<std::string, std::string>& mapping,
                           const std::set<std::string>& deleted);

/// Overload with deleted = keys of mapping.
Netlist remap_output_nodes(const Netlist& netlist,
                           const std::map<std::string, std::string>& mapping);

std::string to_lower(std::string_view s);

}  // namespace rcchain
