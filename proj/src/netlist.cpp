#include "rcchain/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rcchain/error.hpp"

namespace rcchain {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

bool istarts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

// Removes ';' comments and '$' comments preceded by whitespace.
std::string_view strip_inline_comment(std::string_view s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == ';') return s.substr(0, i);
        if (s[i] == '$' && i > 0 && is_space(s[i - 1])) return s.substr(0, i);
    }
    return s;
}

std::vector<std::string> split_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && !is_space(s[j])) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

struct LogicalLine {
    std::string raw;      // physical lines joined with '\n'
    std::string content;  // continuation markers replaced by blanks
    std::size_t line = 0;
};

int magnitude_exponent(std::string_view suffix, bool& ok) {
    ok = true;
    if (suffix.empty()) return 0;
    if (istarts_with(suffix, "meg")) return 6;
    switch (std::tolower(static_cast<unsigned char>(suffix.front()))) {
        case 'f': return -15;
        case 'p': return -12;
        case 'n': return -9;
        case 'u': return -6;
        case 'm': return -3;
        case 'k': return 3;
        case 'g': return 9;
        case 't': return 12;
        default: break;
    }
    // Unit letters without a magnitude ("1V", "1s") are accepted; anything
    // else after the number is not.
    ok = std::all_of(suffix.begin(), suffix.end(),
                     [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; });
    return 0;
}

Element parse_two_terminal(ElementKind kind, const std::vector<std::string>& tok,
                           std::size_t line) {
    const char* what = kind == ElementKind::Resistor ? "resistor" : "capacitor";
    if (tok.size() < 4)
        throw ParseError(line, std::string(what) + " " + tok[0] +
                                   " needs two nodes and a value");
    Element e;
    e.kind = kind;
    e.name = tok[0];
    e.nodes = {to_lower(tok[1]), to_lower(tok[2])};
    std::string_view value_tok = tok[3];
    if (auto eq = value_tok.find('='); eq != std::string_view::npos) {
        const auto key = to_lower(value_tok.substr(0, eq));
        if (key != "r" && key != "c" && key != "value")
            throw ParseError(line, "unexpected parameter '" + tok[3] + "' in place of a value");
        value_tok.remove_prefix(eq + 1);
    }
    const auto v = parse_spice_value(value_tok);
    if (!v || !std::isfinite(*v))
        throw ParseError(line, std::string(what) + " " + tok[0] + ": non-numeric value '" +
                                   std::string(value_tok) + "'");
    if (kind == ElementKind::Resistor ? !(*v > 0.0) : !(*v >= 0.0))
        throw ParseError(line, std::string(what) + " " + tok[0] + ": value out of range");
    e.value = *v;
    for (std::size_t i = 4; i < tok.size(); ++i) {
        if (tok[i].find('=') == std::string::npos)
            throw ParseError(line, std::string(what) + " " + tok[0] + ": unexpected token '" +
                                       tok[i] + "' (wrong node count?)");
        e.params.push_back(tok[i]);
    }
    return e;
}

// Locates "SIN(", "PULSE(" or "EXP(" (blanks allowed before the parenthesis)
// and returns the text up to the matching ')'.
std::optional<std::string_view> find_transient_function(std::string_view s) {
    static constexpr std::string_view kNames[] = {"sin", "pulse", "exp"};
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i > 0 && !is_space(s[i - 1])) continue;
        for (std::string_view name : kNames) {
            if (!istarts_with(s.substr(i), name)) continue;
            std::size_t j = i + name.size();
            while (j < s.size() && is_space(s[j])) ++j;
            if (j >= s.size() || s[j] != '(') continue;
            const auto close = s.find(')', j);
            if (close == std::string_view::npos) return s.substr(i);
            return s.substr(i, close - i + 1);
        }
    }
    return std::nullopt;
}

Element parse_voltage_source(const std::vector<std::string>& tok, std::string_view content,
                             std::size_t line) {
    if (tok.size() < 3)
        throw ParseError(line, "voltage source " + tok[0] + " needs two nodes");
    Element e;
    e.kind = ElementKind::VoltageSource;
    e.name = tok[0];
    e.nodes = {to_lower(tok[1]), to_lower(tok[2])};

    // Text after the two node tokens.
    std::string_view rest = content;
    for (int k = 0; k < 3; ++k) {
        rest = trim(rest);
        std::size_t j = 0;
        while (j < rest.size() && !is_space(rest[j])) ++j;
        rest.remove_prefix(j);
    }
    rest = trim(rest);

    try {
        if (auto fn = find_transient_function(rest)) {
            e.source_spec = parse_waveform(*fn);
            // A leading "DC x" is still the operating point value.
            const auto head = split_tokens(rest.substr(0, static_cast<std::size_t>(fn->data() - rest.data())));
            if (head.size() >= 2 && iequals(head[0], "dc"))
                e.value = require_spice_value(head[1], "DC value");
            return e;
        }
        const auto rt = split_tokens(rest);
        if (rt.empty()) {
            e.source_spec = DcWave{0.0};
            e.value = 0.0;
            return e;
        }
        std::size_t idx = 0;
        if (iequals(rt[0], "dc")) {
            if (rt.size() < 2) throw PreconditionError("DC keyword without a value");
            idx = 1;
        }
        static constexpr std::string_view kOpaque[] = {"ac", "pwl", "sffm", "am", "trnoise",
                                                       "trrandom", "distof1", "distof2"};
        const std::string first = to_lower(rt[idx]);
        const bool opaque =
            idx == 0 && std::any_of(std::begin(kOpaque), std::end(kOpaque), [&](std::string_view k) {
                return first.rfind(k, 0) == 0;
            });
        if (opaque) return e;
        const double level = require_spice_value(rt[idx], "source value");
        e.source_spec = DcWave{level};
        e.value = level;
    } catch (const PreconditionError& ex) {
        throw ParseError(line, "voltage source " + tok[0] + ": " + ex.what());
    }
    return e;
}

Element parse_element(const LogicalLine& ll) {
    const std::string_view content = strip_inline_comment(ll.content);
    const auto tok = split_tokens(content);
    Element e;
    switch (std::tolower(static_cast<unsigned char>(tok[0][0]))) {
        case 'r': e = parse_two_terminal(ElementKind::Resistor, tok, ll.line); break;
        case 'c': e = parse_two_terminal(ElementKind::Capacitor, tok, ll.line); break;
        case 'v': e = parse_voltage_source(tok, content, ll.line); break;
        case 'm':
            e.kind = ElementKind::Mosfet;
            e.name = tok[0];
            for (std::size_t i = 1; i < tok.size() && i <= 4; ++i) e.nodes.push_back(to_lower(tok[i]));
            break;
        default:
            e.kind = ElementKind::Other;
            e.name = tok[0];
            for (std::size_t i = 1; i < tok.size(); ++i) {
                const auto& t = tok[i];
                if (t.find_first_of("=()") == std::string::npos) e.nodes.push_back(to_lower(t));
            }
            break;
    }
    e.raw = ll.raw;
    e.line = ll.line;
    return e;
}

bool is_identifier_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '.' || c == '#' ||
           c == '[' || c == ']' || c == ':' || c == '<' || c == '>' || c == '@';
}

struct VoltageRef {
    std::size_t begin;  // offset of the node name
    std::size_t end;
};

// Finds node names inside V(a), V(a,b), VM(a), VDB(a) ... references.
std::vector<VoltageRef> find_voltage_refs(std::string_view s) {
    static constexpr std::string_view kFns[] = {"vdb", "vm", "vp", "vr", "vi", "v"};
    std::vector<VoltageRef> refs;
    std::size_t i = 0;
    while (i < s.size()) {
        if (i > 0 && is_identifier_char(s[i - 1])) {
            ++i;
            continue;
        }
        std::size_t fn_len = 0;
        for (std::string_view fn : kFns) {
            if (istarts_with(s.substr(i), fn)) {
                std::size_t j = i + fn.size();
                while (j < s.size() && is_space(s[j])) ++j;
                if (j < s.size() && s[j] == '(') {
                    fn_len = j - i + 1;
                    break;
                }
            }
        }
        if (fn_len == 0) {
            ++i;
            continue;
        }
        std::size_t j = i + fn_len;
        const auto close = s.find(')', j);
        if (close == std::string_view::npos) break;
        // One or two comma-separated node names.
        while (j < close) {
            while (j < close && (is_space(s[j]) || s[j] == ',')) ++j;
            std::size_t k = j;
            while (k < close && !is_space(s[k]) && s[k] != ',') ++k;
            if (k > j) refs.push_back({j, k});
            j = k;
        }
        i = close + 1;
    }
    return refs;
}

}  // namespace

std::string_view to_string(ElementKind kind) {
    switch (kind) {
        case ElementKind::Resistor: return "Resistor";
        case ElementKind::Capacitor: return "Capacitor";
        case ElementKind::VoltageSource: return "VoltageSource";
        case ElementKind::Mosfet: return "Mosfet";
        case ElementKind::Other: return "Other";
    }
    return "Other";
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

void Netlist::add_element(Element e) {
    layout_.push_back({true, elements_.size()});
    elements_.push_back(std::move(e));
}

void Netlist::add_directive(Directive d) {
    layout_.push_back({false, directives_.size()});
    directives_.push_back(std::move(d));
}

std::optional<std::size_t> Netlist::find_element(std::string_view name) const {
    for (std::size_t i = 0; i < elements_.size(); ++i)
        if (iequals(elements_[i].name, name)) return i;
    return std::nullopt;
}

std::set<std::string> Netlist::nodes() const {
    std::set<std::string> out;
    for (const auto& e : elements_) {
        if (e.kind == ElementKind::Other) continue;
        for (const auto& n : e.nodes)
            if (n != kGround) out.insert(n);
    }
    return out;
}

std::optional<double> parse_spice_value(std::string_view token) {
    token = trim(token);
    if (token.empty()) return std::nullopt;

    // Split "<mantissa>[e<exp>]<suffix>".
    std::size_t i = 0;
    if (token[i] == '+' || token[i] == '-') ++i;
    bool any_digit = false;
    while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) ++i, any_digit = true;
    if (i < token.size() && token[i] == '.') {
        ++i;
        while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) ++i, any_digit = true;
    }
    if (!any_digit) return std::nullopt;
    const std::string_view mantissa = token.substr(0, i);

    long exponent = 0;
    if (i < token.size() && (token[i] == 'e' || token[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < token.size() && (token[j] == '+' || token[j] == '-')) ++j;
        const std::size_t exp_digits = j;
        while (j < token.size() && std::isdigit(static_cast<unsigned char>(token[j]))) ++j;
        if (j > exp_digits) {
            long parsed = 0;
            const char* b = token.data() + i + 1;
            if (*b == '+') ++b;
            std::from_chars(b, token.data() + j, parsed);
            exponent = parsed;
            i = j;
        }
    }

    bool ok = true;
    exponent += magnitude_exponent(token.substr(i), ok);
    if (!ok) return std::nullopt;

    const std::string text = std::string(mantissa) + "e" + std::to_string(exponent);
    double v = 0.0;
    const char* b = text.data();
    if (*b == '+') ++b;
    const auto res = std::from_chars(b, text.data() + text.size(), v);
    if (res.ec != std::errc() && res.ec != std::errc::result_out_of_range) return std::nullopt;
    return v;
}

double require_spice_value(std::string_view token, std::string_view what) {
    const auto v = parse_spice_value(token);
    if (!v) throw PreconditionError(std::string(what) + ": non-numeric value '" + std::string(token) + "'");
    return *v;
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Netlist parse_netlist(std::string_view text) {
    Netlist nl;
    if (text.empty()) {
        nl.trailing_newline = false;
        return nl;
    }
    nl.trailing_newline = text.back() == '\n';
    if (nl.trailing_newline) text.remove_suffix(1);

    std::vector<std::string_view> physical;
    for (std::size_t pos = 0;;) {
        const auto nlpos = text.find('\n', pos);
        physical.push_back(text.substr(pos, nlpos == std::string_view::npos ? nlpos : nlpos - pos));
        if (nlpos == std::string_view::npos) break;
        pos = nlpos + 1;
    }
    nl.title = std::string(physical.front());

    std::vector<LogicalLine> logical;
    for (std::size_t i = 1; i < physical.size(); ++i) {
        const std::string_view p = physical[i];
        const std::string_view t = trim(p);
        if (!t.empty() && t.front() == '+' && !logical.empty()) {
            auto& prev = logical.back();
            prev.raw += '\n';
            prev.raw += p;
            std::string cont(p);
            cont[cont.find('+')] = ' ';
            prev.content += ' ';
            prev.content += cont;
            continue;
        }
        logical.push_back({std::string(p), std::string(p), i + 1});
    }

    std::map<std::string, std::size_t> seen;
    int control_depth = 0;
    int subckt_depth = 0;
    for (const auto& ll : logical) {
        const std::string_view t = trim(ll.content);
        const auto first = t.empty() ? std::string() : to_lower(split_tokens(t).front());
        if (first == ".control") ++control_depth;
        if (first == ".subckt") ++subckt_depth;

        const bool directive = t.empty() || t.front() == '*' || t.front() == '.' ||
                               control_depth > 0 || subckt_depth > 0;
        if (directive) {
            nl.add_directive({ll.raw, ll.line});
        } else {
            Element e = parse_element(ll);
            const auto key = to_lower(e.name);
            if (auto it = seen.find(key); it != seen.end())
                throw ParseError(ll.line, "duplicate element name " + e.name + " (first defined on line " +
                                              std::to_string(it->second) + ")");
            seen.emplace(key, ll.line);
            nl.add_element(std::move(e));
        }

        if (first == ".endc" && control_depth > 0) --control_depth;
        if (first == ".ends" && subckt_depth > 0) --subckt_depth;
    }
    return nl;
}

std::string canonical_card(const Element& e) {
    std::string out = e.name;
    for (const auto& n : e.nodes) {
        out += ' ';
        out += n;
    }
    if (e.kind == ElementKind::VoltageSource && e.source_spec) {
        out += ' ';
        out += format_waveform(*e.source_spec);
    } else if (e.value) {
        out += ' ';
        out += format_value(*e.value);
    }
    for (const auto& p : e.params) {
        out += ' ';
        out += p;
    }
    return out;
}

std::string emit_netlist(const Netlist& netlist) {
    std::string out = netlist.title;
    netlist.for_each_in_order(
        [&](const Element& e) {
            out += '\n';
            out += e.modified ? canonical_card(e) : e.raw;
        },
        [&](const Directive& d) {
            out += '\n';
            out += d.raw;
        });
    if (netlist.trailing_newline) out += '\n';
    return out;
}

Netlist read_netlist_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_netlist(ss.str());
}

void write_netlist_file(const Netlist& netlist, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << emit_netlist(netlist);
    if (!out) throw Error("write failed: " + path);
}

bool is_output_directive(std::string_view raw) {
    static constexpr std::string_view kCommands[] = {
        ".print", ".plot", ".probe", ".save",  ".meas", ".measure", ".four", "wrdata",  "wrs2p",
        "print",  "plot",  "write",  "save",   "meas",  "measure",  "let",   "gnuplot", "asciiplot"};
    const auto t = trim(raw);
    if (t.empty() || t.front() == '*') return false;
    const auto first = to_lower(split_tokens(t).front());
    return std::any_of(std::begin(kCommands), std::end(kCommands),
                       [&](std::string_view c) { return first == c; });
}

std::vector<std::string> output_nodes(const Directive& d) {
    std::vector<std::string> out;
    if (!is_output_directive(d.raw)) return out;
    for (const auto& r : find_voltage_refs(d.raw))
        out.push_back(to_lower(std::string_view(d.raw).substr(r.begin, r.end - r.begin)));
    return out;
}

Netlist remap_output_nodes(const Netlist& netlist, const std::map<std::string, std::string>& mapping,
                           const std::set<std::string>& deleted) {
    Netlist out = netlist;
    std::set<std::string> unmapped;
    for (auto& d : out.directives()) {
        if (!is_output_directive(d.raw)) continue;
        const auto refs = find_voltage_refs(d.raw);
        std::string rewritten;
        std::size_t cursor = 0;
        for (const auto& r : refs) {
            const auto node = to_lower(std::string_view(d.raw).substr(r.begin, r.end - r.begin));
            rewritten.append(d.raw, cursor, r.begin - cursor);
            if (auto it = mapping.find(node); it != mapping.end()) {
                rewritten += it->second;
            } else {
                if (deleted.count(node)) unmapped.insert(node);
                rewritten.append(d.raw, r.begin, r.end - r.begin);
            }
            cursor = r.end;
        }
        rewritten.append(d.raw, cursor, std::string::npos);
        d.raw = std::move(rewritten);
    }
    if (!unmapped.empty()) {
        std::string list;
        for (const auto& n : unmapped) list += (list.empty() ? "" : ", ") + n;
        throw Error("output directives reference deleted nodes without a mapping: " + list);
    }
    return out;
}

Netlist remap_output_nodes(const Netlist& netlist, const std::map<std::string, std::string>& mapping) {
    std::set<std::string> deleted;
    for (const auto& kv : mapping) deleted.insert(kv.first);
    return remap_output_nodes(netlist, mapping, deleted);
}

}  // namespace rcchain
