#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "beam.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "pitchfork.hpp"
#include "singularity.hpp"
#include "sl_reduced.hpp"

namespace ffnet::cli {

using json = nlohmann::json;

// ---------------------------------------------------------------------------------------------
// Text formatting and ranges

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

inline double parse_number(std::string_view s, std::string_view what) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size() || !std::isfinite(v))
        throw error(errc::config, std::string(what) + ": not a finite number: '" + std::string(s) + "'");
    return v;
}

inline long long parse_integer(std::string_view s, std::string_view what) {
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw error(errc::config, std::string(what) + ": not an integer: '" + std::string(s) + "'");
    return v;
}

/// start:end:count, sampled with both ends included.
struct Range {
    double lo = 0.0;
    double hi = 1.0;
    int n = 2;

    double at(int i) const { return i == n - 1 ? hi : lo + (hi - lo) * i / (n - 1); }
    std::vector<double> values() const {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = at(i);
        return v;
    }
    /// Geometric spacing between the same endpoints; both must be positive.
    std::vector<double> geometric() const {
        if (!(lo > 0.0) || !(hi > 0.0)) throw error(errc::config, "geometric range needs positive endpoints");
        std::vector<double> v(static_cast<std::size_t>(n));
        const double a = std::log(lo), b = std::log(hi);
        for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i == 0 ? lo : i == n - 1 ? hi : std::exp(a + (b - a) * i / (n - 1));
        return v;
    }
    std::string text() const { return format_number(lo) + ":" + format_number(hi) + ":" + std::to_string(n); }
};

inline Range parse_range(std::string_view s, std::string_view what) {
    const auto c1 = s.find(':');
    const auto c2 = c1 == std::string_view::npos ? c1 : s.find(':', c1 + 1);
    if (c2 == std::string_view::npos || s.find(':', c2 + 1) != std::string_view::npos)
        throw error(errc::config, std::string(what) + ": expected start:end:count, got '" + std::string(s) + "'");
    Range r;
    r.lo = parse_number(s.substr(0, c1), what);
    r.hi = parse_number(s.substr(c1 + 1, c2 - c1 - 1), what);
    const long long n = parse_integer(s.substr(c2 + 1), what);
    if (n < 2) throw error(errc::config, std::string(what) + ": empty range, count must be at least 2");
    if (n > 100'000'000) throw error(errc::config, std::string(what) + ": count too large");
    if (r.lo == r.hi) throw error(errc::config, std::string(what) + ": empty range, start equals end");
    r.n = static_cast<int>(n);
    return r;
}

// ---------------------------------------------------------------------------------------------
// CSV schemas

struct Schema {
    std::string name;
    std::vector<std::string> columns; // fixed leading columns
    bool variadic = false;            // further columns may follow the fixed ones
};

/// Frozen registry of every dataset layout the CLI writes.
inline const std::vector<Schema>& csv_schemas() {
    static const std::vector<Schema> reg{
        {"phase-diagram", {"sigma_t", "mu_t", "region_tag", "n_equilibria", "n_stable"}, false},
        {"phase-diagram-pitchfork", {"eps", "mu", "region_tag", "n_equilibria", "n_stable"}, false},
        {"bifurcation", {"param", "branch_id", "amplitude", "stable", "event"}, false},
        {"basins", {"x0", "y0", "sink_index"}, false},
        {"loci", {"curve_id", "p1", "p2", "aux"}, true},
        {"trajectory", {"t"}, true},
        {"scaling", {"mu", "amplitude", "log_mu", "log_amp"}, false},
        {"jump", {"mu", "x_sign", "delta_y", "y_initial", "y_final"}, false},
        {"beam", {"phi", "magnitude"}, false},
    };
    return reg;
}

inline const Schema& schema(std::string_view name) {
    for (const auto& s : csv_schemas())
        if (s.name == name) return s;
    throw error(errc::internal, "no schema named " + std::string(name));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto p = s.find(sep, start);
        out.emplace_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
        if (p == std::string_view::npos) return out;
        start = p + 1;
    }
}

/// Checks header, field count of every row and LF-only line endings. Returns an empty string when valid.
inline std::string validate_csv(const Schema& sch, std::string_view text) {
    if (text.find('\r') != std::string_view::npos) return "carriage return found";
    if (text.empty() || text.back() != '\n') return "missing final newline";
    const auto lines = split(text.substr(0, text.size() - 1), '\n');
    const auto header = split(lines.front(), ',');
    if (header.size() < sch.columns.size() || (!sch.variadic && header.size() != sch.columns.size()))
        return "wrong column count in header";
    if (!std::equal(sch.columns.begin(), sch.columns.end(), header.begin())) return "header does not match schema";
    for (std::size_t i = 1; i < lines.size(); ++i)
        if (split(lines[i], ',').size() != header.size()) return "row " + std::to_string(i) + " has wrong field count";
    return {};
}

class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) { line(header); }

    template <class... F>
    void row(const F&... fields) {
        static_assert(sizeof...(F) > 0);
        if (sizeof...(F) != columns_) throw error(errc::internal, "csv row width mismatch");
        bool first = true;
        ((put(fields, first)), ...);
        text_ += '\n';
        ++rows_;
    }
    void raw_row(const std::vector<std::string>& fields) {
        if (fields.size() != columns_) throw error(errc::internal, "csv row width mismatch");
        line(fields);
        ++rows_;
    }

    const std::string& text() const { return text_; }
    std::size_t rows() const { return rows_; }

    static std::string field(double v) { return format_number(v); }
    static std::string field(int v) { return std::to_string(v); }
    static std::string field(bool v) { return v ? "1" : "0"; }
    static std::string field(const std::string& v) { return v; }
    static std::string field(const char* v) { return v; }

private:
    void line(const std::vector<std::string>& f) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (i) text_ += ',';
            text_ += f[i];
        }
        text_ += '\n';
    }
    template <class F>
    void put(const F& v, bool& first) {
        if (!first) text_ += ',';
        first = false;
        text_ += field(v);
    }

    std::size_t columns_;
    std::size_t rows_ = 0;
    std::string text_;
};

// ---------------------------------------------------------------------------------------------
// Command table

enum class OptKind { Number, Integer, Text, Flag, RangeSpec, RangeOrAuto, NumberList };

struct OptionDef {
    std::string name;
    OptKind kind = OptKind::Number;
    json fallback;
    std::string help;
    std::vector<std::string> choices; // Text only; empty = free text
};

struct CommandDef {
    std::string name;
    std::string help;
    std::vector<OptionDef> options;
};

inline const std::vector<CommandDef>& commands() {
    using K = OptKind;
    const std::string half_pi = format_number(std::numbers::pi / 2);
    static const std::vector<CommandDef> table{
        {"phase-diagram",
         "region of every grid point: reduced oscillator pair over (sigma_t, mu_t) or pitchfork pair over (eps, mu)",
         {{"system", K::Text, "sl-reduced", "sl-reduced or pitchfork2", {"sl-reduced", "pitchfork2"}},
          {"gamma", K::Number, 0.0, "amplitude-dependent frequency shift (sl-reduced)", {}},
          {"sigma", K::RangeSpec, "-3:3:601", "reduced detuning axis (sl-reduced)", {}},
          {"mu", K::RangeSpec, "0.01:4:400", "reduced excitation axis, or mu for pitchfork2", {}},
          {"eps", K::RangeSpec, "-1:1:201", "inhomogeneity axis (pitchfork2)", {}},
          {"lambda", K::Number, 1.0, "coupling (pitchfork2)", {}}}},
        {"bifurcation",
         "second-cell amplitudes |u| of all phase-locked states across a detuning grid, folds marked SN",
         {{"mu", K::Number, 0.5, "excitation", {}},
          {"eps", K::Number, 0.0, "excitation mismatch", {}},
          {"lambda", K::Number, 1.0, "coupling", {}},
          {"gamma", K::Number, 0.0, "amplitude-dependent frequency shift", {}},
          {"sigma", K::RangeSpec, "-3:3:601", "detuning axis", {}}}},
        {"basins",
         "sink reached from every grid point of the pitchfork pair; -1 when none",
         {{"mu", K::Number, 0.05, "excitation", {}},
          {"eps", K::Number, 0.8, "excitation mismatch", {}},
          {"lambda", K::Number, 1.0, "coupling", {}},
          {"x", K::RangeOrAuto, "auto", "first-cell axis; auto spans +-(2 sqrt(mu) + 1) with 201 points", {}},
          {"y", K::RangeOrAuto, "auto", "second-cell axis; auto as for x", {}},
          {"dt", K::Number, BasinOptions{}.dt, "RK4 step", {}},
          {"t_max", K::Number, 0.0, "time limit per point; 0 picks max(5000, 40/mu)", {}}}},
        {"loci",
         "analytic curves: hysteresis, bifurcation, saddle-node, level-set, det-zero",
         {{"kind", K::Text, "hysteresis", "which curve",
           {"hysteresis", "bifurcation", "saddle-node", "level-set", "det-zero"}},
          {"mu", K::Number, 0.2, "excitation (hysteresis, bifurcation, saddle-node)", {}},
          {"gamma", K::Number, 0.0, "amplitude-dependent frequency shift (hysteresis, bifurcation, level-set)", {}},
          {"lambda", K::RangeSpec, "0.01:2:200", "coupling grid (hysteresis)", {}},
          {"eps", K::RangeSpec, "-1:1:401", "mismatch grid (bifurcation, saddle-node)", {}},
          {"x", K::Number, 0.5, "squared amplitude of the level set", {}},
          {"n", K::Integer, 400, "samples per segment (level-set, det-zero)", {}}}},
        {"simulate",
         "fixed-step RK4 trajectory of one system",
         {{"system", K::Text, "sl-full", "pitchfork2, pitchfork3, hopf3, sl-full or sl-reduced",
           {"pitchfork2", "pitchfork3", "hopf3", "sl-full", "sl-reduced"}},
          {"mu", K::Number, 0.5, "excitation; mu_t for sl-reduced", {}},
          {"eps", K::Number, 0.0, "excitation mismatch", {}},
          {"lambda", K::Number, 1.0, "coupling", {}},
          {"sigma", K::Number, 0.0, "detuning; sigma_t for sl-reduced", {}},
          {"gamma", K::Number, 0.0, "amplitude-dependent frequency shift", {}},
          {"omega", K::Number, 1.0, "natural frequency", {}},
          {"self_coupling", K::Flag, true, "hopf3: first cell feeds itself", {}},
          {"x0", K::NumberList, json::array(), "initial state, comma separated; empty = 0.1 in every component", {}},
          {"t_end", K::Number, 100.0, "final time", {}},
          {"dt", K::Number, 1e-2, "RK4 step", {}},
          {"stride", K::Integer, 10, "record every stride steps", {}}}},
        {"sweep",
         "one-parameter sweep of the oscillator pair: locked branches, HB/SN/TR events",
         {{"param", K::Text, "mu", "swept parameter", {"mu", "eps", "sigma", "lambda"}},
          {"range", K::RangeSpec, "-0.4:2:241", "values of the swept parameter", {}},
          {"mu", K::Number, 0.5, "excitation", {}},
          {"eps", K::Number, 0.2, "excitation mismatch", {}},
          {"sigma", K::Number, 0.98, "detuning", {}},
          {"lambda", K::Number, 1.0, "coupling", {}},
          {"gamma", K::Number, 0.0, "amplitude-dependent frequency shift", {}},
          {"omega", K::Number, 1.0, "natural frequency", {}}}},
        {"jump",
         "second-cell response of the pitchfork pair to a sudden switch of mu",
         {{"mode", K::Text, "pinned", "pinned first cell or fully coupled", {"pinned", "coupled"}},
          {"eps", K::Number, 0.1, "excitation mismatch", {}},
          {"lambda", K::Number, 1.0, "coupling", {}},
          {"mu", K::RangeSpec, "0.0005:0.01:10", "target mu values", {}},
          {"initial_sign", K::Integer, 1, "sign of the pre-jump second-cell rest state", {}}}},
        {"scaling",
         "settled amplitude of a driven cell against mu on a geometric grid, with log-log fit",
         {{"system", K::Text, "sl-full", "sl-full or hopf3", {"sl-full", "hopf3"}},
          {"mu", K::RangeSpec, "1e-06:0.001:8", "geometric mu grid", {}},
          {"eps", K::Number, 0.0, "excitation mismatch (sl-full)", {}},
          {"sigma", K::Number, 0.0, "detuning (sl-full)", {}},
          {"lambda", K::Number, 1.0, "coupling", {}},
          {"gamma", K::Number, 0.0, "amplitude-dependent frequency shift (sl-full)", {}},
          {"omega", K::Number, 1.0, "natural frequency", {}},
          {"self_coupling", K::Flag, true, "hopf3: first cell feeds itself", {}},
          {"cell", K::Integer, -1, "cell read out; -1 = last", {}},
          {"dt", K::Number, ScalingOptions{}.dt, "RK4 step", {}},
          {"window", K::Number, ScalingOptions{}.window, "averaging window", {}},
          {"t_max", K::Number, ScalingOptions{}.t_max, "time limit per point", {}}}},
        {"beam",
         "far-field magnitude of a phase-locked uniform linear array",
         {{"n", K::Integer, 20, "element count", {}},
          {"k", K::Number, 2.0 * std::numbers::pi, "wave number", {}},
          {"d", K::Number, 0.5, "element spacing", {}},
          {"theta", K::Number, 0.0, "phase-lock angle between neighbours", {}},
          {"phi", K::RangeSpec, "-" + half_pi + ":" + half_pi + ":721", "emission angles", {}}}},
    };
    return table;
}

/// Keys every command accepts in addition to its own.
inline const std::vector<OptionDef>& common_options() {
    static const std::vector<OptionDef> opts{
        {"out", OptKind::Text, "", "output CSV path; default <command>.csv", {}},
        {"seed", OptKind::Integer, 0, "seed for randomized utilities", {}},
        {"workers", OptKind::Integer, 0, "worker threads; 0 = hardware concurrency", {}},
    };
    return opts;
}

inline std::string command_list() {
    std::string s;
    for (const auto& c : commands()) s += (s.empty() ? "" : ", ") + c.name;
    return s;
}

inline const CommandDef& find_command(std::string_view name) {
    for (const auto& c : commands())
        if (c.name == name) return c;
    throw error(errc::config, "unknown command '" + std::string(name) + "'; valid commands: " + command_list());
}

inline std::string flag_name(const std::string& key) {
    std::string f = key;
    std::replace(f.begin(), f.end(), '_', '-');
    return f;
}

// ---------------------------------------------------------------------------------------------
// Config resolution: defaults, then the config file, then explicit flags

namespace detail {
inline json from_text(const OptionDef& o, const std::string& s) {
    const std::string what = "--" + flag_name(o.name);
    switch (o.kind) {
    case OptKind::Number: return parse_number(s, what);
    case OptKind::Integer: return parse_integer(s, what);
    case OptKind::Text: return s;
    case OptKind::Flag:
        if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
        if (s == "false" || s == "0" || s == "no" || s == "off") return false;
        throw error(errc::config, what + ": expected true or false");
    case OptKind::RangeSpec:
    case OptKind::RangeOrAuto: return s;
    case OptKind::NumberList: {
        json arr = json::array();
        if (s.empty()) return arr;
        for (const auto& part : split(s, ',')) arr.push_back(parse_number(part, what));
        return arr;
    }
    }
    return s;
}

/// Type-checks a value and brings it to canonical form.
inline json normalize(const OptionDef& o, const json& v) {
    const std::string what = o.name;
    auto bad = [&](const char* expect) { return error(errc::config, what + ": expected " + expect); };
    switch (o.kind) {
    case OptKind::Number:
        if (!v.is_number()) throw bad("a number");
        if (!std::isfinite(v.get<double>())) throw bad("a finite number");
        return v.get<double>();
    case OptKind::Integer:
        if (!v.is_number_integer()) throw bad("an integer");
        return v.get<long long>();
    case OptKind::Text: {
        if (!v.is_string()) throw bad("a string");
        const auto s = v.get<std::string>();
        if (!o.choices.empty() && std::find(o.choices.begin(), o.choices.end(), s) == o.choices.end()) {
            std::string list;
            for (const auto& c : o.choices) list += (list.empty() ? "" : ", ") + c;
            throw error(errc::config, what + ": '" + s + "' is not one of " + list);
        }
        return s;
    }
    case OptKind::Flag:
        if (!v.is_boolean()) throw bad("true or false");
        return v;
    case OptKind::RangeSpec:
        if (!v.is_string()) throw bad("a start:end:count string");
        return parse_range(v.get<std::string>(), what).text();
    case OptKind::RangeOrAuto:
        if (!v.is_string()) throw bad("a start:end:count string or auto");
        if (v.get<std::string>() == "auto") return v;
        return parse_range(v.get<std::string>(), what).text();
    case OptKind::NumberList: {
        if (!v.is_array()) throw bad("a list of numbers");
        json arr = json::array();
        for (const auto& e : v) {
            if (!e.is_number() || !std::isfinite(e.get<double>())) throw bad("a list of finite numbers");
            arr.push_back(e.get<double>());
        }
        return arr;
    }
    }
    return v;
}

inline const OptionDef* find_option(const CommandDef& cmd, const std::string& key) {
    for (const auto& o : cmd.options)
        if (o.name == key) return &o;
    for (const auto& o : common_options())
        if (o.name == key) return &o;
    return nullptr;
}
} // namespace detail

/// Full configuration of one run. `file` may be a bare config or a sidecar holding one under "config".
inline json resolve_config(const CommandDef& cmd, const json* file, const std::map<std::string, std::string>& flags) {
    json cfg = json::object();
    cfg["command"] = cmd.name;
    for (const auto& o : common_options()) cfg[o.name] = o.fallback;
    cfg["out"] = cmd.name + ".csv";
    for (const auto& o : cmd.options) cfg[o.name] = o.fallback;

    if (file) {
        const json& src = file->contains("config") && (*file)["config"].is_object() ? (*file)["config"] : *file;
        if (!src.is_object()) throw error(errc::config, "config file must hold a JSON object");
        for (const auto& [key, value] : src.items()) {
            if (key == "command") {
                if (value != cmd.name)
                    throw error(errc::config, "config file is for command " + value.dump() + ", not " + cmd.name);
                continue;
            }
            if (!detail::find_option(cmd, key))
                throw error(errc::config, "unknown key '" + key + "' for command " + cmd.name);
            cfg[key] = value;
        }
    }
    for (const auto& [key, text] : flags) {
        const OptionDef* o = detail::find_option(cmd, key);
        if (!o) throw error(errc::config, "unknown option --" + flag_name(key));
        cfg[key] = detail::from_text(*o, text);
    }
    for (const auto& o : common_options()) cfg[o.name] = detail::normalize(o, cfg[o.name]);
    for (const auto& o : cmd.options) cfg[o.name] = detail::normalize(o, cfg[o.name]);
    if (cfg["out"].get<std::string>().empty()) throw error(errc::config, "out: empty path");
    if (cfg["workers"].get<long long>() < 0) throw error(errc::config, "workers: must be non-negative");
    return cfg;
}

// ---------------------------------------------------------------------------------------------
// Execution (pure: builds the dataset in memory)

struct Dataset {
    std::string schema;
    std::string csv;
    json summary = json::object();
};

namespace detail {
inline double num(const json& c, const char* k) { return c.at(k).get<double>(); }
inline int integer(const json& c, const char* k) { return static_cast<int>(c.at(k).get<long long>()); }
inline std::string text(const json& c, const char* k) { return c.at(k).get<std::string>(); }
inline Range range(const json& c, const char* k) { return parse_range(text(c, k), k); }
inline unsigned workers(const json& c) { return static_cast<unsigned>(c.at("workers").get<long long>()); }

inline Dataset phase_diagram(const json& c) {
    const bool pitch = text(c, "system") == "pitchfork2";
    const Range ax = pitch ? range(c, "eps") : range(c, "sigma");
    const Range ay = range(c, "mu");
    const double gamma = num(c, "gamma"), lambda = num(c, "lambda");
    const std::size_t nx = static_cast<std::size_t>(ax.n);
    std::vector<std::string> lines(nx * static_cast<std::size_t>(ay.n));
    parallel_for(
        lines.size(),
        [&](std::size_t idx) {
            const double a = ax.at(static_cast<int>(idx % nx)), m = ay.at(static_cast<int>(idx / nx));
            std::string tag;
            int total = 0, stable = 0;
            if (pitch) {
                const PitchforkParams p{m, a, lambda};
                const auto eqs = equilibria(p);
                tag = to_string(classify_region(p).tag);
                total = static_cast<int>(eqs.size());
                stable = count_stable(eqs);
            } else {
                const auto r = classify_region_sl(reduced_plus(a, m, gamma));
                tag = to_string(r.tag);
                total = r.n_equilibria;
                stable = r.n_stable;
            }
            lines[idx] = format_number(a) + ',' + format_number(m) + ',' + tag + ',' + std::to_string(total) + ',' +
                         std::to_string(stable) + '\n';
        },
        workers(c));
    const auto& sch = schema(pitch ? "phase-diagram-pitchfork" : "phase-diagram");
    CsvWriter w(sch.columns);
    std::string csv = w.text();
    for (const auto& l : lines) csv += l;
    return {sch.name, std::move(csv), {{"rows", lines.size()}}};
}

inline Dataset bifurcation(const json& c) {
    const Range sg = range(c, "sigma");
    const auto bd = branch_diagram(num(c, "mu"), num(c, "eps"), num(c, "lambda"), num(c, "gamma"), sg.lo, sg.hi, sg.n);
    CsvWriter w(schema("bifurcation").columns);
    for (const auto& s : bd.slices)
        for (std::size_t k = 0; k < s.roots.size(); ++k) {
            const auto& r = s.roots[k];
            w.row(s.sigma, static_cast<int>(k), std::sqrt(r.x), r.stable, r.vertical_tangent ? "SN" : "");
        }
    return {"bifurcation", w.text(), {{"rows", w.rows()}, {"components", bd.components}, {"param_name", "sigma"}}};
}

inline Dataset basins(const json& c) {
    const PitchforkParams p{num(c, "mu"), num(c, "eps"), num(c, "lambda")};
    BasinGrid g = default_basin_grid(p.mu);
    if (text(c, "x") != "auto") {
        const Range r = range(c, "x");
        g.x_lo = r.lo, g.x_hi = r.hi, g.nx = r.n;
    }
    if (text(c, "y") != "auto") {
        const Range r = range(c, "y");
        g.y_lo = r.lo, g.y_hi = r.hi, g.ny = r.n;
    }
    const auto map = basin_map(p, g, {num(c, "dt"), num(c, "t_max"), workers(c)});
    CsvWriter w(schema("basins").columns);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) w.row(g.x_at(i), g.y_at(j), map.label(i, j));
    json eqs = json::array();
    for (const auto& e : map.equilibria) eqs.push_back({{"x", e.x}, {"y", e.y}, {"stability", to_string(e.stability)}});
    return {"basins", w.text(), {{"rows", w.rows()}, {"equilibria", eqs}, {"sinks", map.distinct_labels()}}};
}

inline Dataset loci(const json& c) {
    const std::string kind = text(c, "kind");
    const auto& sch = schema("loci");
    if (kind == "hysteresis" || kind == "bifurcation") {
        SingularSet set;
        if (kind == "hysteresis") {
            set = hysteresis_slice(num(c, "mu"), num(c, "gamma"), range(c, "lambda").values());
        } else {
            const Range e = range(c, "eps");
            set = bifurcation_set(num(c, "mu"), num(c, "gamma"), e.lo, e.hi, e.n);
        }
        CsvWriter w({"curve_id", "p1", "p2", "aux", "lambda"});
        json markers = json::array();
        for (const auto& b : set.branches) {
            if (b.axis_marker) {
                markers.push_back(kind + "_" + b.label + ": lambda = 0");
                continue;
            }
            const std::string id = kind + "_" + (b.label == "+" ? "plus" : b.label == "-" ? "minus" : b.label);
            for (const auto& pt : b.points) w.row(id, pt.eps, pt.sigma, pt.x, pt.lambda);
        }
        return {sch.name, w.text(),
                {{"rows", w.rows()},
                 {"columns", {{"p1", "eps"}, {"p2", "sigma"}, {"aux", "x"}, {"lambda", "lambda"}}},
                 {"omitted", set.omitted},
                 {"axis_markers", markers}}};
    }
    LocusCurve curve;
    if (kind == "saddle-node") {
        const Range e = range(c, "eps");
        curve = saddle_node_locus(num(c, "mu"), e.lo, e.hi, e.n);
    } else if (kind == "level-set") {
        curve = level_set_ellipse(num(c, "x"), num(c, "gamma"), integer(c, "n"));
    } else {
        if (integer(c, "n") < 2) throw error(errc::config, "n: need at least two points");
        curve = det_zero_locus(integer(c, "n"));
    }
    CsvWriter w(sch.columns);
    for (const auto& pt : curve.points) w.row(curve.id + "_" + std::to_string(pt.segment), pt.p1, pt.p2, pt.aux);
    return {sch.name, w.text(),
            {{"rows", w.rows()}, {"columns", {{"p1", curve.p1_name}, {"p2", curve.p2_name}, {"aux", curve.aux_name}}}}};
}

/// System named by "system"; mu is passed separately since scaling holds a range there.
inline SystemSpec system_from(const json& c, double mu) {
    const std::string sys = text(c, "system");
    const double lambda = num(c, "lambda");
    const double eps = c.contains("eps") ? num(c, "eps") : 0.0;
    const double sigma = c.contains("sigma") ? num(c, "sigma") : 0.0;
    const double gamma = c.contains("gamma") ? num(c, "gamma") : 0.0;
    const double omega = c.contains("omega") ? num(c, "omega") : 1.0;
    const bool self = c.contains("self_coupling") ? c.at("self_coupling").get<bool>() : true;
    if (sys == "pitchfork2") return SystemSpec::pitchfork2({mu, eps, lambda});
    if (sys == "pitchfork3") return SystemSpec::pitchfork3({mu, eps, lambda});
    if (sys == "hopf3") return SystemSpec::hopf3({mu, omega, lambda, self});
    if (sys == "sl-full") return SystemSpec::sl_full({mu, eps, omega, sigma, lambda, gamma});
    return SystemSpec::sl_reduced(reduced_plus(sigma, mu, gamma));
}

inline std::vector<std::string> component_names(SystemKind k) {
    switch (k) {
    case SystemKind::Pitchfork2: return {"x", "y"};
    case SystemKind::Pitchfork3: return {"x", "y", "z"};
    case SystemKind::Hopf3: return {"z1_re", "z1_im", "z2_re", "z2_im", "z3_re", "z3_im"};
    case SystemKind::SL2Full: return {"z1_re", "z1_im", "z2_re", "z2_im"};
    case SystemKind::SL2Reduced: return {"v_re", "v_im"};
    }
    return {};
}

inline Dataset simulate(const json& c) {
    const SystemSpec s = system_from(c, num(c, "mu"));
    std::vector<double> x0 = c.at("x0").get<std::vector<double>>();
    if (x0.empty()) x0.assign(s.dim(), 0.1);
    if (x0.size() != s.dim())
        throw error(errc::config, "x0: " + std::string(to_string(s.kind)) + " needs " + std::to_string(s.dim()) +
                                      " components");
    if (integer(c, "stride") < 1) throw error(errc::config, "stride: must be at least 1");
    const auto tr = integrate(s, x0, num(c, "t_end"), num(c, "dt"), static_cast<std::size_t>(integer(c, "stride")));
    std::vector<std::string> header{"t"};
    for (auto& n : component_names(s.kind)) header.push_back(n);
    CsvWriter w(header);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        std::vector<std::string> f{format_number(tr.times[i])};
        for (double v : tr.state(i)) f.push_back(format_number(v));
        w.raw_row(f);
    }
    return {"trajectory", w.text(), {{"rows", w.rows()}, {"system", to_string(s.kind)}}};
}

inline Dataset sweep(const json& c) {
    const std::string pname = text(c, "param");
    const SweepParam which = pname == "mu" ? SweepParam::Mu
                             : pname == "eps" ? SweepParam::Eps
                             : pname == "sigma" ? SweepParam::Sigma
                                                : SweepParam::Lambda;
    const Range r = range(c, "range");
    const SLParams base{num(c, "mu"), num(c, "eps"), num(c, "omega"), num(c, "sigma"), num(c, "lambda"), num(c, "gamma")};
    const auto res = branch_sweep(base, {which, r.lo, r.hi, r.n});
    // points in grid order with each event placed before the first point at or beyond it
    CsvWriter w(schema("bifurcation").columns);
    std::size_t ev = 0;
    json attractors = json::array();
    auto flush_events = [&](double upto) {
        while (ev < res.events.size() && res.events[ev].param <= upto) {
            w.row(res.events[ev].param, -1, 0.0, false, res.events[ev].label);
            ++ev;
        }
    };
    for (const auto& pt : res.points) {
        flush_events(pt.param);
        for (const auto& b : pt.locked) w.row(pt.param, b.id, std::sqrt(b.amplitude2), b.stable, "");
        attractors.push_back(to_string(pt.attractor));
    }
    flush_events(INFINITY);
    json events = json::array(), windows = json::array();
    for (const auto& e : res.events) events.push_back({{"param", e.param}, {"label", e.label}});
    for (const auto& wnd : res.three_locked_windows) windows.push_back({wnd[0], wnd[1]});
    return {"bifurcation", w.text(),
            {{"rows", w.rows()},
             {"param_name", pname},
             {"events", events},
             {"three_locked_windows", windows},
             {"attractors", attractors}}};
}

inline Dataset jump(const json& c) {
    const double eps = num(c, "eps"), lambda = num(c, "lambda");
    const auto mus = range(c, "mu").values();
    const int sign = integer(c, "initial_sign") >= 0 ? 1 : -1;
    CsvWriter w(schema("jump").columns);
    if (text(c, "mode") == "pinned") {
        for (const auto& j : jump_response(eps, lambda, mus, sign)) w.row(j.mu, j.x_sign, j.delta_y, j.y_initial, j.y_final);
    } else {
        std::vector<JumpTrajectoryRecord> recs(mus.size() * 2);
        parallel_for(
            recs.size(),
            [&](std::size_t i) {
                recs[i] = jump_trajectory({mus[i / 2], eps, lambda}, i % 2 == 0 ? 1 : -1, mus[i / 2], sign);
            },
            workers(c));
        for (const auto& j : recs) w.row(j.mu, j.x_sign, j.delta_y, j.y_initial, j.y_final);
    }
    return {"jump", w.text(), {{"rows", w.rows()}}};
}

inline Dataset scaling(const json& c) {
    const auto mus = range(c, "mu").geometric();
    const SystemSpec s = system_from(c, mus.front());
    const int cells = static_cast<int>(s.dim() / 2);
    int cell = integer(c, "cell");
    if (cell < 0) cell = cells - 1;
    ScalingOptions opt;
    opt.dt = num(c, "dt");
    opt.window = num(c, "window");
    opt.t_max = num(c, "t_max");
    opt.workers = workers(c);
    const auto fit = scaling_fit(s, mus, cell, opt);
    CsvWriter w(schema("scaling").columns);
    for (std::size_t i = 0; i < fit.mu.size(); ++i)
        w.row(fit.mu[i], fit.amplitude[i], std::log(fit.mu[i]), std::log(fit.amplitude[i]));
    return {"scaling", w.text(),
            {{"rows", w.rows()},
             {"cell", cell},
             {"slope", fit.slope},
             {"prefactor", std::exp(fit.intercept)},
             {"r2", fit.r2}}};
}

inline Dataset beam(const json& c) {
    const ArrayConfig cfg{integer(c, "n"), num(c, "k"), num(c, "d"), num(c, "theta")};
    const auto pat = pattern(cfg, range(c, "phi").values());
    CsvWriter w(schema("beam").columns);
    for (const auto& s : pat.samples) w.row(s.phi, s.magnitude);
    return {"beam", w.text(), {{"rows", w.rows()}, {"main_lobe_phi", pat.main_lobe_phi}}};
}
} // namespace detail

inline Dataset execute(const json& cfg) {
    const std::string cmd = cfg.at("command").get<std::string>();
    if (cmd == "phase-diagram") return detail::phase_diagram(cfg);
    if (cmd == "bifurcation") return detail::bifurcation(cfg);
    if (cmd == "basins") return detail::basins(cfg);
    if (cmd == "loci") return detail::loci(cfg);
    if (cmd == "simulate") return detail::simulate(cfg);
    if (cmd == "sweep") return detail::sweep(cfg);
    if (cmd == "jump") return detail::jump(cfg);
    if (cmd == "scaling") return detail::scaling(cfg);
    if (cmd == "beam") return detail::beam(cfg);
    throw error(errc::config, "unknown command '" + cmd + "'; valid commands: " + command_list());
}

/// Sidecar document written next to every CSV; its "config" member is accepted by --config.
inline json sidecar(const json& cfg, const Dataset& d) {
    json cols = json::array();
    const auto& sch = schema(d.schema);
    const auto first_line = d.csv.substr(0, d.csv.find('\n'));
    for (const auto& h : split(first_line, ',')) cols.push_back(h);
    return {{"config", cfg}, {"schema", sch.name}, {"header", cols}, {"summary", d.summary}};
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw error(errc::io, "cannot open " + path + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.close();
    if (!f) throw error(errc::io, "write to " + path + " failed");
}

inline json read_json_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw error(errc::io, "cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw error(errc::config, "config " + path + " is not valid JSON: " + e.what());
    }
}

inline int exit_code(error_family f) {
    switch (f) {
    case error_family::config: return 2;
    case error_family::numeric: return 3;
    case error_family::io: return 4;
    }
    return 3;
}

/// Parses argv-style arguments (without the program name), runs the command and writes
/// <out> and <out>.json. Returns the process exit status.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    try {
        // The command comes first, or from the config file when only --config is given.
        std::vector<std::string> argv = args;
        std::optional<json> file;
        for (std::size_t i = 0; i < argv.size(); ++i) {
            std::string path;
            if (argv[i] == "--config" && i + 1 < argv.size()) path = argv[i + 1];
            else if (argv[i].rfind("--config=", 0) == 0) path = argv[i].substr(9);
            else continue;
            file = read_json_file(path);
            break;
        }
        if (!argv.empty() && !argv.front().empty() && argv.front().front() != '-') {
            find_command(argv.front());
        } else if (file) {
            const json& src = file->contains("config") ? (*file)["config"] : *file;
            if (!src.is_object() || !src.contains("command") || !src["command"].is_string())
                throw error(errc::config, "config names no command; valid commands: " + command_list());
            find_command(src["command"].get<std::string>());
            argv.insert(argv.begin(), src["command"].get<std::string>());
        } else if (std::find(argv.begin(), argv.end(), "--help") == argv.end() &&
                   std::find(argv.begin(), argv.end(), "-h") == argv.end()) {
            throw error(errc::config, "no command given; valid commands: " + command_list());
        }

        CLI::App app{"Equilibria, attractors and singularity loci of two-cell feedforward networks", "ffnet_cli"};
        app.require_subcommand(0, 1);
        std::string config_path;
        app.add_option("--config", config_path, "JSON config, or a sidecar written by an earlier run");
        std::map<std::string, std::map<std::string, CLI::Option*>> handles;
        std::map<std::string, std::map<std::string, std::string>> storage;
        for (const auto& cmd : commands()) {
            auto* sub = app.add_subcommand(cmd.name, cmd.help);
            sub->fallthrough();
            auto& store = storage[cmd.name];
            auto add = [&](const OptionDef& o) {
                std::string help = o.help;
                help += " [default: " + (o.fallback.is_string() ? o.fallback.get<std::string>() : o.fallback.dump()) + "]";
                handles[cmd.name][o.name] = sub->add_option("--" + flag_name(o.name), store[o.name], help);
            };
            for (const auto& o : cmd.options) add(o);
            for (const auto& o : common_options()) add(o);
        }
        try {
            app.parse(std::vector<std::string>(argv.rbegin(), argv.rend()));
        } catch (const CLI::ParseError& e) {
            return app.exit(e, out, err) == 0 ? 0 : 2;
        }

        const std::string name = app.get_subcommands().front()->get_name();
        std::map<std::string, std::string> flags;
        for (const auto& [key, opt] : handles[name])
            if (opt->count() > 0) flags[key] = storage[name][key];

        const json cfg = resolve_config(find_command(name), file ? &*file : nullptr, flags);
        const Dataset d = execute(cfg);
        const std::string path = cfg.at("out").get<std::string>();
        write_file(path, d.csv);
        write_file(path + ".json", sidecar(cfg, d).dump(2) + "\n");
        out << "wrote " << d.summary.value("rows", std::size_t{0}) << " rows to " << path << '\n';
        return 0;
    } catch (const error& e) {
        err << e.what() << '\n';
        return exit_code(e.family());
    } catch (const json::exception& e) {
        err << "ConfigError: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "InternalError: " << e.what() << '\n';
        return 3;
    }
}

} // namespace ffnet::cli
