#pragma once

// Scenario documents (.mgs): a line-oriented, INI-like format.
//
//   # comment
//   [bus]
//   id = f
//   kind = slack
//   nominal_voltage_v = 230
//
// One object per section; repeated sections accumulate. Unknown keys are
// errors. emit_scenario() writes the canonical form that parse_scenario()
// reads back to an identical Scenario.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "mgsim/grid.hpp"
#include "mgsim/text.hpp"
#include "mgsim/weather.hpp"

namespace mgsim {

enum class SolverKind { Acpf, Gs, Simple };

inline std::string_view to_string(SolverKind k) {
    switch (k) {
        case SolverKind::Acpf: return "acpf";
        case SolverKind::Gs: return "gs";
        case SolverKind::Simple: return "simple";
    }
    return "?";
}

inline std::optional<SolverKind> solver_from_string(std::string_view s) {
    if (s == "acpf") return SolverKind::Acpf;
    if (s == "gs") return SolverKind::Gs;
    if (s == "simple") return SolverKind::Simple;
    return std::nullopt;
}

struct SimulationConfig {
    int steps = 48;
    int start_hour = 0;
    SolverKind solver = SolverKind::Acpf;
    std::uint64_t seed = 0;
    std::optional<double> s_base_va;  ///< default 10 kVA
    std::optional<double> v_base_v;   ///< default: network nominal voltage

    bool operator==(const SimulationConfig&) const = default;
};

/// Weather comes either from the stochastic generator or from a CSV trace.
using WeatherSource = std::variant<WeatherParams, std::string>;

struct Scenario {
    Network network;
    WeatherSource weather = WeatherParams{};
    SimulationConfig config;

    [[nodiscard]] PerUnitBase per_unit_base() const {
        PerUnitBase base;
        if (config.s_base_va) base.s_base = *config.s_base_va;
        if (config.v_base_v) {
            base.v_base = *config.v_base_v;
        } else if (!network.buses.empty()) {
            base.v_base = network.buses.front().nominal_voltage;
        }
        return base;
    }

    bool operator==(const Scenario&) const = default;
};

enum class ParseErrorKind { Syntax, UnknownKey, TypeMismatch, MissingRequired, SemanticConflict };

inline std::string_view to_string(ParseErrorKind k) {
    switch (k) {
        case ParseErrorKind::Syntax: return "syntax";
        case ParseErrorKind::UnknownKey: return "unknown-key";
        case ParseErrorKind::TypeMismatch: return "type-mismatch";
        case ParseErrorKind::MissingRequired: return "missing-required";
        case ParseErrorKind::SemanticConflict: return "semantic-conflict";
    }
    return "?";
}

struct ParseError {
    int line = 0;    ///< 1-based
    int column = 0;  ///< 1-based
    std::string message;
    ParseErrorKind kind = ParseErrorKind::Syntax;
};

inline std::string format_error(const ParseError& e) {
    return std::to_string(e.line) + ":" + std::to_string(e.column) + ": " +
           std::string(to_string(e.kind)) + ": " + e.message;
}

/// Either a Scenario or the complete list of errors; never both.
struct ParseResult {
    std::optional<Scenario> scenario;
    std::vector<ParseError> errors;

    [[nodiscard]] bool ok() const noexcept { return scenario.has_value(); }
};

namespace detail {

struct Location {
    int line = 0;
    int column = 0;
};

struct Entry {
    std::string value;
    Location key;
    Location value_loc;
};

struct Section {
    std::string kind;
    Location header;
    std::vector<std::pair<std::string, Entry>> entries;
};

inline const std::array<std::string_view, 8> kSectionKinds = {
    "simulation", "weather", "bus", "line", "grid", "load", "pv", "wind"};

inline bool is_key(std::string_view s) {
    if (s.empty() || s.front() < 'a' || s.front() > 'z') return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

// Typed access to one section's entries, with every problem reported into
// the shared error list.
class SectionReader {
public:
    SectionReader(const Section& s, std::vector<ParseError>& errors,
                  std::initializer_list<std::string_view> allowed)
        : section_(s), errors_(errors) {
        for (const auto& [key, e] : s.entries) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                error(e.key, ParseErrorKind::UnknownKey,
                      "unknown key '" + key + "' in [" + s.kind + "]");
            }
        }
    }

    [[nodiscard]] const Entry* find(std::string_view key) const {
        for (const auto& [k, e] : section_.entries) {
            if (k == key) return &e;
        }
        return nullptr;
    }

    [[nodiscard]] bool has(std::string_view key) const { return find(key) != nullptr; }

    const Entry* require(std::string_view key) {
        const Entry* e = find(key);
        if (!e) {
            error(section_.header, ParseErrorKind::MissingRequired,
                  "[" + section_.kind + "] is missing required key '" + std::string(key) + "'");
            ok_ = false;
        }
        return e;
    }

    std::optional<Id> id(std::string_view key, bool required = true) {
        const Entry* e = required ? require(key) : find(key);
        if (!e) return std::nullopt;
        if (!Id::is_valid(e->value)) {
            mismatch(*e, key, "an identifier ([a-z0-9_], 1-32 chars)");
            return std::nullopt;
        }
        return Id(e->value);
    }

    std::optional<double> number(std::string_view key, bool required = true) {
        const Entry* e = required ? require(key) : find(key);
        if (!e) return std::nullopt;
        const auto v = parse_double(e->value);
        if (!v || !std::isfinite(*v)) {
            mismatch(*e, key, "a number");
            return std::nullopt;
        }
        return v;
    }

    std::optional<std::int64_t> integer(std::string_view key, std::int64_t lo, std::int64_t hi) {
        const Entry* e = require(key);
        if (!e) return std::nullopt;
        const auto v = parse_int(e->value);
        if (!v || *v < lo || *v > hi) {
            mismatch(*e, key,
                     "an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            return std::nullopt;
        }
        return v;
    }

    std::optional<std::uint64_t> unsigned64(std::string_view key) {
        const Entry* e = require(key);
        if (!e) return std::nullopt;
        const auto v = parse_uint64(e->value);
        if (!v) mismatch(*e, key, "an unsigned 64-bit integer");
        return v;
    }

    /// Range check on an already parsed value.
    void check(bool cond, std::string_view key, const std::string& expected) {
        if (cond) return;
        if (const Entry* e = find(key)) mismatch(*e, key, expected);
    }

    void error(Location loc, ParseErrorKind kind, std::string msg) {
        errors_.push_back({loc.line, loc.column, std::move(msg), kind});
        if (kind != ParseErrorKind::UnknownKey) ok_ = false;
    }

    [[nodiscard]] bool ok() const noexcept { return ok_; }
    [[nodiscard]] const Section& section() const noexcept { return section_; }

private:
    void mismatch(const Entry& e, std::string_view key, const std::string& expected) {
        error(e.value_loc, ParseErrorKind::TypeMismatch,
              "'" + std::string(key) + "' must be " + expected + ", got '" + e.value + "'");
    }

    const Section& section_;
    std::vector<ParseError>& errors_;
    bool ok_ = true;
};

// Where each object's tokens live, for semantic diagnostics.
struct ObjectLocations {
    Location id;
    std::map<std::string, Location, std::less<>> values;
};

inline std::vector<Section> split_sections(std::string_view text, std::vector<ParseError>& errors) {
    std::vector<Section> sections;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        std::string_view raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);

        std::string_view content = raw;
        if (const auto hash = content.find('#'); hash != std::string_view::npos) {
            content = content.substr(0, hash);
        }
        const auto body = trim(content);
        if (body.empty()) continue;
        const int col = static_cast<int>(body.data() - raw.data()) + 1;

        if (body.front() == '[') {
            if (body.back() != ']') {
                errors.push_back({line_no, col, "section header must end with ']'", ParseErrorKind::Syntax});
                continue;
            }
            const auto kind = trim(body.substr(1, body.size() - 2));
            if (std::find(kSectionKinds.begin(), kSectionKinds.end(), kind) == kSectionKinds.end()) {
                errors.push_back({line_no, col, "unknown section kind '" + std::string(kind) + "'",
                                  ParseErrorKind::Syntax});
                // Swallow the body of the unknown section without cascading errors.
                sections.push_back({"", {line_no, col}, {}});
                continue;
            }
            sections.push_back({std::string(kind), {line_no, col}, {}});
            continue;
        }

        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            errors.push_back({line_no, col, "expected 'key = value' or '[section]'", ParseErrorKind::Syntax});
            continue;
        }
        const auto key = trim(body.substr(0, eq));
        const auto value = trim(body.substr(eq + 1));
        if (!is_key(key)) {
            errors.push_back({line_no, col, "invalid key '" + std::string(key) + "'", ParseErrorKind::Syntax});
            continue;
        }
        const int value_col = value.empty() ? static_cast<int>(eq) + col + 1
                                            : static_cast<int>(value.data() - raw.data()) + 1;
        if (value.empty()) {
            errors.push_back({line_no, value_col, "missing value for '" + std::string(key) + "'",
                              ParseErrorKind::Syntax});
            continue;
        }
        if (sections.empty()) {
            errors.push_back({line_no, col, "entry '" + std::string(key) + "' outside of any section",
                              ParseErrorKind::Syntax});
            continue;
        }
        auto& sec = sections.back();
        if (sec.kind.empty()) continue;
        const bool dup = std::any_of(sec.entries.begin(), sec.entries.end(),
                                     [&](const auto& kv) { return kv.first == key; });
        if (dup) {
            errors.push_back({line_no, col, "duplicate key '" + std::string(key) + "' in [" + sec.kind + "]",
                              ParseErrorKind::SemanticConflict});
            continue;
        }
        sec.entries.emplace_back(std::string(key),
                                 Entry{std::string(value), {line_no, col}, {line_no, value_col}});
    }
    return sections;
}

}  // namespace detail

/// Parse a scenario document. All recoverable errors are collected; on any
/// error no Scenario is returned.
inline ParseResult parse_scenario(std::string_view text) {
    using detail::Location;
    using detail::SectionReader;

    ParseResult result;
    auto& errors = result.errors;
    const auto sections = detail::split_sections(text, errors);

    Scenario sc;
    bool built_ok = true;
    std::optional<Location> simulation_at;
    std::optional<Location> weather_at;
    std::optional<Location> grid_at;
    std::optional<Location> first_bus_at;
    std::unordered_map<std::string, detail::ObjectLocations> where;
    std::vector<std::pair<Id, Location>> id_sites;

    auto remember = [&](const SectionReader& r, const Id& id) {
        auto& loc = where[id.str()];
        for (const auto& [k, e] : r.section().entries) {
            if (k == "id") {
                loc.id = e.key;
                id_sites.emplace_back(id, e.value_loc);
            }
            loc.values[k] = e.value_loc;
        }
    };

    auto single = [&](std::optional<Location>& slot, const detail::Section& s) {
        if (slot) {
            errors.push_back({s.header.line, s.header.column,
                              "[" + s.kind + "] may appear only once (first at line " +
                                  std::to_string(slot->line) + ")",
                              ParseErrorKind::SemanticConflict});
            return false;
        }
        slot = s.header;
        return true;
    };

    for (const auto& s : sections) {
        if (s.kind.empty()) continue;

        if (s.kind == "simulation") {
            if (!single(simulation_at, s)) continue;
            SectionReader r(s, errors, {"steps", "start_hour", "solver", "seed", "s_base_va", "v_base_v"});
            const auto steps = r.integer("steps", 1, 1'000'000'000);
            const auto start = r.integer("start_hour", 0, 23);
            std::optional<SolverKind> solver;
            if (const auto* e = r.require("solver")) {
                solver = solver_from_string(e->value);
                if (!solver) {
                    r.error(e->value_loc, ParseErrorKind::TypeMismatch,
                            "'solver' must be one of acpf, gs, simple, got '" + e->value + "'");
                }
            }
            const auto seed = r.unsigned64("seed");
            const auto s_base = r.number("s_base_va", false);
            const auto v_base = r.number("v_base_v", false);
            r.check(!s_base || *s_base > 0.0, "s_base_va", "> 0");
            r.check(!v_base || *v_base > 0.0, "v_base_v", "> 0");
            if (r.ok()) {
                sc.config = {static_cast<int>(*steps), static_cast<int>(*start), *solver, *seed, s_base, v_base};
            }
            built_ok &= r.ok();
        } else if (s.kind == "weather") {
            if (!single(weather_at, s)) continue;
            SectionReader r(s, errors,
                            {"trace", "weibull_shape", "weibull_scale_mps", "cloud_step", "cloud_initial",
                             "temp_mean_c", "temp_amplitude_c"});
            if (const auto* trace = r.find("trace")) {
                for (const auto& [k, e] : s.entries) {
                    if (k != "trace") {
                        r.error(e.key, ParseErrorKind::SemanticConflict,
                                "'" + k + "' conflicts with 'trace' (weather is either a trace or generator parameters)");
                    }
                }
                sc.weather = trace->value;
            } else {
                WeatherParams p;
                if (auto v = r.number("weibull_shape", false)) p.weibull_shape = *v;
                if (auto v = r.number("weibull_scale_mps", false)) p.weibull_scale = *v;
                if (auto v = r.number("cloud_step", false)) p.cloud_step = *v;
                if (auto v = r.number("cloud_initial", false)) p.cloud_initial = *v;
                if (auto v = r.number("temp_mean_c", false)) p.temp_mean = *v;
                if (auto v = r.number("temp_amplitude_c", false)) p.temp_amplitude = *v;
                r.check(p.weibull_shape > 0.0, "weibull_shape", "> 0");
                r.check(p.weibull_scale > 0.0, "weibull_scale_mps", "> 0");
                r.check(p.cloud_step >= 0.0, "cloud_step", ">= 0");
                r.check(p.cloud_initial >= 0.0 && p.cloud_initial <= 1.0, "cloud_initial", "in [0, 1]");
                sc.weather = p;
            }
            built_ok &= r.ok();
        } else if (s.kind == "bus") {
            if (!first_bus_at) first_bus_at = s.header;
            SectionReader r(s, errors, {"id", "kind", "nominal_voltage_v"});
            const auto id = r.id("id");
            std::optional<BusKind> kind;
            if (const auto* e = r.require("kind")) {
                if (e->value == "slack") kind = BusKind::Slack;
                else if (e->value == "pq") kind = BusKind::PQ;
                else r.error(e->value_loc, ParseErrorKind::TypeMismatch,
                             "'kind' must be slack or pq, got '" + e->value + "'");
            }
            const auto vn = r.number("nominal_voltage_v");
            if (r.ok()) {
                sc.network.buses.push_back({*id, *kind, *vn});
                remember(r, *id);
            }
            built_ok &= r.ok();
        } else if (s.kind == "line") {
            SectionReader r(s, errors, {"id", "from", "to", "resistance_ohm", "reactance_ohm", "length_m"});
            const auto id = r.id("id");
            const auto from = r.id("from");
            const auto to = r.id("to");
            const auto res = r.number("resistance_ohm");
            const auto rx = r.number("reactance_ohm", false);
            const auto len = r.number("length_m", false);
            if (r.ok()) {
                sc.network.lines.push_back({*id, *from, *to, *res, rx.value_or(0.0), len});
                remember(r, *id);
            }
            built_ok &= r.ok();
        } else if (s.kind == "grid") {
            if (!single(grid_at, s)) continue;
            SectionReader r(s, errors, {"id", "bus"});
            const auto id = r.id("id");
            const auto bus = r.id("bus");
            if (r.ok()) {
                sc.network.grid = GridConnection{*id, *bus};
                remember(r, *id);
            }
            built_ok &= r.ok();
        } else if (s.kind == "load") {
            SectionReader r(s, errors, {"id", "bus", "p_w", "q_var"});
            const auto id = r.id("id");
            const auto bus = r.id("bus");
            const auto p = r.number("p_w");
            const auto q = r.number("q_var", false);
            if (r.ok()) {
                sc.network.loads.push_back({*id, *bus, *p, q.value_or(0.0)});
                remember(r, *id);
            }
            built_ok &= r.ok();
        } else if (s.kind == "pv") {
            SectionReader r(s, errors, {"id", "bus", "peak_w", "alpha"});
            const auto id = r.id("id");
            const auto bus = r.id("bus");
            const auto peak = r.number("peak_w");
            const auto alpha = r.number("alpha", false);
            if (r.ok()) {
                sc.network.solar_panels.push_back({*id, *bus, *peak, alpha.value_or(0.75)});
                remember(r, *id);
            }
            built_ok &= r.ok();
        } else if (s.kind == "wind") {
            SectionReader r(s, errors, {"id", "bus", "peak_w", "cut_in_mps", "rated_mps", "cut_out_mps"});
            const auto id = r.id("id");
            const auto bus = r.id("bus");
            const auto peak = r.number("peak_w");
            WindTurbine t;
            if (auto v = r.number("cut_in_mps", false)) t.cut_in = *v;
            if (auto v = r.number("rated_mps", false)) t.rated = *v;
            if (auto v = r.number("cut_out_mps", false)) t.cut_out = *v;
            if (r.ok()) {
                t.id = *id;
                t.bus = *bus;
                t.peak_power = *peak;
                sc.network.wind_turbines.push_back(t);
                remember(r, *id);
            }
            built_ok &= r.ok();
        }
    }

    if (!simulation_at) {
        errors.push_back({1, 1, "missing required section [simulation]", ParseErrorKind::MissingRequired});
    }

    // Semantic checks only make sense once every object was built.
    if (built_ok && errors.empty()) {
        std::set<Id> seen;
        for (const auto& [id, loc] : id_sites) {
            if (!seen.insert(id).second) {
                errors.push_back({loc.line, loc.column, "duplicate id '" + id.str() + "'",
                                  ParseErrorKind::SemanticConflict});
            }
        }
        const auto& net = sc.network;
        auto check_ref = [&](const Id& owner, std::string_view key, const BusId& bus) {
            if (net.bus_index(bus)) return;
            const auto& loc = where[owner.str()].values[std::string(key)];
            errors.push_back({loc.line, loc.column,
                              "'" + owner.str() + "' references unknown bus '" + bus.str() + "'",
                              ParseErrorKind::SemanticConflict});
        };
        for (const auto& l : net.lines) {
            check_ref(l.id, "from", l.from);
            check_ref(l.id, "to", l.to);
        }
        for (const auto& d : net.loads) check_ref(d.id, "bus", d.bus);
        for (const auto& d : net.solar_panels) check_ref(d.id, "bus", d.bus);
        for (const auto& d : net.wind_turbines) check_ref(d.id, "bus", d.bus);
        if (net.grid) check_ref(net.grid->id, "bus", net.grid->bus);

        for (const auto& d : validate(net)) {
            if (d.kind == DiagnosticKind::DuplicateId || d.kind == DiagnosticKind::DanglingReference) continue;
            Location loc{1, 1};
            if (d.object.empty()) {
                if (first_bus_at) loc = *first_bus_at;
            } else {
                const auto& obj = where[d.object];
                loc = obj.id;
                auto pick = [&](std::string_view key) {
                    if (auto it = obj.values.find(key); it != obj.values.end()) loc = it->second;
                };
                switch (d.kind) {
                    case DiagnosticKind::SlackCount: pick("kind"); break;
                    case DiagnosticKind::ZeroImpedance: pick("resistance_ohm"); break;
                    case DiagnosticKind::SelfLoop: pick("to"); break;
                    case DiagnosticKind::VoltageMismatch: pick("nominal_voltage_v"); break;
                    case DiagnosticKind::GridPlacement: pick("bus"); break;
                    default: break;
                }
            }
            errors.push_back({loc.line, loc.column, d.message, ParseErrorKind::SemanticConflict});
        }
    }

    if (errors.empty()) {
        if (auto* p = std::get_if<WeatherParams>(&sc.weather)) p->seed = sc.config.seed;
        result.scenario = std::move(sc);
    }
    std::stable_sort(errors.begin(), errors.end(), [](const ParseError& a, const ParseError& b) {
        return std::tie(a.line, a.column) < std::tie(b.line, b.column);
    });
    return result;
}

/// Canonical text form: fixed section and key order, numbers with at most
/// nine significant digits, LF line endings.
inline std::string emit_scenario(const Scenario& sc) {
    std::ostringstream out;
    auto kv = [&](std::string_view key, const auto& value) { out << key << " = " << value << '\n'; };
    auto num = [&](std::string_view key, double v) { kv(key, format_number(v)); };

    const auto& cfg = sc.config;
    out << "[simulation]\n";
    kv("steps", cfg.steps);
    kv("start_hour", cfg.start_hour);
    kv("solver", to_string(cfg.solver));
    kv("seed", cfg.seed);
    if (cfg.s_base_va) num("s_base_va", *cfg.s_base_va);
    if (cfg.v_base_v) num("v_base_v", *cfg.v_base_v);

    out << "\n[weather]\n";
    if (const auto* trace = std::get_if<std::string>(&sc.weather)) {
        kv("trace", *trace);
    } else {
        const auto& p = std::get<WeatherParams>(sc.weather);
        num("weibull_shape", p.weibull_shape);
        num("weibull_scale_mps", p.weibull_scale);
        num("cloud_step", p.cloud_step);
        num("cloud_initial", p.cloud_initial);
        num("temp_mean_c", p.temp_mean);
        num("temp_amplitude_c", p.temp_amplitude);
    }

    const auto& net = sc.network;
    for (const auto& b : net.buses) {
        out << "\n[bus]\n";
        kv("id", b.id);
        kv("kind", b.kind == BusKind::Slack ? "slack" : "pq");
        num("nominal_voltage_v", b.nominal_voltage);
    }
    for (const auto& l : net.lines) {
        out << "\n[line]\n";
        kv("id", l.id);
        kv("from", l.from);
        kv("to", l.to);
        num("resistance_ohm", l.resistance);
        num("reactance_ohm", l.reactance);
        if (l.length) num("length_m", *l.length);
    }
    if (net.grid) {
        out << "\n[grid]\n";
        kv("id", net.grid->id);
        kv("bus", net.grid->bus);
    }
    for (const auto& d : net.loads) {
        out << "\n[load]\n";
        kv("id", d.id);
        kv("bus", d.bus);
        num("p_w", d.active_power);
        num("q_var", d.reactive_power);
    }
    for (const auto& d : net.solar_panels) {
        out << "\n[pv]\n";
        kv("id", d.id);
        kv("bus", d.bus);
        num("peak_w", d.peak_power);
        num("alpha", d.cloud_attenuation);
    }
    for (const auto& d : net.wind_turbines) {
        out << "\n[wind]\n";
        kv("id", d.id);
        kv("bus", d.bus);
        num("peak_w", d.peak_power);
        num("cut_in_mps", d.cut_in);
        num("rated_mps", d.rated);
        num("cut_out_mps", d.cut_out);
    }
    return out.str();
}

}  // namespace mgsim
