#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "mgsim/errors.hpp"
#include "mgsim/generation.hpp"
#include "mgsim/id.hpp"
#include "mgsim/linalg.hpp"

namespace mgsim {

enum class BusKind { Slack, PQ };

struct Bus {
    BusId id;
    BusKind kind = BusKind::PQ;
    double nominal_voltage = 230.0;  ///< V

    bool operator==(const Bus&) const = default;
};

struct Line {
    Id id;
    BusId from;
    BusId to;
    double resistance = 0.0;  ///< ohm
    double reactance = 0.0;   ///< ohm
    std::optional<double> length;  ///< m, informational

    [[nodiscard]] std::complex<double> impedance() const { return {resistance, reactance}; }

    bool operator==(const Line&) const = default;
};

/// Constant-power consumer.
struct LoadDevice {
    Id id;
    BusId bus;
    double active_power = 0.0;    ///< W
    double reactive_power = 0.0;  ///< var

    bool operator==(const LoadDevice&) const = default;
};

struct PerUnitBase {
    double s_base = 10'000.0;  ///< VA
    double v_base = 230.0;     ///< V

    [[nodiscard]] double z_base() const noexcept { return v_base * v_base / s_base; }

    bool operator==(const PerUnitBase&) const = default;
};

using AdmittanceMatrix = Matrix<std::complex<double>>;

struct Network {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<LoadDevice> loads;
    std::vector<SolarPanel> solar_panels;
    std::vector<WindTurbine> wind_turbines;
    std::optional<GridConnection> grid;

    [[nodiscard]] std::optional<std::size_t> bus_index(const BusId& id) const {
        for (std::size_t i = 0; i < buses.size(); ++i) {
            if (buses[i].id == id) return i;
        }
        return std::nullopt;
    }

    [[nodiscard]] std::optional<std::size_t> slack_index() const {
        for (std::size_t i = 0; i < buses.size(); ++i) {
            if (buses[i].kind == BusKind::Slack) return i;
        }
        return std::nullopt;
    }

    bool operator==(const Network&) const = default;
};

/// R = resistivity * length / cross_section, in ohms.
inline double line_resistance(double resistivity, double length, double cross_section) {
    if (!(resistivity > 0.0)) throw InvalidParameter("line_resistance: resistivity must be > 0");
    if (!(cross_section > 0.0)) {
        throw InvalidParameter("line_resistance: cross_section must be > 0");
    }
    if (!(length >= 0.0)) throw InvalidParameter("line_resistance: length must be >= 0");
    return resistivity * length / cross_section;
}

/// Bus admittance matrix in per-unit. Parallel lines add; the network has no
/// shunt elements, so every row sums to zero.
inline AdmittanceMatrix build_admittance(const Network& net, const PerUnitBase& base) {
    const std::size_t n = net.buses.size();
    AdmittanceMatrix y(n, n);
    const double z_base = base.z_base();
    for (const auto& line : net.lines) {
        const auto from = net.bus_index(line.from);
        const auto to = net.bus_index(line.to);
        if (!from || !to) {
            throw InvalidParameter("build_admittance: line '" + line.id.str() +
                                   "' references an unknown bus");
        }
        const std::complex<double> z = line.impedance() / z_base;
        if (z == 0.0) {
            throw SingularBranch("line '" + line.id.str() + "' has zero impedance");
        }
        const std::complex<double> yl = 1.0 / z;
        y(*from, *to) -= yl;
        y(*to, *from) -= yl;
        y(*from, *from) += yl;
        y(*to, *to) += yl;
    }
    return y;
}

enum class DiagnosticKind {
    DuplicateId,
    DanglingReference,
    Disconnected,
    SlackCount,
    ZeroImpedance,
    SelfLoop,
    VoltageMismatch,
    InvalidValue,
    GridPlacement,
};

struct Diagnostic {
    DiagnosticKind kind;
    std::string object;  ///< id of the offending object
    std::string message;
};

/// Structural checks on a network. An empty result means build_admittance
/// and the solvers can be applied.
inline std::vector<Diagnostic> validate(const Network& net) {
    std::vector<Diagnostic> out;
    auto report = [&](DiagnosticKind k, const Id& obj, std::string msg) {
        out.push_back({k, obj.str(), std::move(msg)});
    };

    std::set<Id> seen;
    auto check_unique = [&](const Id& id) {
        if (!seen.insert(id).second) report(DiagnosticKind::DuplicateId, id, "duplicate id '" + id.str() + "'");
    };
    for (const auto& b : net.buses) check_unique(b.id);
    for (const auto& l : net.lines) check_unique(l.id);
    if (net.grid) check_unique(net.grid->id);
    for (const auto& d : net.loads) check_unique(d.id);
    for (const auto& d : net.solar_panels) check_unique(d.id);
    for (const auto& d : net.wind_turbines) check_unique(d.id);

    std::size_t slack_count = 0;
    for (const auto& b : net.buses) {
        if (b.kind == BusKind::Slack) ++slack_count;
        if (!(b.nominal_voltage > 0.0)) {
            report(DiagnosticKind::InvalidValue, b.id, "nominal voltage must be > 0");
        } else if (b.nominal_voltage != net.buses.front().nominal_voltage) {
            report(DiagnosticKind::VoltageMismatch, b.id,
                   "nominal voltage differs from bus '" + net.buses.front().id.str() + "'");
        }
    }
    if (slack_count == 0) {
        out.push_back({DiagnosticKind::SlackCount, "", "no slack bus"});
    } else if (slack_count > 1) {
        bool first = true;
        for (const auto& b : net.buses) {
            if (b.kind != BusKind::Slack) continue;
            if (!first) report(DiagnosticKind::SlackCount, b.id, "multiple slack buses");
            first = false;
        }
    }

    auto check_ref = [&](const Id& owner, const BusId& bus) {
        if (!net.bus_index(bus)) {
            report(DiagnosticKind::DanglingReference, owner,
                   "'" + owner.str() + "' references unknown bus '" + bus.str() + "'");
            return false;
        }
        return true;
    };

    for (const auto& l : net.lines) {
        const bool ok_from = check_ref(l.id, l.from);
        const bool ok_to = check_ref(l.id, l.to);
        if (ok_from && ok_to && l.from == l.to) {
            report(DiagnosticKind::SelfLoop, l.id, "line connects bus '" + l.from.str() + "' to itself");
        }
        if (!(l.resistance >= 0.0) || !(l.reactance >= 0.0)) {
            report(DiagnosticKind::InvalidValue, l.id, "resistance and reactance must be >= 0");
        } else if (l.resistance + l.reactance == 0.0) {
            report(DiagnosticKind::ZeroImpedance, l.id, "line has zero impedance");
        }
        if (l.length && !(*l.length >= 0.0)) {
            report(DiagnosticKind::InvalidValue, l.id, "length must be >= 0");
        }
    }
    for (const auto& d : net.loads) {
        check_ref(d.id, d.bus);
        if (!(d.active_power >= 0.0)) report(DiagnosticKind::InvalidValue, d.id, "load power must be >= 0");
    }
    for (const auto& d : net.solar_panels) {
        check_ref(d.id, d.bus);
        if (!(d.peak_power > 0.0)) report(DiagnosticKind::InvalidValue, d.id, "peak power must be > 0");
        if (!(d.cloud_attenuation >= 0.0 && d.cloud_attenuation <= 1.0)) {
            report(DiagnosticKind::InvalidValue, d.id, "alpha must lie in [0, 1]");
        }
    }
    for (const auto& d : net.wind_turbines) {
        check_ref(d.id, d.bus);
        if (!(d.peak_power > 0.0)) report(DiagnosticKind::InvalidValue, d.id, "peak power must be > 0");
        if (!(d.cut_in >= 0.0 && d.cut_in < d.rated && d.rated < d.cut_out)) {
            report(DiagnosticKind::InvalidValue, d.id, "requires 0 <= cut_in < rated < cut_out");
        }
    }
    if (net.grid && check_ref(net.grid->id, net.grid->bus)) {
        const auto idx = net.bus_index(net.grid->bus);
        if (net.buses[*idx].kind != BusKind::Slack) {
            report(DiagnosticKind::GridPlacement, net.grid->id, "grid connection must sit on the slack bus");
        }
    }

    // Reachability from the slack bus (or the first bus when there is none).
    if (!net.buses.empty()) {
        const std::size_t n = net.buses.size();
        std::vector<std::vector<std::size_t>> adj(n);
        for (const auto& l : net.lines) {
            const auto a = net.bus_index(l.from);
            const auto b = net.bus_index(l.to);
            if (a && b) {
                adj[*a].push_back(*b);
                adj[*b].push_back(*a);
            }
        }
        const std::size_t root = net.slack_index().value_or(0);
        std::vector<bool> reached(n, false);
        std::queue<std::size_t> frontier;
        reached[root] = true;
        frontier.push(root);
        while (!frontier.empty()) {
            const auto i = frontier.front();
            frontier.pop();
            for (const auto k : adj[i]) {
                if (!reached[k]) {
                    reached[k] = true;
                    frontier.push(k);
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!reached[i]) {
                report(DiagnosticKind::Disconnected, net.buses[i].id,
                       "bus '" + net.buses[i].id.str() + "' is not connected to '" +
                           net.buses[root].id.str() + "'");
            }
        }
    }
    return out;
}

}  // namespace mgsim
