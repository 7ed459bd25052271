#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "mgsim/errors.hpp"
#include "mgsim/generation.hpp"
#include "mgsim/grid.hpp"
#include "mgsim/powerflow.hpp"
#include "mgsim/scenario.hpp"
#include "mgsim/text.hpp"
#include "mgsim/weather.hpp"

namespace mgsim {

enum class Quantity {
    CloudFactor,
    WindSpeed,
    Temperature,
    POut,
    PDemand,
    PGrid,
    VMag,
    VAngle,
    Losses,
};

inline constexpr std::array<std::string_view, 9> kQuantityNames = {
    "cloud_factor", "wind_speed", "temperature", "p_out", "p_demand",
    "p_grid",       "v_mag",      "v_angle",     "losses"};

inline std::string_view to_string(Quantity q) { return kQuantityNames[static_cast<std::size_t>(q)]; }

inline std::optional<Quantity> quantity_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kQuantityNames.size(); ++i) {
        if (kQuantityNames[i] == s) return static_cast<Quantity>(i);
    }
    return std::nullopt;
}

inline std::string_view unit_of(Quantity q) {
    switch (q) {
        case Quantity::CloudFactor: return "1";
        case Quantity::WindSpeed: return "m/s";
        case Quantity::Temperature: return "degC";
        case Quantity::VMag: return "V";
        case Quantity::VAngle: return "rad";
        default: return "W";
    }
}

struct ResultRecord {
    int step = 0;
    int hour = 0;
    std::string object;
    Quantity quantity = Quantity::CloudFactor;
    double value = 0.0;
    std::string unit;

    bool operator==(const ResultRecord&) const = default;
};

using ResultTable = std::vector<ResultRecord>;

/// Object names used for records that do not belong to a scenario object.
inline constexpr const char* kWeatherObject = "weather";
inline constexpr const char* kNetworkObject = "network";
inline constexpr const char* kDefaultGridObject = "grid";

inline void sort_records(ResultTable& table) {
    std::stable_sort(table.begin(), table.end(), [](const ResultRecord& a, const ResultRecord& b) {
        return std::tie(a.step, a.object, a.quantity) < std::tie(b.step, b.object, b.quantity);
    });
}

/// Weather samples for a run: generated from the scenario parameters, or the
/// first `steps` rows of the trace file (relative paths resolve against
/// `base_dir`).
inline std::vector<WeatherSample> scenario_weather(const Scenario& sc,
                                                   const std::filesystem::path& base_dir = {}) {
    const int steps = sc.config.steps;
    if (const auto* params = std::get_if<WeatherParams>(&sc.weather)) {
        WeatherParams p = *params;
        p.seed = sc.config.seed;
        return weather_series(p, steps, sc.config.start_hour);
    }
    std::filesystem::path trace = std::get<std::string>(sc.weather);
    if (trace.is_relative() && !base_dir.empty()) trace = base_dir / trace;
    auto samples = load_weather_csv(trace);
    if (samples.size() < static_cast<std::size_t>(steps)) {
        throw InvalidParameter("weather trace '" + trace.string() + "' has " +
                               std::to_string(samples.size()) + " samples, run needs " +
                               std::to_string(steps));
    }
    samples.resize(static_cast<std::size_t>(steps));
    return samples;
}

/// Generator outputs for one weather sample, PV panels first, then wind
/// turbines, each in declaration order.
struct GenerationOutput {
    Id device;
    BusId bus;
    double watts = 0.0;
};

inline std::vector<GenerationOutput> evaluate_generation(const Network& net, const WeatherSample& w) {
    std::vector<GenerationOutput> out;
    for (const auto& pv : net.solar_panels) out.push_back({pv.id, pv.bus, pv_power(pv, w)});
    for (const auto& wt : net.wind_turbines) out.push_back({wt.id, wt.bus, wind_power(wt, w.wind_speed)});
    return out;
}

/// Per-unit injections for one step: loads negative, generation positive
/// (as constant-P injection at unity power factor).
inline std::vector<std::complex<double>> assemble_injections(const Network& net, const PerUnitBase& base,
                                                             const std::vector<GenerationOutput>& gen) {
    std::vector<std::complex<double>> s(net.buses.size(), {0.0, 0.0});
    for (const auto& g : gen) s[*net.bus_index(g.bus)] += g.watts / base.s_base;
    for (const auto& load : net.loads) {
        s[*net.bus_index(load.bus)] -= std::complex<double>(load.active_power, load.reactive_power) / base.s_base;
    }
    return s;
}

/// Hourly loop: weather, generation, solve, record. Throws NonConvergence
/// (carrying the step index) if the AC solver fails at any step.
inline ResultTable run_simulation(const Scenario& sc, const std::filesystem::path& base_dir = {}) {
    const auto& net = sc.network;
    if (const auto diags = validate(net); !diags.empty()) {
        throw InvalidParameter("run_simulation: invalid network: " + diags.front().message);
    }
    const auto weather = scenario_weather(sc, base_dir);
    const PerUnitBase base = sc.per_unit_base();
    const std::string grid_object = net.grid ? net.grid->id.str() : kDefaultGridObject;
    const bool ac = sc.config.solver != SolverKind::Simple;

    PowerFlowProblem problem;
    SolverOptions options;
    if (ac) {
        problem.admittance = build_admittance(net, base);
        problem.slack_index = *net.slack_index();
        options = sc.config.solver == SolverKind::Gs ? SolverOptions::gauss_seidel()
                                                     : SolverOptions::newton_raphson();
    }

    ResultTable table;
    for (const auto& w : weather) {
        const int step = w.step;
        const int hour = w.hour_of_day;
        auto record = [&](const std::string& object, Quantity q, double value) {
            table.push_back({step, hour, object, q, value, std::string(unit_of(q))});
        };
        record(kWeatherObject, Quantity::CloudFactor, w.cloud_factor);
        record(kWeatherObject, Quantity::WindSpeed, w.wind_speed);
        record(kWeatherObject, Quantity::Temperature, w.temperature);

        const auto generation = evaluate_generation(net, w);

        if (!ac) {
            std::vector<double> demands;
            for (const auto& load : net.loads) demands.push_back(load.active_power);
            std::vector<std::pair<Id, double>> production;
            for (const auto& g : generation) production.emplace_back(g.device, g.watts);
            const auto dispatch = simple_power_distribution(demands, production);
            for (const auto& [id, watts] : dispatch.produced) record(id.str(), Quantity::POut, watts);
            for (const auto& load : net.loads) {
                record(load.id.str(), Quantity::PDemand, quantize_power(load.active_power));
            }
            record(grid_object, Quantity::PGrid, dispatch.grid_power);
            continue;
        }

        // Power drawn by devices on the slack bus bypasses the network but
        // still crosses the grid connection.
        double slack_local = 0.0;
        for (const auto& g : generation) {
            if (*net.bus_index(g.bus) == problem.slack_index) slack_local -= g.watts;
            record(g.device.str(), Quantity::POut, g.watts);
        }
        for (const auto& load : net.loads) {
            if (*net.bus_index(load.bus) == problem.slack_index) slack_local += load.active_power;
            record(load.id.str(), Quantity::PDemand, load.active_power);
        }
        problem.injections = assemble_injections(net, base, generation);

        PowerFlowSolution sol;
        try {
            sol = solve_power_flow(problem, options);
        } catch (const SolverError& e) {
            throw NonConvergence(static_cast<std::size_t>(step), e.what());
        }
        if (!sol.converged) {
            throw NonConvergence(static_cast<std::size_t>(step),
                                 "power flow did not converge after " + std::to_string(sol.iterations) +
                                     " iterations (max mismatch " + format_number(sol.max_mismatch) +
                                     " pu)");
        }
        for (std::size_t i = 0; i < net.buses.size(); ++i) {
            record(net.buses[i].id.str(), Quantity::VMag, sol.v_mag[i] * base.v_base);
            record(net.buses[i].id.str(), Quantity::VAngle, sol.v_angle[i]);
        }
        record(grid_object, Quantity::PGrid, sol.slack_injection.real() * base.s_base + slack_local);
        record(kNetworkObject, Quantity::Losses,
               line_losses(net, base, sol.v_mag, sol.v_angle) * base.s_base);
    }
    sort_records(table);
    return table;
}

inline constexpr const char* kResultsCsvHeader = "step,hour,object,quantity,value,unit";

/// Results CSV. `comments` are written first, each prefixed with "# ".
inline void write_csv(std::ostream& out, ResultTable table, const std::vector<std::string>& comments = {}) {
    sort_records(table);
    for (const auto& c : comments) out << "# " << c << '\n';
    out << kResultsCsvHeader << '\n';
    for (const auto& r : table) {
        out << r.step << ',' << r.hour << ',' << r.object << ',' << to_string(r.quantity) << ','
            << format_number(r.value) << ',' << r.unit << '\n';
    }
}

inline void write_csv(const ResultTable& table, const std::filesystem::path& path,
                      const std::vector<std::string>& comments = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write_csv(out, table, comments);
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline ResultTable read_csv(std::istream& in) {
    ResultTable table;
    std::string line;
    bool header_seen = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line != kResultsCsvHeader) {
                throw FormatError(std::string("results CSV: header must be '") + kResultsCsvHeader + "'");
            }
            header_seen = true;
            continue;
        }
        auto fail = [&](const std::string& msg) {
            return FormatError("results CSV line " + std::to_string(line_no) + ": " + msg);
        };
        const auto cells = split(line, ',');
        if (cells.size() != 6) throw fail("expected 6 columns");
        const auto step = parse_int(cells[0]);
        const auto hour = parse_int(cells[1]);
        const auto q = quantity_from_string(cells[3]);
        const auto value = parse_double(cells[4]);
        if (!step || !hour || !value) throw fail("non-numeric cell");
        if (!q) throw fail("unknown quantity '" + std::string(cells[3]) + "'");
        table.push_back({static_cast<int>(*step), static_cast<int>(*hour), std::string(cells[2]), *q,
                         *value, std::string(cells[5])});
    }
    if (!header_seen) throw FormatError("results CSV: missing header");
    return table;
}

inline ResultTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return read_csv(in);
}

struct SummaryRow {
    std::string object;
    Quantity quantity = Quantity::CloudFactor;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

/// Quantile of sorted data, interpolating linearly at zero-based rank p*(n-1).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    const double rank = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Box-plot statistics per object for one quantity.
inline std::vector<SummaryRow> summarize(const ResultTable& table, std::string_view quantity) {
    std::vector<std::string_view> present;
    for (const auto& r : table) {
        const auto name = to_string(r.quantity);
        if (std::find(present.begin(), present.end(), name) == present.end()) present.push_back(name);
    }
    const auto q = quantity_from_string(quantity);
    if (!q || std::find(present.begin(), present.end(), quantity) == present.end()) {
        std::string avail;
        for (const auto& p : present) avail += (avail.empty() ? "" : ", ") + std::string(p);
        throw InvalidParameter("unknown quantity '" + std::string(quantity) + "'; available: " +
                               (avail.empty() ? "(none)" : avail));
    }

    std::map<std::string, std::vector<double>> series;
    for (const auto& r : table) {
        if (r.quantity == *q) series[r.object].push_back(r.value);
    }
    std::vector<SummaryRow> rows;
    for (auto& [object, values] : series) {
        std::sort(values.begin(), values.end());
        // Running mean: exact for constant series.
        double mean = 0.0;
        for (std::size_t k = 0; k < values.size(); ++k) {
            mean += (values[k] - mean) / static_cast<double>(k + 1);
        }
        rows.push_back({object, *q, values.front(), quantile_sorted(values, 0.25),
                        quantile_sorted(values, 0.5), quantile_sorted(values, 0.75), values.back(),
                        mean});
    }
    return rows;
}

}  // namespace mgsim
