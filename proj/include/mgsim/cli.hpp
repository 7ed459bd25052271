#pragma once

// Command-line front end. Exit codes: 0 success, 1 parse/validation/usage
// error, 2 solver non-convergence.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mgsim/errors.hpp"
#include "mgsim/scenario.hpp"
#include "mgsim/simulation.hpp"

namespace mgsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNonConvergence = 2;

namespace detail {

inline std::optional<std::string> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Reads and parses a scenario file, printing errors as path:line:col.
inline std::optional<Scenario> load_scenario(const std::string& path, std::ostream& err,
                                             std::size_t* error_count = nullptr) {
    const auto text = read_file(path);
    if (!text) {
        err << "error: cannot read scenario '" << path << "'\n";
        if (error_count) *error_count = 1;
        return std::nullopt;
    }
    auto result = parse_scenario(*text);
    for (const auto& e : result.errors) err << path << ':' << format_error(e) << '\n';
    if (error_count) *error_count = result.errors.size();
    return std::move(result.scenario);
}

inline std::vector<std::string> effective_config(const std::string& path, const Scenario& sc) {
    const auto base = sc.per_unit_base();
    std::vector<std::string> lines = {
        "scenario = " + path,
        "steps = " + std::to_string(sc.config.steps),
        "start_hour = " + std::to_string(sc.config.start_hour),
        "solver = " + std::string(to_string(sc.config.solver)),
        "seed = " + std::to_string(sc.config.seed),
        "s_base_va = " + format_number(base.s_base),
        "v_base_v = " + format_number(base.v_base),
    };
    if (const auto* trace = std::get_if<std::string>(&sc.weather)) {
        lines.push_back("weather = trace " + *trace);
    } else {
        const auto& p = std::get<WeatherParams>(sc.weather);
        lines.push_back("weather = weibull_shape " + format_number(p.weibull_shape) + " weibull_scale_mps " +
                        format_number(p.weibull_scale) + " cloud_step " + format_number(p.cloud_step) +
                        " cloud_initial " + format_number(p.cloud_initial) + " temp_mean_c " +
                        format_number(p.temp_mean) + " temp_amplitude_c " + format_number(p.temp_amplitude));
    }
    return lines;
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Microgrid power-flow simulator", "mgsim"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::optional<int> steps;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> solver;
    std::optional<std::string> weather_csv;
    std::optional<std::string> out_path;
    auto* run = app.add_subcommand("run", "Run a scenario and write the results CSV");
    run->add_option("scenario", scenario_path, "Scenario file (.mgs)")->required();
    run->add_option("--steps", steps, "Number of hourly steps")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Weather RNG seed");
    run->add_option("--solver", solver, "acpf, gs or simple")
        ->check(CLI::IsMember({"acpf", "gs", "simple"}));
    run->add_option("--weather-csv", weather_csv, "Weather trace CSV (replaces the generator)");
    run->add_option("--out", out_path, "Output CSV (default: standard output)");

    std::string validate_path;
    auto* val = app.add_subcommand("validate", "Parse and validate a scenario");
    val->add_option("scenario", validate_path, "Scenario file (.mgs)")->required();

    std::string results_path;
    std::optional<std::string> quantity;
    auto* sum = app.add_subcommand("summarize", "Box-plot statistics of a results CSV");
    sum->add_option("results", results_path, "Results CSV")->required();
    sum->add_option("--quantity", quantity, "Quantity to summarize (default: all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*run) {
            auto sc = detail::load_scenario(scenario_path, err);
            if (!sc) return kExitUsage;
            if (steps) sc->config.steps = *steps;
            if (seed) sc->config.seed = *seed;
            if (solver) sc->config.solver = *solver_from_string(*solver);
            std::filesystem::path base_dir = std::filesystem::path(scenario_path).parent_path();
            if (weather_csv) {
                sc->weather = *weather_csv;
                base_dir.clear();  // command-line paths are relative to the working directory
            }
            const auto table = run_simulation(*sc, base_dir);
            const auto comments = detail::effective_config(scenario_path, *sc);
            if (out_path) {
                write_csv(table, *out_path, comments);
            } else {
                write_csv(out, table, comments);
            }
            return kExitOk;
        }
        if (*val) {
            std::size_t count = 0;
            detail::load_scenario(validate_path, err, &count);
            out << count << " diagnostics\n";
            return count == 0 ? kExitOk : kExitUsage;
        }
        if (*sum) {
            const auto table = read_csv(results_path);
            std::vector<std::string> quantities;
            if (quantity) {
                quantities.push_back(*quantity);
            } else {
                for (const auto name : kQuantityNames) {
                    const bool present = std::any_of(table.begin(), table.end(), [&](const ResultRecord& r) {
                        return to_string(r.quantity) == name;
                    });
                    if (present) quantities.emplace_back(name);
                }
            }
            out << "object,quantity,min,q1,median,q3,max,mean\n";
            for (const auto& q : quantities) {
                for (const auto& row : summarize(table, q)) {
                    out << row.object << ',' << to_string(row.quantity) << ',' << format_number(row.min) << ','
                        << format_number(row.q1) << ',' << format_number(row.median) << ','
                        << format_number(row.q3) << ',' << format_number(row.max) << ','
                        << format_number(row.mean) << '\n';
                }
            }
            return kExitOk;
        }
    } catch (const NonConvergence& e) {
        err << "error: solver did not converge at " << e.what() << '\n';
        return kExitNonConvergence;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace mgsim
