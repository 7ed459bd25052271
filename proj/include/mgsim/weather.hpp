#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mgsim/errors.hpp"
#include "mgsim/text.hpp"

namespace mgsim {

struct WeatherSample {
    int step = 0;
    int hour_of_day = 0;
    double cloud_factor = 0.0;  ///< 0 clear, 1 fully overcast
    double wind_speed = 0.0;    ///< m/s
    double temperature = 0.0;   ///< degC

    bool operator==(const WeatherSample&) const = default;
};

struct WeatherParams {
    double weibull_shape = 2.0;
    double weibull_scale = 6.0;  ///< m/s
    double cloud_step = 0.15;
    double cloud_initial = 0.5;
    double temp_mean = 15.0;
    double temp_amplitude = 5.0;
    std::uint64_t seed = 0;

    bool operator==(const WeatherParams&) const = default;
};

/// SplitMix64 generator state. Bit-exact across platforms.
struct RngState {
    std::uint64_t state = 0;
};

/// Advance the generator and return a uniform double in [0, 1) built from
/// the top 53 bits of the output.
inline double rng_next_uniform(RngState& rng) noexcept {
    rng.state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = rng.state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z = z ^ (z >> 31);
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

/// Inverse-CDF Weibull sample: scale * (-ln(1-u))^(1/shape).
inline double sample_wind(double u, double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0)) {
        throw InvalidParameter("sample_wind: shape and scale must be positive");
    }
    if (!(u >= 0.0) || u >= 1.0) {
        throw InvalidParameter("sample_wind: u must lie in [0, 1)");
    }
    if (u == 0.0) return 0.0;
    return scale * std::pow(-std::log1p(-u), 1.0 / shape);
}

/// Bounded random-walk cloud model.
inline double step_cloud(double prev, double u, double step) noexcept {
    return std::clamp(prev + step * (2.0 * u - 1.0), 0.0, 1.0);
}

inline double diurnal_temperature(const WeatherParams& p, int hour) noexcept {
    return p.temp_mean +
           p.temp_amplitude * std::cos(2.0 * std::numbers::pi * (hour - 15) / 24.0);
}

/// Hourly synthetic weather. Each step draws exactly two uniforms: the wind
/// draw first, then the cloud increment.
inline std::vector<WeatherSample> weather_series(const WeatherParams& params, int n_steps,
                                                 int start_hour) {
    if (n_steps < 1) throw InvalidParameter("weather_series: n_steps must be >= 1");
    if (start_hour < 0 || start_hour > 23) {
        throw InvalidParameter("weather_series: start_hour must be in 0..23");
    }
    if (params.cloud_initial < 0.0 || params.cloud_initial > 1.0 || params.cloud_step < 0.0) {
        throw InvalidParameter("weather_series: cloud parameters out of range");
    }

    RngState rng{params.seed};
    std::vector<WeatherSample> out;
    out.reserve(static_cast<std::size_t>(n_steps));
    double cloud = params.cloud_initial;
    for (int step = 0; step < n_steps; ++step) {
        const int hour = (start_hour + step) % 24;
        const double wind = sample_wind(rng_next_uniform(rng), params.weibull_shape,
                                        params.weibull_scale);
        cloud = step_cloud(cloud, rng_next_uniform(rng), params.cloud_step);
        out.push_back({step, hour, cloud, wind, diurnal_temperature(params, hour)});
    }
    return out;
}

inline constexpr const char* kWeatherCsvHeader =
    "step,hour,cloud_factor,wind_speed_mps,temperature_c";

inline void write_weather_csv(const std::vector<WeatherSample>& samples,
                              const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << kWeatherCsvHeader << '\n';
    for (const auto& s : samples) {
        out << s.step << ',' << s.hour_of_day << ',' << format_number(s.cloud_factor) << ','
            << format_number(s.wind_speed) << ',' << format_number(s.temperature) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::vector<WeatherSample> parse_weather_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("weather CSV: missing header");
    strip_cr(line);
    if (line != kWeatherCsvHeader) {
        throw FormatError(std::string("weather CSV: header must be '") + kWeatherCsvHeader +
                          "'");
    }

    std::vector<WeatherSample> out;
    int row = 0;
    while (std::getline(in, line)) {
        strip_cr(line);
        if (line.empty()) continue;
        ++row;
        const auto cells = split(line, ',');
        auto fail = [&](const std::string& msg) {
            return FormatError("weather CSV row " + std::to_string(row) + ": " + msg);
        };
        if (cells.size() != 5) {
            throw fail("expected 5 columns, found " + std::to_string(cells.size()));
        }
        WeatherSample s;
        const auto step = parse_int(cells[0]);
        const auto hour = parse_int(cells[1]);
        const auto cloud = parse_double(cells[2]);
        const auto wind = parse_double(cells[3]);
        const auto temp = parse_double(cells[4]);
        if (!step || !hour || !cloud || !wind || !temp) throw fail("non-numeric cell");
        if (*hour < 0 || *hour > 23) throw fail("hour outside 0..23");
        if (*cloud < 0.0 || *cloud > 1.0) throw fail("cloud_factor outside [0, 1]");
        if (*wind < 0.0) throw fail("negative wind speed");
        s.step = static_cast<int>(*step);
        s.hour_of_day = static_cast<int>(*hour);
        s.cloud_factor = *cloud;
        s.wind_speed = *wind;
        s.temperature = *temp;
        out.push_back(s);
    }
    if (out.empty()) throw FormatError("weather CSV: no samples");
    return out;
}

inline std::vector<WeatherSample> load_weather_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open weather trace '" + path.string() + "'");
    return parse_weather_csv(in);
}

}  // namespace mgsim
