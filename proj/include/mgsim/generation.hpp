#pragma once

#include <cmath>
#include <numbers>

#include "mgsim/id.hpp"
#include "mgsim/weather.hpp"

namespace mgsim {

struct SolarPanel {
    Id id;
    BusId bus;
    double peak_power = 0.0;         ///< W
    double cloud_attenuation = 0.75; ///< output fraction lost under full overcast

    bool operator==(const SolarPanel&) const = default;
};

struct WindTurbine {
    Id id;
    BusId bus;
    double peak_power = 0.0;  ///< W
    double cut_in = 3.0;      ///< m/s
    double rated = 12.0;      ///< m/s
    double cut_out = 25.0;    ///< m/s

    bool operator==(const WindTurbine&) const = default;
};

/// Point of common coupling with the utility. Must sit on the slack bus.
struct GridConnection {
    Id id;
    BusId bus;

    bool operator==(const GridConnection&) const = default;
};

/// Daylight sine hump between 06:00 and 18:00, exactly zero outside (6, 18).
inline double clear_sky_factor(double hour) noexcept {
    if (hour <= 6.0 || hour >= 18.0) return 0.0;
    return std::sin(std::numbers::pi * (hour - 6.0) / 12.0);
}

inline double pv_power(const SolarPanel& panel, const WeatherSample& sample) noexcept {
    return panel.peak_power * clear_sky_factor(sample.hour_of_day) *
           (1.0 - panel.cloud_attenuation * sample.cloud_factor);
}

/// Piecewise power curve: cubic ramp from cut-in to rated, flat to cut-out,
/// zero above cut-out.
inline double wind_power(const WindTurbine& t, double wind_speed) noexcept {
    if (wind_speed < t.cut_in || wind_speed >= t.cut_out) return 0.0;
    if (wind_speed >= t.rated) return t.peak_power;
    const double x = (wind_speed - t.cut_in) / (t.rated - t.cut_in);
    return t.peak_power * x * x * x;
}

}  // namespace mgsim
