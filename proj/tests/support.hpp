#pragma once

// Test-only track generators and independent oracles shared by the unit and
// acceptance suites.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "wz/core.hpp"
#include "wz/maneuvers.hpp"

namespace wztest {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

/// Analytic circle sampled at rate_hz: radius r, tangential speed v.
inline wz::VehicleTrack circle_track(double r, double v, double rate_hz, double duration_s, bool clockwise = false,
                                     int id = 1) {
    wz::VehicleTrack tr;
    tr.vehicle_id = id;
    tr.sample_rate_hz = rate_hz;
    const double omega = v / r * (clockwise ? -1.0 : 1.0);
    const double dt = 1.0 / rate_hz;
    const auto n = static_cast<std::size_t>(duration_s * rate_hz);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        tr.samples.push_back({t, r * std::cos(omega * t), r * std::sin(omega * t), v});
    }
    return tr;
}

inline wz::VehicleTrack straight_track(double v0, const std::vector<std::pair<double, double>>& segments,
                                       double rate_hz = 10.0, int id = 1) {
    return wz::straight_maneuver(v0, segments, rate_hz, id);
}

inline wz::VehicleTrack lane_change_track(double v, double dy, double T, double rate_hz = 10.0, double lead_s = 2.0,
                                          double tail_s = 2.0, int id = 1) {
    return wz::lane_change_maneuver(v, dy, T, rate_hz, lead_s, tail_s, id);
}

inline wz::VehicleTrack arc_track(double v, double dpsi, double turn_s, double rate_hz = 10.0, double lead_s = 2.0,
                                  double tail_s = 2.0, int id = 1) {
    return wz::arc_maneuver(v, dpsi, turn_s, 0.0, rate_hz, lead_s, tail_s, id);
}

/// Smooth random track built from a few low-frequency Fourier modes.
inline wz::VehicleTrack smooth_random_track(std::mt19937_64& rng, double rate_hz = 10.0, double duration_s = 20.0,
                                            int id = 1) {
    wz::VehicleTrack tr;
    tr.vehicle_id = id;
    tr.sample_rate_hz = rate_hz;
    const double dt = 1.0 / rate_hz;
    const double v0 = uniform(rng, 8.0, 25.0);
    struct Mode {
        double amp, omega, phase;
    };
    std::vector<Mode> mx, my;
    for (int k = 0; k < 3; ++k) {
        mx.push_back({uniform(rng, 0.5, 4.0), uniform(rng, 0.1, 0.6), uniform(rng, 0.0, 6.28)});
        my.push_back({uniform(rng, 0.5, 3.0), uniform(rng, 0.1, 0.6), uniform(rng, 0.0, 6.28)});
    }
    const auto n = static_cast<std::size_t>(duration_s * rate_hz);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        double x = v0 * t, y = 0.0;
        for (const Mode& m : mx) x += m.amp * std::sin(m.omega * t + m.phase);
        for (const Mode& m : my) y += m.amp * std::sin(m.omega * t + m.phase);
        tr.samples.push_back({t, x, y, v0});
    }
    return tr;
}

} // namespace wztest
