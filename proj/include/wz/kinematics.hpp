#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "wz/core.hpp"
#include "wz/error.hpp"

namespace wz {

// Speeds below this are treated as standstill: no meaningful heading or
// curvature can be recovered, so both accelerations report 0.
inline constexpr double kEpsilonSpeed = 0.1;    // m/s
inline constexpr double kEpsilonDenom = 1e-9;   // straight-line cutoff for the curvature denominator
inline constexpr double kSamplingTol = 1e-6;    // s, allowed jitter of the sampling interval

/// Central-difference derivatives of a track. One sample is trimmed at each end.
struct TrackDerivatives {
    std::vector<double> t;   ///< timestamps of the retained samples
    std::vector<double> x, y;
    std::vector<double> xp, yp;   ///< first derivatives
    std::vector<double> xpp, ypp; ///< second derivatives
};

inline TrackDerivatives differentiate(const VehicleTrack& track) {
    const auto& s = track.samples;
    if (s.size() < 5) throw Error(Errc::TooShort, "track needs >= 5 samples, got " + std::to_string(s.size()));
    const double dt = track.dt();
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (std::abs((s[i].t - s[i - 1].t) - dt) > kSamplingTol) {
            throw Error(Errc::NonUniformSampling,
                        "vehicle " + std::to_string(track.vehicle_id) + " at sample " + std::to_string(i));
        }
    }
    TrackDerivatives d;
    const std::size_t n = s.size();
    d.t.reserve(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        d.t.push_back(s[i].t);
        d.x.push_back(s[i].x);
        d.y.push_back(s[i].y);
        d.xp.push_back((s[i + 1].x - s[i - 1].x) / (2.0 * dt));
        d.yp.push_back((s[i + 1].y - s[i - 1].y) / (2.0 * dt));
        d.xpp.push_back((s[i + 1].x - 2.0 * s[i].x + s[i - 1].x) / (dt * dt));
        d.ypp.push_back((s[i + 1].y - 2.0 * s[i].y + s[i - 1].y) / (dt * dt));
    }
    return d;
}

/// Signed curvature radius. Positive denominator means a right-hand turn in
/// this frame; straight motion reports +infinity.
inline double curvature_radius(double xp, double yp, double xpp, double ypp) {
    const double denom = xpp * yp - xp * ypp;
    if (std::abs(denom) < kEpsilonDenom) return std::numeric_limits<double>::infinity();
    const double speed_sq = xp * xp + yp * yp;
    return std::pow(speed_sq, 1.5) / denom;
}

struct AccelComponents {
    double v = 0.0;
    double a_x = 0.0;
    double a_y = 0.0;
};

inline AccelComponents accelerations(double xp, double yp, double xpp, double ypp) {
    AccelComponents out;
    out.v = std::hypot(xp, yp);
    if (out.v <= kEpsilonSpeed) return out; // standstill convention: both components 0
    out.a_x = (xp * xpp + yp * ypp) / out.v;
    out.a_y = (xpp * yp - xp * ypp) / out.v;
    return out;
}

inline KinematicTrack derive_kinematics(const VehicleTrack& track) {
    const TrackDerivatives d = differentiate(track);
    KinematicTrack out;
    out.vehicle_id = track.vehicle_id;
    out.vehicle_class = track.vehicle_class;
    out.sample_rate_hz = track.sample_rate_hz;
    out.samples.reserve(d.t.size());
    for (std::size_t i = 0; i < d.t.size(); ++i) {
        KinematicSample k;
        k.t = d.t[i];
        k.x = d.x[i];
        k.y = d.y[i];
        const AccelComponents a = accelerations(d.xp[i], d.yp[i], d.xpp[i], d.ypp[i]);
        k.v = a.v;
        k.a_x = a.a_x;
        k.a_y = a.a_y;
        if (a.v > kEpsilonSpeed) {
            k.rho = curvature_radius(d.xp[i], d.yp[i], d.xpp[i], d.ypp[i]);
            k.heading = std::atan2(d.yp[i], d.xp[i]);
        } else {
            k.rho = std::numeric_limits<double>::infinity();
            k.heading = i > 0 ? out.samples.back().heading : 0.0;
        }
        out.samples.push_back(k);
    }
    return out;
}

} // namespace wz
