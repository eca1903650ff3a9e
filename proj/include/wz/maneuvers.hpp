#pragma once

// Parametric maneuver generators. They produce position-level tracks for the
// eleven behavior types; the label cascade applied to the derived features is
// the ground truth when these feed classifier training.

#include <cmath>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "wz/classify.hpp"
#include "wz/core.hpp"
#include "wz/kinematics.hpp"

namespace wz {

namespace detail {

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

} // namespace detail

/// Straight driving with piecewise-constant longitudinal acceleration.
inline VehicleTrack straight_maneuver(double v0, const std::vector<std::pair<double, double>>& segments,
                                      double rate_hz = 10.0, int id = 1) {
    VehicleTrack tr;
    tr.vehicle_id = id;
    tr.sample_rate_hz = rate_hz;
    const double dt = 1.0 / rate_hz;
    double t = 0.0, x = 0.0, v = v0;
    tr.samples.push_back({t, x, 0.0, v});
    for (const auto& [dur, a] : segments) {
        const auto steps = static_cast<std::size_t>(std::round(dur * rate_hz));
        for (std::size_t i = 0; i < steps; ++i) {
            x += v * dt + 0.5 * a * dt * dt;
            v = std::max(0.0, v + a * dt);
            t += dt;
            tr.samples.push_back({t, x, 0.0, v});
        }
    }
    return tr;
}

/// Constant-speed lane change: y follows a half-cosine from 0 to dy over T
/// seconds. Peak lateral acceleration is dy/2 * (pi/T)^2.
inline VehicleTrack lane_change_maneuver(double v, double dy, double T, double rate_hz = 10.0, double lead_s = 2.0,
                                         double tail_s = 2.0, int id = 1) {
    VehicleTrack tr;
    tr.vehicle_id = id;
    tr.sample_rate_hz = rate_hz;
    const double dt = 1.0 / rate_hz;
    const double total = lead_s + T + tail_s;
    const auto n = static_cast<std::size_t>(total * rate_hz);
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) * dt;
        double y = 0.0;
        if (t >= lead_s && t < lead_s + T) {
            y = 0.5 * dy * (1.0 - std::cos(std::numbers::pi * (t - lead_s) / T));
        } else if (t >= lead_s + T) {
            y = dy;
        }
        tr.samples.push_back({t, v * t, y, v});
    }
    return tr;
}

/// Arc turn through a signed total heading change, optionally with a speed
/// change during the turn, padded straight before and after.
inline VehicleTrack arc_maneuver(double v, double dpsi, double turn_s, double accel = 0.0, double rate_hz = 10.0,
                                 double lead_s = 1.0, double tail_s = 1.0, int id = 1) {
    VehicleTrack tr;
    tr.vehicle_id = id;
    tr.sample_rate_hz = rate_hz;
    const double dt = 1.0 / rate_hz;
    double x = 0.0, y = 0.0, psi = 0.0, t = 0.0, vv = v;
    const double total = lead_s + turn_s + tail_s;
    const auto n = static_cast<std::size_t>(total * rate_hz);
    for (std::size_t i = 0; i <= n; ++i) {
        tr.samples.push_back({t, x, y, vv});
        const bool turning = t >= lead_s && t < lead_s + turn_s;
        psi += (turning ? dpsi / turn_s : 0.0) * dt;
        vv = std::max(1.0, vv + (turning ? accel : 0.0) * dt);
        x += vv * std::cos(psi) * dt;
        y += vv * std::sin(psi) * dt;
        t += dt;
    }
    return tr;
}

/// Randomized representative of one behavior class. Parameters are drawn well
/// inside the decision regions so the class identity is unambiguous.
inline VehicleTrack maneuver_for_label(BehaviorLabel label, std::mt19937_64& rng, int id = 1) {
    using detail::uniform_in;
    const double v = uniform_in(rng, 12.0, 28.0);
    switch (label) {
        case BehaviorLabel::L_C:
            return straight_maneuver(v, {{uniform_in(rng, 3.0, 6.0), uniform_in(rng, -0.15, 0.15)}}, 10.0, id);
        case BehaviorLabel::L_A:
            return straight_maneuver(v, {{uniform_in(rng, 2.5, 5.0), uniform_in(rng, 0.5, 2.4)}}, 10.0, id);
        case BehaviorLabel::L_D:
            return straight_maneuver(v, {{uniform_in(rng, 2.5, 5.0), uniform_in(rng, -2.4, -0.5)}}, 10.0, id);
        case BehaviorLabel::TL_C:
            return arc_maneuver(v, uniform_in(rng, 0.22, 0.5), uniform_in(rng, 3.0, 5.0), 0.0, 10.0, 1.0, 1.0, id);
        case BehaviorLabel::TR_C:
            return arc_maneuver(v, -uniform_in(rng, 0.22, 0.5), uniform_in(rng, 3.0, 5.0), 0.0, 10.0, 1.0, 1.0, id);
        case BehaviorLabel::TL_A:
            return arc_maneuver(v, uniform_in(rng, 0.22, 0.5), uniform_in(rng, 3.0, 5.0), uniform_in(rng, 0.6, 1.8),
                                10.0, 1.0, 1.0, id);
        case BehaviorLabel::TR_A:
            return arc_maneuver(v, -uniform_in(rng, 0.22, 0.5), uniform_in(rng, 3.0, 5.0), uniform_in(rng, 0.6, 1.8),
                                10.0, 1.0, 1.0, id);
        case BehaviorLabel::TL_D:
            return arc_maneuver(v, uniform_in(rng, 0.22, 0.5), uniform_in(rng, 3.0, 5.0), uniform_in(rng, -1.8, -0.6),
                                10.0, 1.0, 1.0, id);
        case BehaviorLabel::TR_D:
            return arc_maneuver(v, -uniform_in(rng, 0.22, 0.5), uniform_in(rng, 3.0, 5.0),
                                uniform_in(rng, -1.8, -0.6), 10.0, 1.0, 1.0, id);
        case BehaviorLabel::TL_CL:
            return lane_change_maneuver(v, uniform_in(rng, 2.6, 3.6), uniform_in(rng, 2.4, 4.0), 10.0, 1.5, 1.5, id);
        case BehaviorLabel::TR_CL:
            return lane_change_maneuver(v, -uniform_in(rng, 2.6, 3.6), uniform_in(rng, 2.4, 4.0), 10.0, 1.5, 1.5, id);
    }
    return straight_maneuver(v, {{4.0, 0.0}}, 10.0, id);
}

/// Whole-track features of a maneuver, plus its rule label.
inline LabeledFeatures labeled_features_for(const VehicleTrack& track, double lane_width = 3.5,
                                            const RuleConfig& rule = {}) {
    const KinematicTrack kt = derive_kinematics(track);
    UnsafeInterval span;
    span.t_start = kt.samples.front().t;
    span.t_end = kt.samples.back().t;
    LabeledFeatures lf;
    lf.features = extract_features(kt, span);
    lf.label = rule_label(lf.features, lane_width, rule);
    return lf;
}

/// Deterministic labeled corpus: per_class examples of each behavior type.
inline std::vector<LabeledFeatures> synthetic_corpus(int per_class, std::uint64_t seed, double lane_width = 3.5) {
    std::mt19937_64 rng(seed);
    std::vector<LabeledFeatures> out;
    out.reserve(static_cast<std::size_t>(per_class) * kLabelCount);
    int id = 0;
    for (BehaviorLabel label : all_labels()) {
        for (int i = 0; i < per_class; ++i) {
            out.push_back(labeled_features_for(maneuver_for_label(label, rng, ++id), lane_width));
        }
    }
    return out;
}

} // namespace wz
