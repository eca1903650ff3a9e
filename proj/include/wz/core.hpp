#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wz/error.hpp"

namespace wz {

enum class VehicleClass { small, large };

inline const char* to_string(VehicleClass c) { return c == VehicleClass::small ? "small" : "large"; }

/// One raw trajectory sample in the road frame (+x along travel direction).
struct TrajectorySample {
    double t = 0.0; ///< s
    double x = 0.0; ///< m, along-road
    double y = 0.0; ///< m, lateral
    double v = 0.0; ///< m/s, may be recomputed on ingest
};

struct VehicleTrack {
    int vehicle_id = 0;
    VehicleClass vehicle_class = VehicleClass::small;
    std::vector<TrajectorySample> samples;
    double sample_rate_hz = 10.0;

    double dt() const { return 1.0 / sample_rate_hz; }
};

/// Trajectory sample enriched with derived kinematic quantities.
struct KinematicSample {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double v = 0.0;       ///< m/s
    double rho = 0.0;     ///< signed curvature radius, m; +inf on straight motion
    double a_x = 0.0;     ///< longitudinal (tangential) acceleration, m/s^2
    double a_y = 0.0;     ///< lateral (normal) acceleration, m/s^2
    double heading = 0.0; ///< rad
};

struct KinematicTrack {
    int vehicle_id = 0;
    VehicleClass vehicle_class = VehicleClass::small;
    std::vector<KinematicSample> samples;
    double sample_rate_hz = 10.0;

    double dt() const { return 1.0 / sample_rate_hz; }
};

enum class TransitionStyle { stepped, gradual };

inline const char* to_string(TransitionStyle s) { return s == TransitionStyle::stepped ? "stepped" : "gradual"; }

/// Sequential control areas of a work zone, ordered along +x.
enum class Region {
    Upstream = 0,
    Warning,
    UpstreamTransition,
    Buffer,
    Work,
    DownstreamTransition,
    Termination,
    Downstream,
};

inline const char* to_string(Region r) {
    switch (r) {
        case Region::Upstream: return "upstream";
        case Region::Warning: return "warning";
        case Region::UpstreamTransition: return "upstream_transition";
        case Region::Buffer: return "buffer";
        case Region::Work: return "work";
        case Region::DownstreamTransition: return "downstream_transition";
        case Region::Termination: return "termination";
        case Region::Downstream: return "downstream";
    }
    return "?";
}

/// Longitudinal geometry and lane configuration of a work zone.
///
/// Lane 0 is the rightmost lane; lane centerlines sit at y = (lane + 0.5) * lane_width.
struct WorkZoneLayout {
    double warning_length = 500.0;
    std::optional<double> warning_speed_limit_kmh; ///< absent = no posted limit
    double upstream_transition_length = 30.0;
    TransitionStyle upstream_transition_style = TransitionStyle::stepped;
    double buffer_length = 80.0;
    double work_length = 170.0;
    double downstream_transition_length = 30.0;
    double termination_length = 30.0;
    int lane_count = 4;
    std::set<int> closed_lanes = {0, 1};
    double lane_width = 3.5;
    double zone_start_x = 0.0;

    double warning_end() const { return zone_start_x + warning_length; }
    double transition_start() const { return warning_end(); }
    double transition_end() const { return transition_start() + upstream_transition_length; }
    double buffer_end() const { return transition_end() + buffer_length; }
    double work_end() const { return buffer_end() + work_length; }
    double downstream_transition_end() const { return work_end() + downstream_transition_length; }
    double zone_end_x() const { return downstream_transition_end() + termination_length; }

    double lane_center_y(int lane) const { return (lane + 0.5) * lane_width; }
    double road_width() const { return lane_count * lane_width; }
    bool is_closed(int lane) const { return closed_lanes.count(lane) > 0; }
};

/// Acceleration magnitudes above which passengers judge the ride unsafe.
struct ComfortThresholds {
    double lat_max = 3.6;       ///< |a_y| bound, m/s^2
    double lon_accel_max = 1.25; ///< a_x bound while speeding up, m/s^2
    double lon_decel_max = 2.5;  ///< |a_x| bound while braking, m/s^2
};

/// Region containing position x. Points exactly on a boundary belong to the
/// downstream-adjacent region.
inline Region region_of(double x, const WorkZoneLayout& layout) {
    if (x < layout.zone_start_x) return Region::Upstream;
    if (x < layout.warning_end()) return Region::Warning;
    if (x < layout.transition_end()) return Region::UpstreamTransition;
    if (x < layout.buffer_end()) return Region::Buffer;
    if (x < layout.work_end()) return Region::Work;
    if (x < layout.downstream_transition_end()) return Region::DownstreamTransition;
    if (x < layout.zone_end_x()) return Region::Termination;
    return Region::Downstream;
}

inline std::vector<std::string> validate_layout(const WorkZoneLayout& layout) {
    std::vector<std::string> violations;
    auto non_negative = [&](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) violations.push_back(std::string(name) + " < 0");
    };
    non_negative(layout.warning_length, "warning_length");
    non_negative(layout.upstream_transition_length, "upstream_transition_length");
    non_negative(layout.buffer_length, "buffer_length");
    non_negative(layout.work_length, "work_length");
    non_negative(layout.downstream_transition_length, "downstream_transition_length");
    non_negative(layout.termination_length, "termination_length");
    if (layout.lane_count < 1) violations.push_back("lane_count < 1");
    if (!(layout.lane_width > 0.0)) violations.push_back("lane_width <= 0");
    if (layout.closed_lanes.empty()) violations.push_back("closed_lanes empty");
    for (int lane : layout.closed_lanes) {
        if (lane < 0 || lane >= layout.lane_count) {
            violations.push_back("closed lane " + std::to_string(lane) + " out of range");
        }
    }
    if (static_cast<int>(layout.closed_lanes.size()) >= layout.lane_count) {
        violations.push_back("closed_lanes covers every lane");
    }
    if (layout.warning_speed_limit_kmh && !(*layout.warning_speed_limit_kmh > 0.0)) {
        violations.push_back("warning_speed_limit_kmh <= 0");
    }
    return violations;
}

inline std::vector<std::string> validate_thresholds(const ComfortThresholds& t) {
    std::vector<std::string> violations;
    if (!(t.lat_max > 0.0)) violations.push_back("lat_max <= 0");
    if (!(t.lon_accel_max > 0.0)) violations.push_back("lon_accel_max <= 0");
    if (!(t.lon_decel_max > 0.0)) violations.push_back("lon_decel_max <= 0");
    return violations;
}

} // namespace wz
