#pragma once

#include <map>
#include <optional>
#include <vector>

#include "wz/classify.hpp"
#include "wz/density.hpp"
#include "wz/detect.hpp"
#include "wz/kinematics.hpp"
#include "wz/microsim.hpp"

namespace wz {

enum class ClassifierMode { rule, svm };

struct AnalysisConfig {
    DetectionConfig detection;
    ClassifierMode mode = ClassifierMode::rule;
    std::optional<ClassifierModel> model;
    RuleConfig rule;
    double min_peak = 1e-3; ///< density floor for cluster extraction
};

inline BehaviorLabel classify_segment(const FeatureVector& f, double lane_width, const AnalysisConfig& cfg) {
    if (cfg.mode == ClassifierMode::svm && cfg.model) return cfg.model->predict(f);
    return rule_label(f, lane_width, cfg.rule);
}

/// Position of a track at time t, linearly interpolated.
inline std::pair<double, double> position_at(const KinematicTrack& kt, double t) {
    const auto& s = kt.samples;
    if (t <= s.front().t) return {s.front().x, s.front().y};
    if (t >= s.back().t) return {s.back().x, s.back().y};
    const double dt = kt.dt();
    const auto i = static_cast<std::size_t>((t - s.front().t) / dt);
    const std::size_t j = std::min(i + 1, s.size() - 1);
    const double frac = dt > 0 ? (t - s[i].t) / dt : 0.0;
    return {s[i].x + (s[j].x - s[i].x) * frac, s[i].y + (s[j].y - s[i].y) * frac};
}

/// Detection + classification over one kinematic track.
inline std::vector<BehaviorSegment> segments_of(const KinematicTrack& kt, const WorkZoneLayout& layout,
                                                const AnalysisConfig& cfg) {
    std::vector<BehaviorSegment> out;
    for (const UnsafeInterval& iv : extract_unsafe_segments(kt, cfg.detection)) {
        BehaviorSegment seg;
        seg.vehicle_id = kt.vehicle_id;
        seg.interval = iv;
        seg.features = extract_features(kt, iv);
        seg.label = classify_segment(seg.features, layout.lane_width, cfg);
        const auto [cx, cy] = position_at(kt, iv.t_peak);
        seg.centroid_x = cx;
        seg.centroid_y = cy;
        out.push_back(seg);
    }
    return out;
}

/// Full analysis path: raw tracks to labeled unsafe segments.
inline std::vector<BehaviorSegment> analyze_tracks(const std::vector<VehicleTrack>& tracks,
                                                   const WorkZoneLayout& layout, const AnalysisConfig& cfg) {
    std::vector<BehaviorSegment> out;
    for (const VehicleTrack& tr : tracks) {
        if (tr.samples.size() < 5) continue;
        const KinematicTrack kt = derive_kinematics(tr);
        auto segs = segments_of(kt, layout, cfg);
        out.insert(out.end(), segs.begin(), segs.end());
    }
    return out;
}

/// Grid extent used when a scenario does not pin one explicitly: the zone
/// plus 600 m upstream and 200 m downstream, across the full road width.
inline DensityGridSpec default_grid_for(const WorkZoneLayout& layout) {
    DensityGridSpec g;
    g.x_min = layout.zone_start_x - 600.0;
    g.x_max = layout.zone_end_x() + 200.0;
    g.y_min = -2.0;
    g.y_max = layout.road_width() + 2.0;
    return g;
}

inline std::map<BehaviorLabel, std::vector<WeightedPoint>> segment_points(const std::vector<BehaviorSegment>& segs) {
    std::map<BehaviorLabel, std::vector<WeightedPoint>> pts;
    for (const BehaviorSegment& s : segs) pts[s.label].push_back({s.centroid_x, s.centroid_y, 1.0});
    return pts;
}

inline LabelFields density_fields(const std::vector<BehaviorSegment>& segs, const DensityGridSpec& grid) {
    LabelFields fields;
    for (const auto& [label, pts] : segment_points(segs)) fields[label] = kde(pts, grid, label);
    return fields;
}

/// Simulate every replication of a scenario, analyze each, and fold the
/// per-replication density fields into one report.
inline AssessmentReport assess_scenario(const ScenarioConfig& scenario, const AnalysisConfig& cfg,
                                        const DensityGridSpec& grid) {
    std::vector<LabelFields> reps;
    for (const ReplicationResult& rep : run_scenario(scenario)) {
        const auto segs = analyze_tracks(rep.tracks, scenario.layout, cfg);
        reps.push_back(density_fields(segs, grid));
    }
    return build_report(reps, scenario.layout, cfg.min_peak, scenario.name);
}

} // namespace wz
