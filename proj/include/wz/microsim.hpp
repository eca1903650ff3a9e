#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "wz/core.hpp"
#include "wz/error.hpp"

namespace wz {

/// The five calibrated driving parameters.
struct DrivingParams {
    double cc0_standstill = 1.5;  ///< m, bumper-to-bumper gap at rest
    double cc1_headway = 0.7;     ///< s, desired time headway
    double cc2_variation = 4.0;   ///< m, width of the following oscillation band
    double diffusion_wait = 80.0; ///< s, blocked time before a vehicle is removed
    double min_headway = 0.5;     ///< m, minimum front gap accepted for a lane change

    std::vector<std::string> validate() const {
        std::vector<std::string> v;
        if (!(cc0_standstill > 0)) v.push_back("cc0_standstill <= 0");
        if (!(cc1_headway > 0)) v.push_back("cc1_headway <= 0");
        if (!(cc2_variation > 0)) v.push_back("cc2_variation <= 0");
        if (!(diffusion_wait > 0)) v.push_back("diffusion_wait <= 0");
        if (!(min_headway > 0)) v.push_back("min_headway <= 0");
        return v;
    }
};

/// Fixed gains of the simplified following law.
struct DrivingGains {
    double k_gap = 0.25;   ///< 1/s^2
    double k_speed = 0.6;  ///< 1/s
    double k_free = 0.4;   ///< 1/s
    double a_max = 3.5;    ///< m/s^2
    double a_max_follow = 1.2; ///< m/s^2, throttle restraint while car-following
    double a_max_in_change = 1.2; ///< m/s^2, throttle restraint while steering across lanes
    double b_max = 8.0;    ///< m/s^2, braking magnitude bound
    double deadband_dv = 0.05; ///< m/s
    double guard_decel = 6.0; ///< m/s^2 assumed in the safe-approach bound
};

/// Empirical cumulative speed distribution over ascending control points.
struct SpeedDistribution {
    std::vector<double> control_points_kmh;
    std::vector<double> cumulative;

    std::vector<std::string> validate() const {
        std::vector<std::string> v;
        if (control_points_kmh.size() != cumulative.size()) v.push_back("control point / cumulative size mismatch");
        if (control_points_kmh.empty()) v.push_back("empty distribution");
        for (std::size_t i = 1; i < control_points_kmh.size(); ++i) {
            if (control_points_kmh[i] <= control_points_kmh[i - 1]) v.push_back("control points not ascending");
            if (cumulative[i] < cumulative[i - 1]) v.push_back("cumulative not nondecreasing");
        }
        if (!cumulative.empty() && cumulative.back() != 1.0) v.push_back("cumulative must end at 1");
        return v;
    }

    /// Inverse-CDF sample with linear interpolation, clamped to the support.
    double sample_kmh(double u) const {
        if (u >= cumulative.back()) return control_points_kmh.back();
        std::size_t k = 0;
        while (k < cumulative.size() && cumulative[k] <= u) ++k;
        if (k == 0) return control_points_kmh.front();
        if (k >= cumulative.size()) return control_points_kmh.back();
        const double c0 = cumulative[k - 1], c1 = cumulative[k];
        const double p0 = control_points_kmh[k - 1], p1 = control_points_kmh[k];
        return p0 + (u - c0) / (c1 - c0) * (p1 - p0);
    }
};

struct DemandConfig {
    double volume_vph = 1760.0;
    double large_fraction = 0.22;
    SpeedDistribution desired_speed_small;
    SpeedDistribution desired_speed_large;

    std::vector<std::string> validate() const {
        std::vector<std::string> v;
        if (!(volume_vph > 0)) v.push_back("volume_vph <= 0");
        if (!(large_fraction >= 0 && large_fraction <= 1)) v.push_back("large_fraction outside [0,1]");
        for (const auto& s : desired_speed_small.validate()) v.push_back("small speed distribution: " + s);
        for (const auto& s : desired_speed_large.validate()) v.push_back("large speed distribution: " + s);
        return v;
    }
};

/// Merge-behavior tuning. Time pressure (how picky a driver stays about gaps)
/// and geometric pressure (how sharply the maneuver is driven) are separate:
/// an abrupt closure edge sharpens the maneuver without making the driver any
/// less gap-starved.
struct MergeTuning {
    double lane_change_duration = 3.0;     ///< s, relaxed maneuver
    double lane_change_min_duration = 1.2; ///< s, fully urgent maneuver
    double urgency_time_horizon = 12.0;    ///< s of travel considered "enough room"
    double urgency_distance_floor = 20.0;  ///< m
    double stepped_urgency_boost = 0.45;   ///< maneuver sharpening at an abrupt closure edge
    double late_merger_fraction = 0.25;    ///< drivers who ride the closing lane to the front
    double late_trigger_distance = 120.0;  ///< m before the transition where late mergers react
    double notice_distance_min = 200.0;    ///< m before the transition where others react
    double notice_distance_max = 300.0;
    double front_slack_s = 0.7;            ///< relaxed-state front gap slack per m/s
    double rear_slack_factor = 0.8;        ///< relaxed-state rear gap multiplier
    double min_path_length = 24.0;         ///< m, shortest longitudinal footprint of a lane change
    double wall_comfort_decel = 2.0;       ///< m/s^2 anticipatory braking toward the closure
    double discretionary_speed_deficit = 3.0; ///< m/s below desired before overtaking is considered
    double discretionary_cooldown = 10.0;     ///< s between discretionary changes
};

struct ScenarioConfig {
    WorkZoneLayout layout;
    DemandConfig demand;
    DrivingParams driving;
    std::optional<double> warning_speed_limit_override_kmh;
    double sim_duration_s = 3600.0;
    double warmup_s = 120.0;
    double step_dt_s = 0.1;
    std::uint64_t seed = 1;
    int replications = 3;
    double network_length = 0.0;            ///< 0 = zone end + 400 m
    std::vector<double> detector_positions; ///< empty = 1 km upstream + end of upstream transition
    bool record_tracks = true;
    std::string name;
    MergeTuning merge;
    DrivingGains gains;

    std::optional<double> effective_warning_limit_kmh() const {
        return warning_speed_limit_override_kmh ? warning_speed_limit_override_kmh
                                                : layout.warning_speed_limit_kmh;
    }

    double effective_network_length() const {
        return network_length > 0 ? network_length : layout.zone_end_x() + 400.0;
    }

    std::vector<double> effective_detectors() const {
        if (!detector_positions.empty()) return detector_positions;
        return {layout.zone_start_x - 1000.0, layout.transition_end()};
    }

    std::vector<std::string> validate() const {
        std::vector<std::string> v = validate_layout(layout);
        for (const auto& s : demand.validate()) v.push_back(s);
        for (const auto& s : driving.validate()) v.push_back(s);
        if (step_dt_s != 0.05 && step_dt_s != 0.1) v.push_back("step_dt_s must be 0.05 or 0.1");
        if (replications < 1) v.push_back("replications < 1");
        if (!(sim_duration_s > 0)) v.push_back("sim_duration_s <= 0");
        if (!(warmup_s >= 0)) v.push_back("warmup_s < 0");
        return v;
    }
};

struct LaneChange {
    int from_lane = 0;
    int to_lane = 0;
    double progress = 0.0; ///< 0..1
    double duration = 3.0; ///< s
    double y_from = 0.0;
    double y_to = 0.0;
};

struct VehicleState {
    int id = 0;
    VehicleClass klass = VehicleClass::small;
    int lane = 0;     ///< primary lane; switches at maneuver midpoint
    double s = 0.0;   ///< m, longitudinal position
    double v = 0.0;   ///< m/s
    double a = 0.0;   ///< m/s^2, last applied
    double desired_v = 0.0; ///< m/s, sampled at entry
    double length = 4.5;    ///< m
    std::optional<LaneChange> change;
    double wait_timer = 0.0; ///< s blocked awaiting a mandatory change
    std::optional<double> seek_speed; ///< m/s, slot-alignment target while gap-starved
    // driver traits
    bool late_merger = false;
    double notice_distance = 250.0;
    double last_discretionary_t = -1e9;
};

struct DetectorObservation {
    double t = 0.0;
    int vehicle_id = 0;
    VehicleClass klass = VehicleClass::small;
    double speed_kmh = 0.0;
};

struct DetectorRecord {
    double position = 0.0;
    std::vector<DetectorObservation> observations;
};

inline double sample_desired_speed(const SpeedDistribution& dist, double u) { return dist.sample_kmh(u); }

/// Core following law. Inside the oscillation band the controller only matches
/// the leader speed gently, so the gap does not hunt around its target.
inline double follow_accel_law(double v, double desired_v, bool has_leader, double gap, double leader_v,
                               const DrivingParams& p, const DrivingGains& g = {}) {
    double a;
    if (has_leader) {
        const double g_star = p.cc0_standstill + p.cc1_headway * v;
        if (gap < g_star + p.cc2_variation) {
            const double e = gap - g_star;
            const double dv = leader_v - v;
            if (std::abs(e) <= 0.5 * p.cc2_variation && std::abs(dv) <= g.deadband_dv) {
                a = g.k_speed * dv;
            } else {
                a = g.k_gap * e + g.k_speed * dv;
            }
            return std::clamp(a, -g.b_max, g.a_max_follow);
        }
    }
    a = g.k_free * (desired_v - v);
    return std::clamp(a, -g.b_max, g.a_max);
}

inline double follow_accel(const VehicleState& self, const VehicleState* leader, const DrivingParams& p,
                           const DrivingGains& g = {}) {
    if (leader) {
        const double gap = leader->s - leader->length - self.s;
        return follow_accel_law(self.v, self.desired_v, true, gap, leader->v, p, g);
    }
    return follow_accel_law(self.v, self.desired_v, false, 0.0, 0.0, p, g);
}

/// Highest speed the follower may hold this step and still be able to stop
/// behind the leader's stopping point, both braking at guard_decel.
inline double safe_speed(double gap, double leader_v, double dt, double margin, const DrivingGains& g = {}) {
    const double usable = gap - margin;
    if (usable <= 0) return 0.0;
    const double bd = g.guard_decel * dt;
    const double arg = bd * bd + leader_v * leader_v + 2.0 * g.guard_decel * usable;
    return std::max(0.0, -bd + std::sqrt(arg));
}

enum class DiffusionVerdict { keep, remove };

inline DiffusionVerdict diffusion_removal(const VehicleState& self, const DrivingParams& p) {
    return self.wait_timer >= p.diffusion_wait ? DiffusionVerdict::remove : DiffusionVerdict::keep;
}

/// Gap pair seen in a candidate target lane.
struct TargetGaps {
    std::optional<double> front_gap, front_v;
    std::optional<double> rear_gap, rear_v;
};

struct LaneChangeContext {
    double urgency = 0.0; ///< 0 relaxed .. 1 forced
    const DrivingParams* params = nullptr;
    const MergeTuning* merge = nullptr;
    const DrivingGains* gains = nullptr;
};

/// Gap acceptance. The spec minimums (front >= min_headway, rear >= cc0 +
/// cc1 * v_rear) always apply; relaxed drivers additionally demand slack that
/// melts away as urgency grows, and closing speed always costs extra room.
inline bool gaps_acceptable(const VehicleState& self, const TargetGaps& t, const LaneChangeContext& ctx) {
    const DrivingParams& p = *ctx.params;
    const MergeTuning& m = *ctx.merge;
    const double u = std::clamp(ctx.urgency, 0.0, 1.0);
    const double guard = ctx.gains ? ctx.gains->guard_decel : DrivingGains{}.guard_decel;
    if (t.front_gap) {
        double need = p.min_headway + (1.0 - u) * m.front_slack_s * self.v;
        const double fv = t.front_v.value_or(0.0);
        if (self.v > fv) need += (self.v * self.v - fv * fv) / (2.0 * guard);
        if (*t.front_gap < need) return false;
    }
    if (t.rear_gap) {
        const double rv = t.rear_v.value_or(0.0);
        double need = (p.cc0_standstill + p.cc1_headway * rv) * (1.0 + m.rear_slack_factor * (1.0 - u));
        if (rv > self.v) need = std::max(need, p.cc0_standstill + (rv * rv - self.v * self.v) / (2.0 * guard));
        if (*t.rear_gap < need) return false;
    }
    return true;
}

/// Maneuver duration: urgency compresses it, but the path cannot be shorter
/// longitudinally than min_path_length, so slow merges stay gentle.
inline double lane_change_duration_for(double urgency, double speed, const MergeTuning& m) {
    const double u = std::clamp(urgency, 0.0, 1.0);
    const double t_urgency = m.lane_change_duration - u * (m.lane_change_duration - m.lane_change_min_duration);
    const double t_path = m.min_path_length / std::max(speed, 2.0);
    return std::min(8.0, std::max(t_urgency, t_path));
}

struct LaneChangeDecision {
    bool begin = false;
    int target = 0;
    double duration = 3.0;
};

/// Mandatory-merge decision for a vehicle in a lane closed downstream.
/// Changes are not permitted upstream of the warning area. Gap pickiness
/// relaxes with time pressure alone; the maneuver itself sharpens further
/// when the closure edge is abrupt.
inline LaneChangeDecision mandatory_lane_change(const VehicleState& self, const TargetGaps& target_gaps,
                                                int target_lane, const WorkZoneLayout& layout,
                                                const DrivingParams& params, const MergeTuning& merge,
                                                const DrivingGains& gains = {}) {
    LaneChangeDecision d;
    if (self.change) return d;
    if (self.s < layout.zone_start_x) return d; // not yet allowed
    const double barrier = layout.transition_end();
    if (self.s >= barrier) return d;
    const double react_at = self.late_merger
                                ? layout.transition_start() - merge.late_trigger_distance
                                : std::max(layout.zone_start_x, layout.transition_start() - self.notice_distance);
    if (self.s < react_at) return d;
    const double room = barrier - self.s;
    const double horizon = merge.urgency_time_horizon * self.v + merge.urgency_distance_floor;
    const double time_pressure = 1.0 - std::clamp(room / horizon, 0.0, 1.0);
    double sharpness = time_pressure;
    if (layout.upstream_transition_style == TransitionStyle::stepped) {
        sharpness = std::min(1.0, sharpness + merge.stepped_urgency_boost);
    }
    LaneChangeContext ctx{time_pressure, &params, &merge, &gains};
    if (!gaps_acceptable(self, target_gaps, ctx)) return d;
    d.begin = true;
    d.target = target_lane;
    d.duration = lane_change_duration_for(sharpness, self.v, merge);
    return d;
}

struct SimCounts {
    std::int64_t injected = 0;
    std::int64_t exited = 0;
    std::int64_t removed_by_diffusion = 0;
    std::int64_t active = 0;
};

struct ReplicationResult {
    std::vector<VehicleTrack> tracks;
    std::vector<std::vector<int>> track_lanes; ///< per track, per sample
    std::vector<DetectorRecord> detectors;
    SimCounts counts;
    std::uint64_t seed = 0;
};

/// Deterministic fixed-step world. One instance runs one replication.
class World {
public:
    World(const ScenarioConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed), rng_(seed) {
        auto violations = cfg.validate();
        if (!violations.empty()) throw Error(Errc::InvalidConfig, violations.front());
        limit_mps_ = cfg.effective_warning_limit_kmh()
                         ? std::optional<double>(*cfg.effective_warning_limit_kmh() / 3.6)
                         : std::nullopt;
        network_length_ = cfg.effective_network_length();
        for (double pos : cfg.effective_detectors()) detectors_.push_back(DetectorRecord{pos, {}});
        const int lanes = cfg.layout.lane_count;
        lane_rate_ = cfg.demand.volume_vph / 3600.0 / static_cast<double>(lanes);
        next_arrival_.assign(lanes, 0.0);
        pending_.resize(lanes);
        for (int l = 0; l < lanes; ++l) next_arrival_[l] = exp_draw();
    }

    double time() const { return t_; }
    bool finished() const { return t_ >= cfg_.warmup_s + cfg_.sim_duration_s - 1e-9; }
    const std::vector<VehicleState>& vehicles() const { return vehicles_; }
    const ScenarioConfig& config() const { return cfg_; }

    SimCounts counts() const {
        SimCounts c;
        c.injected = injected_;
        c.exited = exited_;
        c.removed_by_diffusion = removed_;
        c.active = static_cast<std::int64_t>(vehicles_.size());
        return c;
    }

    double lateral_y(const VehicleState& v) const {
        double y;
        if (v.change) {
            const double p = std::clamp(v.change->progress, 0.0, 1.0);
            const double smooth = 0.5 * (1.0 - std::cos(std::numbers::pi * p));
            y = v.change->y_from + (v.change->y_to - v.change->y_from) * smooth;
        } else {
            y = cfg_.layout.lane_center_y(v.lane);
            if (cfg_.layout.upstream_transition_style == TransitionStyle::gradual && cfg_.layout.is_closed(v.lane) &&
                v.s > cfg_.layout.transition_start() && v.s < cfg_.layout.transition_end()) {
                const double frac = (v.s - cfg_.layout.transition_start()) / cfg_.layout.upstream_transition_length;
                y += 0.4 * cfg_.layout.lane_width * std::clamp(frac, 0.0, 1.0);
            }
        }
        return y;
    }

    void step() {
        const double dt = cfg_.step_dt_s;
        const double t_next = t_ + dt;
        rebuild_occupancy();
        const std::vector<int> order = processing_order();

        // Phase A: lane-change decisions and accelerations against current state.
        std::vector<double> accel(vehicles_.size(), 0.0);
        for (int idx : order) {
            VehicleState& v = vehicles_[idx];
            if (!v.change) decide_lane_change(idx);
            accel[idx] = acceleration_for(v);
        }

        // Phase B: integrate, advance maneuvers, cross detectors, record tracks.
        std::vector<int> to_remove;
        for (std::size_t i = 0; i < vehicles_.size(); ++i) {
            VehicleState& v = vehicles_[i];
            const double s_prev = v.s;
            v.a = accel[i];
            v.v = std::max(0.0, v.v + v.a * dt);
            if (v.v < 1e-3) v.v = 0.0;
            v.s += v.v * dt;
            if (v.change) {
                v.change->progress += dt / v.change->duration;
                if (v.change->progress >= 0.5) v.lane = v.change->to_lane;
                if (v.change->progress >= 1.0) v.change.reset();
            }
            if (wants_mandatory(v) && v.v < 0.5) {
                v.wait_timer += dt;
            } else {
                v.wait_timer = 0.0;
            }
            for (DetectorRecord& det : detectors_) {
                if (s_prev < det.position && v.s >= det.position && t_next >= cfg_.warmup_s) {
                    det.observations.push_back({t_next, v.id, v.klass, v.v * 3.6});
                }
            }
            if (cfg_.record_tracks && t_next >= cfg_.warmup_s) {
                recorder_[v.id].push_back({t_next, v.s, lateral_y(v), v.v, v.lane});
            }
            if (v.s - v.length > network_length_) {
                to_remove.push_back(static_cast<int>(i));
                ++exited_;
            } else if (diffusion_removal(v, cfg_.driving) == DiffusionVerdict::remove) {
                to_remove.push_back(static_cast<int>(i));
                ++removed_;
            }
        }
        remove_indices(to_remove);
        rebuild_occupancy();
        check_collisions();
        inject_arrivals(t_next);
        t_ = t_next;
    }

    void run_to_end() {
        while (!finished()) step();
    }

    ReplicationResult take_result() {
        for (const VehicleState& v : vehicles_) finalize_track(v.id, v.klass);
        ReplicationResult r;
        r.seed = seed_;
        r.counts = counts();
        r.detectors = detectors_;
        std::sort(finished_.begin(), finished_.end(),
                  [](const FinishedTrack& a, const FinishedTrack& b) { return a.track.vehicle_id < b.track.vehicle_id; });
        for (FinishedTrack& f : finished_) {
            r.tracks.push_back(std::move(f.track));
            r.track_lanes.push_back(std::move(f.lanes));
        }
        finished_.clear();
        return r;
    }

private:
    struct RawSample {
        double t, s, y, v;
        int lane;
    };

    double exp_draw() {
        const double u = uniform01();
        return -std::log1p(-u) / lane_rate_;
    }

    double uniform01() {
        return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    }

    bool wants_mandatory(const VehicleState& v) const {
        if (v.change) return false;
        if (!cfg_.layout.is_closed(v.lane)) return false;
        if (v.s < cfg_.layout.zone_start_x || v.s >= cfg_.layout.transition_end()) return false;
        const double react_at = v.late_merger
                                    ? cfg_.layout.transition_start() - cfg_.merge.late_trigger_distance
                                    : std::max(cfg_.layout.zone_start_x,
                                               cfg_.layout.transition_start() - v.notice_distance);
        return v.s >= react_at;
    }

    std::vector<int> occupied_lanes(const VehicleState& v) const {
        if (v.change) return {v.change->from_lane, v.change->to_lane};
        return {v.lane};
    }

    void rebuild_occupancy() {
        occupancy_.assign(cfg_.layout.lane_count, {});
        for (std::size_t i = 0; i < vehicles_.size(); ++i) {
            for (int lane : occupied_lanes(vehicles_[i])) occupancy_[lane].push_back(static_cast<int>(i));
        }
        for (auto& lane : occupancy_) {
            std::sort(lane.begin(), lane.end(), [this](int a, int b) {
                if (vehicles_[a].s != vehicles_[b].s) return vehicles_[a].s < vehicles_[b].s;
                return vehicles_[a].id < vehicles_[b].id;
            });
        }
    }

    std::vector<int> processing_order() const {
        std::vector<int> order(vehicles_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [this](int a, int b) {
            if (vehicles_[a].s != vehicles_[b].s) return vehicles_[a].s > vehicles_[b].s;
            return vehicles_[a].id < vehicles_[b].id;
        });
        return order;
    }

    const VehicleState* leader_in_lane(int lane, double s, int self_idx) const {
        const auto& occ = occupancy_[lane];
        const VehicleState* best = nullptr;
        for (int idx : occ) {
            if (idx == self_idx) continue;
            const VehicleState& o = vehicles_[idx];
            if (o.s >= s && (!best || o.s < best->s)) best = &o;
        }
        return best;
    }

    const VehicleState* follower_in_lane(int lane, double s, int self_idx) const {
        const auto& occ = occupancy_[lane];
        const VehicleState* best = nullptr;
        for (int idx : occ) {
            if (idx == self_idx) continue;
            const VehicleState& o = vehicles_[idx];
            if (o.s < s && (!best || o.s > best->s)) best = &o;
        }
        return best;
    }

    TargetGaps gaps_in_lane(int lane, const VehicleState& self, int self_idx) const {
        TargetGaps t;
        if (const VehicleState* f = leader_in_lane(lane, self.s, self_idx)) {
            t.front_gap = f->s - f->length - self.s;
            t.front_v = f->v;
        }
        if (const VehicleState* r = follower_in_lane(lane, self.s, self_idx)) {
            t.rear_gap = self.s - self.length - r->s;
            t.rear_v = r->v;
        }
        return t;
    }

    int merge_target(const VehicleState& v) const {
        return v.lane + 1 < cfg_.layout.lane_count ? v.lane + 1 : v.lane - 1;
    }

    void decide_lane_change(int idx) {
        VehicleState& v = vehicles_[idx];
        v.seek_speed.reset();
        if (wants_mandatory(v)) {
            const int target = merge_target(v);
            const TargetGaps tg = gaps_in_lane(target, v, idx);
            const LaneChangeDecision d =
                mandatory_lane_change(v, tg, target, cfg_.layout, cfg_.driving, cfg_.merge, cfg_.gains);
            if (d.begin) {
                begin_change(idx, d);
            } else {
                // Slot alignment: the adjacent gap will not improve on its own
                // when both lanes move at the same speed, so drift backward
                // relative to the target lane until a workable slot lines up.
                double neighbor_v = v.v;
                if (tg.front_v) neighbor_v = std::min(neighbor_v, *tg.front_v);
                if (tg.rear_v) neighbor_v = std::min(neighbor_v, *tg.rear_v);
                v.seek_speed = std::max(neighbor_v - 1.5, 3.0);
            }
            return;
        }
        // Discretionary overtaking: a clearly slower leader, a clearly better
        // lane, full-strictness gaps, and a cooldown against ping-ponging.
        if (cfg_.layout.is_closed(v.lane)) return;
        if (t_ - v.last_discretionary_t < cfg_.merge.discretionary_cooldown) return;
        const VehicleState* leader = leader_in_lane(v.lane, v.s, idx);
        if (!leader) return;
        const double own_gap = leader->s - leader->length - v.s;
        const double g_star = cfg_.driving.cc0_standstill + cfg_.driving.cc1_headway * v.v;
        if (leader->v > v.desired_v - cfg_.merge.discretionary_speed_deficit) return;
        if (own_gap > 1.5 * (g_star + cfg_.driving.cc2_variation)) return;
        for (int target : {v.lane + 1, v.lane - 1}) {
            if (target < 0 || target >= cfg_.layout.lane_count) continue;
            if (cfg_.layout.is_closed(target)) continue;
            const TargetGaps tg = gaps_in_lane(target, v, idx);
            const double target_front = tg.front_gap.value_or(std::numeric_limits<double>::infinity());
            if (target_front < 2.0 * own_gap) continue;
            LaneChangeContext ctx{0.0, &cfg_.driving, &cfg_.merge, &cfg_.gains};
            if (!gaps_acceptable(v, tg, ctx)) continue;
            LaneChangeDecision d;
            d.begin = true;
            d.target = target;
            d.duration = cfg_.merge.lane_change_duration;
            v.last_discretionary_t = t_;
            begin_change(idx, d);
            return;
        }
    }

    void begin_change(int idx, const LaneChangeDecision& d) {
        VehicleState& v = vehicles_[idx];
        LaneChange c;
        c.from_lane = v.lane;
        c.to_lane = d.target;
        c.progress = 0.0;
        c.duration = d.duration;
        c.y_from = lateral_y(v);
        c.y_to = cfg_.layout.lane_center_y(d.target);
        v.change = c;
        auto& occ = occupancy_[d.target];
        occ.push_back(idx);
        std::sort(occ.begin(), occ.end(), [this](int a, int b) {
            if (vehicles_[a].s != vehicles_[b].s) return vehicles_[a].s < vehicles_[b].s;
            return vehicles_[a].id < vehicles_[b].id;
        });
    }

    double effective_desired(const VehicleState& v) const {
        double desired = v.desired_v;
        if (limit_mps_) {
            if (v.s >= cfg_.layout.zone_start_x && v.s < cfg_.layout.downstream_transition_end()) {
                desired = std::min(desired, *limit_mps_);
            } else if (!v.late_merger && v.s < cfg_.layout.zone_start_x) {
                // Attentive drivers ease toward the posted limit; inattentive
                // ones brake at the sign.
                const double ahead = cfg_.layout.zone_start_x - v.s;
                desired = std::min(desired, std::sqrt(*limit_mps_ * *limit_mps_ + 2.0 * 1.8 * ahead));
            }
        }
        const bool sees_taper =
            !v.late_merger || cfg_.layout.upstream_transition_style == TransitionStyle::gradual;
        if (cfg_.layout.is_closed(v.lane) && sees_taper) {
            // Anticipatory slowdown toward the closure edge. A stepped edge
            // surprises late mergers at speed; a gradual taper is visible to
            // everyone from far upstream.
            const double barrier = cfg_.layout.transition_end();
            if (v.s < barrier) {
                const double usable = barrier - cfg_.driving.cc0_standstill - v.s;
                if (usable > 0) {
                    desired = std::min(desired, std::sqrt(2.0 * cfg_.merge.wall_comfort_decel * usable));
                } else {
                    desired = 0.0;
                }
            }
        }
        if (v.seek_speed) desired = std::min(desired, *v.seek_speed);
        return desired;
    }

    double acceleration_for(const VehicleState& v) const {
        const double dt = cfg_.step_dt_s;
        const double desired = effective_desired(v);
        const int self_idx = index_of(v);
        double a = std::clamp(cfg_.gains.k_free * (desired - v.v), -cfg_.gains.b_max, cfg_.gains.a_max);
        double v_cap = std::numeric_limits<double>::infinity();
        for (int lane : occupied_lanes(v)) {
            if (const VehicleState* leader = leader_in_lane(lane, v.s, self_idx)) {
                const double gap = leader->s - leader->length - v.s;
                a = std::min(a, follow_accel_law(v.v, desired, true, gap, leader->v, cfg_.driving, cfg_.gains));
                v_cap = std::min(v_cap, safe_speed(gap, leader->v, dt, 0.5, cfg_.gains));
            }
        }
        if (cfg_.layout.is_closed(v.lane) && v.s < cfg_.layout.transition_end()) {
            const double gap = cfg_.layout.transition_end() - v.s;
            a = std::min(a, follow_accel_law(v.v, desired, true, gap, 0.0, cfg_.driving, cfg_.gains));
            v_cap = std::min(v_cap, safe_speed(gap, 0.0, dt, 0.5, cfg_.gains));
        }
        if (std::isfinite(v_cap)) {
            const double a_guard = (v_cap - v.v) / dt;
            a = std::min(a, a_guard);
        }
        if (v.change) a = std::min(a, cfg_.gains.a_max_in_change);
        return std::clamp(a, -cfg_.gains.b_max, cfg_.gains.a_max);
    }

    int index_of(const VehicleState& v) const {
        return static_cast<int>(&v - vehicles_.data());
    }

    void remove_indices(std::vector<int>& indices) {
        if (indices.empty()) return;
        std::sort(indices.begin(), indices.end());
        for (auto it = indices.rbegin(); it != indices.rend(); ++it) {
            const VehicleState& v = vehicles_[*it];
            finalize_track(v.id, v.klass);
            vehicles_.erase(vehicles_.begin() + *it);
        }
    }

    void finalize_track(int id, VehicleClass klass) {
        auto it = recorder_.find(id);
        if (it == recorder_.end()) return;
        if (it->second.size() >= 5) {
            FinishedTrack f;
            f.track.vehicle_id = id;
            f.track.vehicle_class = klass;
            f.track.sample_rate_hz = 1.0 / cfg_.step_dt_s;
            f.track.samples.reserve(it->second.size());
            f.lanes.reserve(it->second.size());
            for (const RawSample& rs : it->second) {
                f.track.samples.push_back({rs.t, rs.s, rs.y, rs.v});
                f.lanes.push_back(rs.lane);
            }
            finished_.push_back(std::move(f));
        }
        recorder_.erase(it);
    }

    void check_collisions() const {
        for (const auto& occ : occupancy_) {
            for (std::size_t k = 1; k < occ.size(); ++k) {
                const VehicleState& rear = vehicles_[occ[k - 1]];
                const VehicleState& front = vehicles_[occ[k]];
                if (rear.id == front.id) continue;
                const double gap = front.s - front.length - rear.s;
                if (gap <= 0.0) {
                    throw Error(Errc::CollisionDetected, "vehicles " + std::to_string(rear.id) + " and " +
                                                             std::to_string(front.id) + " at s=" +
                                                             std::to_string(front.s));
                }
            }
        }
    }

    void inject_arrivals(double t_now) {
        for (int lane = 0; lane < cfg_.layout.lane_count; ++lane) {
            while (next_arrival_[lane] <= t_now) {
                Pending p;
                p.klass = uniform01() < cfg_.demand.large_fraction ? VehicleClass::large : VehicleClass::small;
                const SpeedDistribution& dist = p.klass == VehicleClass::large ? cfg_.demand.desired_speed_large
                                                                               : cfg_.demand.desired_speed_small;
                p.desired_v = sample_desired_speed(dist, uniform01()) / 3.6;
                p.late_merger = uniform01() < cfg_.merge.late_merger_fraction;
                p.notice_distance = cfg_.merge.notice_distance_min +
                                    uniform01() * (cfg_.merge.notice_distance_max - cfg_.merge.notice_distance_min);
                pending_[lane].push_back(p);
                next_arrival_[lane] += exp_draw();
            }
            if (pending_[lane].empty()) continue;
            const Pending& p = pending_[lane].front();
            double v0 = p.desired_v;
            if (!occupancy_[lane].empty()) {
                const VehicleState& first = vehicles_[occupancy_[lane].front()];
                const double gap = first.s - first.length;
                v0 = std::min(v0, safe_speed(gap, first.v, cfg_.step_dt_s, cfg_.driving.cc0_standstill, cfg_.gains));
            }
            if (v0 < 0.5 * p.desired_v) continue; // entrance blocked, retry next step
            VehicleState veh;
            veh.id = next_id_++;
            veh.klass = p.klass;
            veh.lane = lane;
            veh.s = 0.0;
            veh.v = v0;
            veh.desired_v = p.desired_v;
            veh.length = p.klass == VehicleClass::large ? 12.0 : 4.5;
            veh.late_merger = p.late_merger;
            veh.notice_distance = p.notice_distance;
            vehicles_.push_back(veh);
            occupancy_[lane].insert(occupancy_[lane].begin(), static_cast<int>(vehicles_.size()) - 1);
            pending_[lane].pop_front();
            ++injected_;
        }
    }

    struct Pending {
        VehicleClass klass = VehicleClass::small;
        double desired_v = 0.0;
        bool late_merger = false;
        double notice_distance = 250.0;
    };

    struct FinishedTrack {
        VehicleTrack track;
        std::vector<int> lanes;
    };

    ScenarioConfig cfg_;
    std::uint64_t seed_ = 0;
    std::mt19937_64 rng_;
    std::optional<double> limit_mps_;
    double network_length_ = 0.0;
    double lane_rate_ = 0.0;
    double t_ = 0.0;
    int next_id_ = 1;
    std::int64_t injected_ = 0, exited_ = 0, removed_ = 0;
    std::vector<VehicleState> vehicles_;
    std::vector<std::vector<int>> occupancy_;
    std::vector<double> next_arrival_;
    std::vector<std::deque<Pending>> pending_;
    std::vector<DetectorRecord> detectors_;
    std::map<int, std::vector<RawSample>> recorder_;
    std::vector<FinishedTrack> finished_;
};

inline std::vector<ReplicationResult> run_scenario(const ScenarioConfig& cfg) {
    auto violations = cfg.validate();
    if (!violations.empty()) throw Error(Errc::InvalidConfig, violations.front());
    std::vector<ReplicationResult> out;
    out.reserve(cfg.replications);
    for (int r = 0; r < cfg.replications; ++r) {
        World w(cfg, cfg.seed + static_cast<std::uint64_t>(r));
        w.run_to_end();
        out.push_back(w.take_result());
    }
    return out;
}

/// Table-shaped speed distributions observed at the reference site.
inline SpeedDistribution site_speed_distribution_small_upstream() {
    return {{35, 45, 55, 65, 75, 85, 95, 105, 110}, {0, 0.01, 0.03, 0.04, 0.2, 0.76, 0.85, 0.96, 1}};
}

inline SpeedDistribution site_speed_distribution_large_upstream() {
    return {{35, 45, 55, 65, 75, 85, 95, 105, 110}, {0, 0, 0, 0, 0, 0.43, 0.88, 0.98, 1}};
}

inline SpeedDistribution site_speed_distribution_small_workzone() {
    return {{35, 45, 55, 65, 75, 85, 95, 105, 110}, {0, 0.01, 0.09, 0.28, 0.65, 0.86, 0.97, 1, 1}};
}

inline SpeedDistribution site_speed_distribution_large_workzone() {
    return {{35, 45, 55, 65, 75, 85, 95, 105, 110}, {0, 0.02, 0.07, 0.30, 0.63, 0.84, 0.93, 0.98, 1}};
}

/// Reference demand: 1760 veh/h, 22% large vehicles, upstream desired speeds.
inline DemandConfig site_demand() {
    DemandConfig d;
    d.volume_vph = 1760.0;
    d.large_fraction = 0.22;
    d.desired_speed_small = site_speed_distribution_small_upstream();
    d.desired_speed_large = site_speed_distribution_large_upstream();
    return d;
}

/// Reference scenario: 500 m warning area, 30 m stepped transition, 80 m
/// buffer, 170 m work area, two rightmost lanes of four closed.
inline ScenarioConfig site_scenario() {
    ScenarioConfig cfg;
    cfg.layout.zone_start_x = 1500.0;
    cfg.layout.warning_length = 500.0;
    cfg.layout.upstream_transition_length = 30.0;
    cfg.layout.upstream_transition_style = TransitionStyle::stepped;
    cfg.layout.buffer_length = 80.0;
    cfg.layout.work_length = 170.0;
    cfg.layout.downstream_transition_length = 30.0;
    cfg.layout.termination_length = 100.0;
    cfg.layout.lane_count = 4;
    cfg.layout.closed_lanes = {0, 1};
    cfg.layout.lane_width = 3.5;
    cfg.demand = site_demand();
    cfg.name = "site-base";
    return cfg;
}

} // namespace wz
