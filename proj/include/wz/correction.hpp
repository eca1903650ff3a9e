#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "wz/density.hpp"
#include "wz/error.hpp"
#include "wz/pipeline.hpp"

namespace wz {

/// Density ceilings per problem group. Values are configuration, not derived:
/// departmental baselines or accident records have to supply real ones.
struct SafetyThresholds {
    double lon_upstream = 3.0;        ///< straight accelerating/decelerating upstream of the work area
    double lane_change_upstream = 3.0;
    double termination = 3.0;         ///< straight accelerating/decelerating in the termination area
};

struct ProblemFlag {
    int index = 0; ///< 1..3
    BehaviorLabel label = BehaviorLabel::L_C;
    RegionGroup group = RegionGroup::UpstreamOfWork;
    double density = 0.0;
    double threshold = 0.0;
};

enum class ActionKind {
    RaiseWarningLimit,        ///< +10 km/h
    SwitchTransitionToGradual,
    LengthenTransition,       ///< +30 m
    LowerWarningLimit,        ///< -10 km/h
};

inline const char* to_string(ActionKind k) {
    switch (k) {
        case ActionKind::RaiseWarningLimit: return "raise_warning_limit";
        case ActionKind::SwitchTransitionToGradual: return "switch_transition_to_gradual";
        case ActionKind::LengthenTransition: return "lengthen_transition";
        case ActionKind::LowerWarningLimit: return "lower_warning_limit";
    }
    return "?";
}

inline constexpr double kLimitStepKmh = 10.0;
inline constexpr double kTransitionStepM = 30.0;

struct CorrectionBounds {
    double min_limit_kmh = 40.0;
    double max_limit_kmh = 80.0; ///< ambient road limit
    double min_transition_m = 30.0;
    double max_transition_m = 120.0;
};

struct CorrectionAction {
    ActionKind kind = ActionKind::RaiseWarningLimit;
    CorrectionBounds bounds;
};

/// Problem scan. Group 1: straight braking/accelerating upstream. Group 2:
/// lane changes upstream. Group 3: the termination area; both the braking and
/// the accelerating label are checked there.
inline std::vector<ProblemFlag> assess(const AssessmentReport& report, const SafetyThresholds& thresholds) {
    std::vector<ProblemFlag> flags;
    auto max_of = [&report](RegionGroup g, std::initializer_list<BehaviorLabel> labels) {
        double best = 0.0;
        BehaviorLabel best_label = *labels.begin();
        for (BehaviorLabel l : labels) {
            const double d = report.density_or_zero(l, g);
            if (d > best) {
                best = d;
                best_label = l;
            }
        }
        return std::make_pair(best, best_label);
    };
    {
        const auto [d, l] = max_of(RegionGroup::UpstreamOfWork, {BehaviorLabel::L_A, BehaviorLabel::L_D});
        if (d > thresholds.lon_upstream) flags.push_back({1, l, RegionGroup::UpstreamOfWork, d, thresholds.lon_upstream});
    }
    {
        const auto [d, l] = max_of(RegionGroup::UpstreamOfWork, {BehaviorLabel::TL_CL, BehaviorLabel::TR_CL});
        if (d > thresholds.lane_change_upstream) {
            flags.push_back({2, l, RegionGroup::UpstreamOfWork, d, thresholds.lane_change_upstream});
        }
    }
    {
        const auto [d, l] = max_of(RegionGroup::Termination, {BehaviorLabel::L_A, BehaviorLabel::L_D});
        if (d > thresholds.termination) flags.push_back({3, l, RegionGroup::Termination, d, thresholds.termination});
    }
    return flags;
}

namespace detail {

inline double current_limit_kmh(const WorkZoneLayout& layout, const CorrectionBounds& b) {
    return layout.warning_speed_limit_kmh.value_or(b.max_limit_kmh);
}

inline bool can_raise(const WorkZoneLayout& layout, const CorrectionBounds& b) {
    return layout.warning_speed_limit_kmh && *layout.warning_speed_limit_kmh + kLimitStepKmh <= b.max_limit_kmh;
}

inline bool can_lower(const WorkZoneLayout& layout, const CorrectionBounds& b) {
    return current_limit_kmh(layout, b) - kLimitStepKmh >= b.min_limit_kmh;
}

inline bool can_lengthen(const WorkZoneLayout& layout, const CorrectionBounds& b) {
    return layout.upstream_transition_length + kTransitionStepM <= b.max_transition_m;
}

} // namespace detail

/// Remedies in flag-priority order 1 > 3 > 2. At most one speed-limit action
/// survives; flag 1's raise wins over flag 3's lowering when both fire.
inline std::vector<CorrectionAction> recommend(const std::vector<ProblemFlag>& flags, const WorkZoneLayout& layout,
                                               const CorrectionBounds& bounds = {}) {
    if (flags.empty()) throw Error(Errc::InvalidConfig, "recommend called without flags");
    auto has_flag = [&flags](int idx) {
        return std::any_of(flags.begin(), flags.end(), [idx](const ProblemFlag& f) { return f.index == idx; });
    };
    std::vector<CorrectionAction> actions;
    bool limit_action_taken = false;
    if (has_flag(1)) {
        if (detail::can_raise(layout, bounds)) {
            actions.push_back({ActionKind::RaiseWarningLimit, bounds});
            limit_action_taken = true;
        }
        if (layout.upstream_transition_style == TransitionStyle::stepped) {
            actions.push_back({ActionKind::SwitchTransitionToGradual, bounds});
        }
    }
    if (has_flag(3) && !limit_action_taken && detail::can_lower(layout, bounds)) {
        actions.push_back({ActionKind::LowerWarningLimit, bounds});
        limit_action_taken = true;
    }
    if (has_flag(2)) {
        if (detail::can_lengthen(layout, bounds)) {
            actions.push_back({ActionKind::LengthenTransition, bounds});
        } else if (!limit_action_taken && detail::can_lower(layout, bounds)) {
            actions.push_back({ActionKind::LowerWarningLimit, bounds});
        }
    }
    if (actions.empty()) throw Error(Errc::NoApplicableAction, "every correction is clamped out");
    return actions;
}

/// Apply a single correction, clamped to its bounds. Inapplicable actions
/// surface as Clamped rather than silently saturating.
inline WorkZoneLayout apply(const WorkZoneLayout& layout, const CorrectionAction& action) {
    WorkZoneLayout out = layout;
    const CorrectionBounds& b = action.bounds;
    switch (action.kind) {
        case ActionKind::RaiseWarningLimit: {
            if (!detail::can_raise(layout, b)) throw Error(Errc::Clamped, "warning limit already at the road limit");
            out.warning_speed_limit_kmh = *layout.warning_speed_limit_kmh + kLimitStepKmh;
            break;
        }
        case ActionKind::LowerWarningLimit: {
            if (!detail::can_lower(layout, b)) throw Error(Errc::Clamped, "warning limit already at its floor");
            out.warning_speed_limit_kmh = detail::current_limit_kmh(layout, b) - kLimitStepKmh;
            break;
        }
        case ActionKind::SwitchTransitionToGradual: {
            if (layout.upstream_transition_style != TransitionStyle::stepped) {
                throw Error(Errc::Clamped, "transition is already gradual");
            }
            out.upstream_transition_style = TransitionStyle::gradual;
            break;
        }
        case ActionKind::LengthenTransition: {
            if (!detail::can_lengthen(layout, b)) throw Error(Errc::Clamped, "transition already at its maximum length");
            out.upstream_transition_length = layout.upstream_transition_length + kTransitionStepM;
            break;
        }
    }
    return out;
}

enum class LoopVerdict { safe, unresolved };

inline const char* to_string(LoopVerdict v) { return v == LoopVerdict::safe ? "safe" : "unresolved"; }

struct LoopIteration {
    WorkZoneLayout layout;
    AssessmentReport report;
    std::vector<ProblemFlag> flags;
    std::optional<CorrectionAction> action; ///< absent on the final (safe/stuck) iteration
};

struct LoopHistory {
    std::vector<LoopIteration> iterations;
    LoopVerdict verdict = LoopVerdict::unresolved;
};

/// Assess-correct-reassess loop: simulate, analyze, flag; stop when clean or
/// when nothing applicable remains; otherwise apply the first recommendation
/// and go again. Never exceeds max_iters iterations.
inline LoopHistory correction_loop(const ScenarioConfig& initial, const AnalysisConfig& analysis,
                                   const DensityGridSpec& grid, const SafetyThresholds& thresholds, int max_iters,
                                   const CorrectionBounds& bounds = {}) {
    LoopHistory history;
    ScenarioConfig scenario = initial;
    if (scenario.warning_speed_limit_override_kmh) {
        // Fold the override into the layout so corrections act on one value.
        scenario.layout.warning_speed_limit_kmh = scenario.warning_speed_limit_override_kmh;
        scenario.warning_speed_limit_override_kmh.reset();
    }
    for (int iter = 0; iter < max_iters; ++iter) {
        LoopIteration entry;
        entry.layout = scenario.layout;
        entry.report = assess_scenario(scenario, analysis, grid);
        entry.flags = assess(entry.report, thresholds);
        if (entry.flags.empty()) {
            history.iterations.push_back(std::move(entry));
            history.verdict = LoopVerdict::safe;
            return history;
        }
        std::vector<CorrectionAction> actions;
        try {
            actions = recommend(entry.flags, scenario.layout, bounds);
        } catch (const Error& e) {
            if (e.code() != Errc::NoApplicableAction) throw;
            history.iterations.push_back(std::move(entry));
            history.verdict = LoopVerdict::unresolved;
            return history;
        }
        entry.action = actions.front();
        scenario.layout = apply(scenario.layout, actions.front());
        history.iterations.push_back(std::move(entry));
    }
    history.verdict = LoopVerdict::unresolved;
    return history;
}

} // namespace wz
