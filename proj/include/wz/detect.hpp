#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "wz/core.hpp"
#include "wz/error.hpp"

namespace wz {

enum class SignalAxis { longitudinal, lateral };

inline const char* to_string(SignalAxis a) { return a == SignalAxis::longitudinal ? "longitudinal" : "lateral"; }

enum class TriggerAxis { longitudinal, lateral, both };

inline const char* to_string(TriggerAxis a) {
    switch (a) {
        case TriggerAxis::longitudinal: return "longitudinal";
        case TriggerAxis::lateral: return "lateral";
        case TriggerAxis::both: return "both";
    }
    return "?";
}

/// Windowed sum of squared acceleration samples, the segmentation signal.
struct EnergySeries {
    std::vector<double> frame_times; ///< window centers, s
    std::vector<double> energy;      ///< (m/s^2)^2 * samples
    std::size_t window_samples = 0;
    std::size_t hop_samples = 0;
    SignalAxis source_axis = SignalAxis::longitudinal;
};

struct DetectionConfig {
    double window_s = 1.0;
    double hop_s = 0.1;
    ComfortThresholds thresholds;
    double t1_percentile = 0.30; ///< fraction of frames, counted from the largest energy down
    double merge_gap_s = 0.3;

    std::vector<std::string> validate() const {
        std::vector<std::string> v;
        if (!(window_s > 0.0)) v.push_back("window_s <= 0");
        if (!(hop_s > 0.0) || hop_s > window_s) v.push_back("hop_s must be in (0, window_s]");
        if (!(t1_percentile > 0.0 && t1_percentile < 1.0)) v.push_back("t1_percentile must be in (0,1)");
        if (!(merge_gap_s >= 0.0)) v.push_back("merge_gap_s < 0");
        auto tv = validate_thresholds(thresholds);
        v.insert(v.end(), tv.begin(), tv.end());
        return v;
    }
};

struct UnsafeInterval {
    double t_start = 0.0;
    double t_end = 0.0;
    TriggerAxis trigger_axis = TriggerAxis::longitudinal;
    double peak_energy = 0.0;
    double t_peak = 0.0; ///< center of the highest-energy frame
};

namespace detail {

inline std::size_t window_samples_for(const DetectionConfig& cfg, double sample_rate_hz) {
    return static_cast<std::size_t>(std::max(1.0, std::round(cfg.window_s * sample_rate_hz)));
}

inline std::size_t hop_samples_for(const DetectionConfig& cfg, double sample_rate_hz) {
    return static_cast<std::size_t>(std::max(1.0, std::round(cfg.hop_s * sample_rate_hz)));
}

} // namespace detail

/// Rectangular-window short-time energy of an acceleration series.
inline EnergySeries short_time_energy(const std::vector<double>& signal, const std::vector<double>& times,
                                      std::size_t window_samples, std::size_t hop_samples,
                                      SignalAxis axis = SignalAxis::longitudinal) {
    if (signal.size() < window_samples || window_samples == 0) {
        throw Error(Errc::TooShort, "signal shorter than one window");
    }
    EnergySeries es;
    es.window_samples = window_samples;
    es.hop_samples = hop_samples;
    es.source_axis = axis;
    const std::size_t frames = (signal.size() - window_samples) / hop_samples + 1;
    es.energy.reserve(frames);
    es.frame_times.reserve(frames);
    for (std::size_t k = 0; k < frames; ++k) {
        const std::size_t begin = k * hop_samples;
        double e = 0.0;
        for (std::size_t i = begin; i < begin + window_samples; ++i) e += signal[i] * signal[i];
        es.energy.push_back(e);
        es.frame_times.push_back(0.5 * (times[begin] + times[begin + window_samples - 1]));
    }
    return es;
}

/// Energy a constant at-threshold signal accumulates over one full window.
inline double t2_from_threshold(double a_threshold, std::size_t window_samples) {
    return a_threshold * a_threshold * static_cast<double>(window_samples);
}

/// Adaptive lower threshold: the energy ranked at `t1_percentile` counted from
/// the largest frame down, capped at the axis-appropriate T2. A floor of 2% of
/// the cap keeps quiet signals from degenerating to T1 = 0, where extension
/// would run across every frame.
inline double t1_adaptive(const EnergySeries& energy, const DetectionConfig& cfg) {
    if (energy.energy.empty()) throw Error(Errc::TooShort, "empty energy series");
    std::vector<double> sorted = energy.energy;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    const auto rank = static_cast<std::size_t>(std::floor(cfg.t1_percentile * static_cast<double>(sorted.size() - 1)));
    double t1 = sorted[rank];
    const double cap = energy.source_axis == SignalAxis::lateral
                           ? t2_from_threshold(cfg.thresholds.lat_max, energy.window_samples)
                           : t2_from_threshold(std::min(cfg.thresholds.lon_accel_max, cfg.thresholds.lon_decel_max),
                                               energy.window_samples);
    t1 = std::max(t1, 0.02 * cap);
    return std::min(t1, cap);
}

namespace detail {

struct FrameRun {
    std::size_t first = 0;
    std::size_t last = 0; // inclusive
};

/// Core-and-extend scan: maximal runs of core frames, each grown outward while
/// the energy stays at or above T1, then merged when closer than merge_gap_s.
inline std::vector<FrameRun> detect_runs(const EnergySeries& es, double t1, const std::vector<char>& core,
                                         double merge_gap_s) {
    std::vector<FrameRun> runs;
    const std::size_t n = es.energy.size();
    std::size_t i = 0;
    while (i < n) {
        if (!core[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && core[j + 1]) ++j;
        FrameRun run{i, j};
        while (run.first > 0 && es.energy[run.first - 1] >= t1) --run.first;
        while (run.last + 1 < n && es.energy[run.last + 1] >= t1) ++run.last;
        runs.push_back(run);
        i = j + 1;
    }
    // Merge overlapping, adjacent, or near-adjacent extended runs.
    std::vector<FrameRun> merged;
    for (const FrameRun& r : runs) {
        if (!merged.empty()) {
            FrameRun& prev = merged.back();
            const bool overlaps = r.first <= prev.last + 1;
            const bool near = es.frame_times[r.first] - es.frame_times[prev.last] < merge_gap_s;
            if (overlaps || near) {
                prev.last = std::max(prev.last, r.last);
                continue;
            }
        }
        merged.push_back(r);
    }
    return merged;
}

inline UnsafeInterval interval_from_run(const EnergySeries& es, const FrameRun& run, double sample_dt,
                                        TriggerAxis axis) {
    UnsafeInterval iv;
    const double half_window = 0.5 * static_cast<double>(es.window_samples - 1) * sample_dt;
    iv.t_start = es.frame_times[run.first] - half_window;
    iv.t_end = es.frame_times[run.last] + half_window;
    iv.trigger_axis = axis;
    iv.peak_energy = es.energy[run.first];
    iv.t_peak = es.frame_times[run.first];
    for (std::size_t k = run.first; k <= run.last; ++k) {
        if (es.energy[k] > iv.peak_energy) {
            iv.peak_energy = es.energy[k];
            iv.t_peak = es.frame_times[k];
        }
    }
    return iv;
}

} // namespace detail

/// Dual-threshold endpoint detection: frames with energy >= T2 seed cores,
/// cores grow while energy >= T1. Returns merged intervals in time units.
inline std::vector<UnsafeInterval> detect_endpoints(const EnergySeries& es, double t1, double t2,
                                                    double merge_gap_s = 0.3, double sample_dt = 0.1,
                                                    TriggerAxis axis = TriggerAxis::longitudinal) {
    if (t1 > t2) throw Error(Errc::InvalidConfig, "T1 must not exceed T2");
    std::vector<char> core(es.energy.size(), 0);
    for (std::size_t k = 0; k < es.energy.size(); ++k) core[k] = es.energy[k] >= t2 ? 1 : 0;
    std::vector<UnsafeInterval> out;
    for (const auto& run : detail::detect_runs(es, t1, core, merge_gap_s)) {
        out.push_back(detail::interval_from_run(es, run, sample_dt, axis));
    }
    return out;
}

namespace detail {

/// Longitudinal detection with the asymmetric comfort bounds. Cores require
/// the sign-split window energy to reach its own converted T2, and the core
/// window must contain a raw sample past the matching bound.
inline std::vector<UnsafeInterval> detect_longitudinal(const KinematicTrack& kt, const DetectionConfig& cfg) {
    const std::size_t W = window_samples_for(cfg, kt.sample_rate_hz);
    const std::size_t H = hop_samples_for(cfg, kt.sample_rate_hz);
    std::vector<double> ax(kt.samples.size()), times(kt.samples.size());
    for (std::size_t i = 0; i < kt.samples.size(); ++i) {
        ax[i] = kt.samples[i].a_x;
        times[i] = kt.samples[i].t;
    }
    const EnergySeries es = short_time_energy(ax, times, W, H, SignalAxis::longitudinal);
    const double t2_accel = t2_from_threshold(cfg.thresholds.lon_accel_max, W);
    const double t2_decel = t2_from_threshold(cfg.thresholds.lon_decel_max, W);
    const double t1 = t1_adaptive(es, cfg);

    const std::size_t frames = es.energy.size();
    std::vector<char> core(frames, 0);
    for (std::size_t k = 0; k < frames; ++k) {
        const std::size_t begin = k * H;
        double e_pos = 0.0, e_neg = 0.0;
        bool raw_accel = false, raw_decel = false;
        for (std::size_t i = begin; i < begin + W; ++i) {
            const double a = ax[i];
            if (a > 0.0) {
                e_pos += a * a;
                raw_accel = raw_accel || a > cfg.thresholds.lon_accel_max;
            } else {
                e_neg += a * a;
                raw_decel = raw_decel || -a > cfg.thresholds.lon_decel_max;
            }
        }
        core[k] = (e_pos >= t2_accel && raw_accel) || (e_neg >= t2_decel && raw_decel) ? 1 : 0;
    }
    std::vector<UnsafeInterval> out;
    for (const auto& run : detail::detect_runs(es, t1, core, cfg.merge_gap_s)) {
        out.push_back(detail::interval_from_run(es, run, kt.dt(), TriggerAxis::longitudinal));
    }
    return out;
}

inline std::vector<UnsafeInterval> detect_lateral(const KinematicTrack& kt, const DetectionConfig& cfg) {
    const std::size_t W = window_samples_for(cfg, kt.sample_rate_hz);
    const std::size_t H = hop_samples_for(cfg, kt.sample_rate_hz);
    std::vector<double> ay(kt.samples.size()), times(kt.samples.size());
    for (std::size_t i = 0; i < kt.samples.size(); ++i) {
        ay[i] = kt.samples[i].a_y;
        times[i] = kt.samples[i].t;
    }
    const EnergySeries es = short_time_energy(ay, times, W, H, SignalAxis::lateral);
    const double t2 = t2_from_threshold(cfg.thresholds.lat_max, W);
    const double t1 = t1_adaptive(es, cfg);
    return detect_endpoints(es, t1, t2, cfg.merge_gap_s, kt.dt(), TriggerAxis::lateral);
}

} // namespace detail

/// Full per-track detection: both axes scanned independently, results merged.
inline std::vector<UnsafeInterval> extract_unsafe_segments(const KinematicTrack& kt, const DetectionConfig& cfg) {
    const std::size_t W = detail::window_samples_for(cfg, kt.sample_rate_hz);
    if (kt.samples.size() < W) return {};
    std::vector<UnsafeInterval> all = detail::detect_longitudinal(kt, cfg);
    const std::vector<UnsafeInterval> lat = detail::detect_lateral(kt, cfg);
    all.insert(all.end(), lat.begin(), lat.end());
    std::sort(all.begin(), all.end(), [](const UnsafeInterval& a, const UnsafeInterval& b) {
        return a.t_start < b.t_start;
    });
    std::vector<UnsafeInterval> merged;
    for (const UnsafeInterval& iv : all) {
        if (!merged.empty() && iv.t_start - merged.back().t_end < cfg.merge_gap_s) {
            UnsafeInterval& prev = merged.back();
            prev.t_end = std::max(prev.t_end, iv.t_end);
            if (prev.trigger_axis != iv.trigger_axis) prev.trigger_axis = TriggerAxis::both;
            if (iv.peak_energy > prev.peak_energy) {
                prev.peak_energy = iv.peak_energy;
                prev.t_peak = iv.t_peak;
            }
            continue;
        }
        merged.push_back(iv);
    }
    return merged;
}

} // namespace wz
