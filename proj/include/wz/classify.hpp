#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wz/core.hpp"
#include "wz/detect.hpp"
#include "wz/error.hpp"

namespace wz {

/// The 11 recognizable behavior types: straight / turn-left / turn-right
/// crossed with constant / accelerating / decelerating, plus the two
/// lane-change directions.
enum class BehaviorLabel {
    L_C = 0,
    TL_C,
    TR_C,
    TL_A,
    TR_A,
    L_A,
    TL_D,
    TR_D,
    L_D,
    TL_CL,
    TR_CL,
};

inline constexpr std::size_t kLabelCount = 11;

inline constexpr std::array<BehaviorLabel, kLabelCount> all_labels() {
    return {BehaviorLabel::L_C,  BehaviorLabel::TL_C, BehaviorLabel::TR_C, BehaviorLabel::TL_A,
            BehaviorLabel::TR_A, BehaviorLabel::L_A,  BehaviorLabel::TL_D, BehaviorLabel::TR_D,
            BehaviorLabel::L_D,  BehaviorLabel::TL_CL, BehaviorLabel::TR_CL};
}

inline const char* to_string(BehaviorLabel l) {
    switch (l) {
        case BehaviorLabel::L_C: return "L&C";
        case BehaviorLabel::TL_C: return "TL&C";
        case BehaviorLabel::TR_C: return "TR&C";
        case BehaviorLabel::TL_A: return "TL&A";
        case BehaviorLabel::TR_A: return "TR&A";
        case BehaviorLabel::L_A: return "L&A";
        case BehaviorLabel::TL_D: return "TL&D";
        case BehaviorLabel::TR_D: return "TR&D";
        case BehaviorLabel::L_D: return "L&D";
        case BehaviorLabel::TL_CL: return "TL&CL";
        case BehaviorLabel::TR_CL: return "TR&CL";
    }
    return "?";
}

/// Filesystem-safe variant of the label name ("TL&CL" -> "TL_CL").
inline std::string label_slug(BehaviorLabel l) {
    std::string s = to_string(l);
    for (char& c : s) {
        if (c == '&') c = '_';
    }
    return s;
}

inline bool label_from_string(const std::string& s, BehaviorLabel& out) {
    for (BehaviorLabel l : all_labels()) {
        if (s == to_string(l) || s == label_slug(l)) {
            out = l;
            return true;
        }
    }
    return false;
}

inline constexpr std::size_t kFeatureCount = 10;

struct FeatureVector {
    double mean_ax = 0.0;
    double min_ax = 0.0;
    double max_ax = 0.0;
    double mean_abs_ay = 0.0;
    double max_abs_ay = 0.0;
    double signed_peak_ay = 0.0;
    double net_heading_change = 0.0;       // rad
    double net_lateral_displacement = 0.0; // m
    double duration = 0.0;                 // s
    double mean_v = 0.0;                    // m/s

    std::array<double, kFeatureCount> as_array() const {
        return {mean_ax,           min_ax,       max_ax,   mean_abs_ay, max_abs_ay,
                signed_peak_ay,    net_heading_change, net_lateral_displacement, duration, mean_v};
    }
};

struct BehaviorSegment {
    int vehicle_id = 0;
    UnsafeInterval interval;
    BehaviorLabel label = BehaviorLabel::L_C;
    double centroid_x = 0.0; ///< position at the peak-energy frame
    double centroid_y = 0.0;
    FeatureVector features;
};

inline FeatureVector extract_features(const KinematicTrack& kt, const UnsafeInterval& interval) {
    const KinematicSample* first = nullptr;
    const KinematicSample* last = nullptr;
    double sum_ax = 0.0, sum_abs_ay = 0.0, sum_v = 0.0;
    double min_ax = 0.0, max_ax = 0.0, max_abs_ay = 0.0, signed_peak = 0.0;
    std::size_t n = 0;
    for (const KinematicSample& s : kt.samples) {
        if (s.t < interval.t_start || s.t > interval.t_end) continue;
        if (!first) {
            first = &s;
            min_ax = max_ax = s.a_x;
        }
        last = &s;
        sum_ax += s.a_x;
        sum_abs_ay += std::abs(s.a_y);
        sum_v += s.v;
        min_ax = std::min(min_ax, s.a_x);
        max_ax = std::max(max_ax, s.a_x);
        if (std::abs(s.a_y) > max_abs_ay) {
            max_abs_ay = std::abs(s.a_y);
            signed_peak = s.a_y;
        }
        ++n;
    }
    if (n < 2) throw Error(Errc::EmptyInterval, "interval covers fewer than 2 samples");
    FeatureVector f;
    f.mean_ax = sum_ax / static_cast<double>(n);
    f.min_ax = min_ax;
    f.max_ax = max_ax;
    f.mean_abs_ay = sum_abs_ay / static_cast<double>(n);
    f.max_abs_ay = max_abs_ay;
    f.signed_peak_ay = signed_peak;
    f.net_heading_change = last->heading - first->heading;
    f.net_lateral_displacement = last->y - first->y;
    f.duration = last->t - first->t;
    f.mean_v = sum_v / static_cast<double>(n);
    return f;
}

struct RuleConfig {
    double heading_turn_threshold = 0.15; // rad
    double lon_cut = 0.3;                 // m/s^2, accelerating/decelerating split
    double lane_change_fraction = 0.6;    // of lane width
};

/// Deterministic label cascade: lane change, then turning, then the
/// longitudinal state, composed into one of the 11 labels.
inline BehaviorLabel rule_label(const FeatureVector& f, double lane_width, const RuleConfig& cfg = {}) {
    const double disp = f.net_lateral_displacement;
    const double heading = f.net_heading_change;
    if (std::abs(disp) >= cfg.lane_change_fraction * lane_width && std::abs(heading) < cfg.heading_turn_threshold) {
        return disp > 0 ? BehaviorLabel::TL_CL : BehaviorLabel::TR_CL;
    }
    const int turn = std::abs(heading) >= cfg.heading_turn_threshold ? (heading > 0 ? 1 : -1) : 0;
    const int lon = f.mean_ax > cfg.lon_cut ? 1 : (f.mean_ax < -cfg.lon_cut ? -1 : 0);
    if (turn == 1) return lon == 1 ? BehaviorLabel::TL_A : (lon == -1 ? BehaviorLabel::TL_D : BehaviorLabel::TL_C);
    if (turn == -1) return lon == 1 ? BehaviorLabel::TR_A : (lon == -1 ? BehaviorLabel::TR_D : BehaviorLabel::TR_C);
    return lon == 1 ? BehaviorLabel::L_A : (lon == -1 ? BehaviorLabel::L_D : BehaviorLabel::L_C);
}

struct LabeledFeatures {
    FeatureVector features;
    BehaviorLabel label = BehaviorLabel::L_C;
};

struct TrainConfig {
    std::uint64_t seed = 7; ///< kept for corpus generation; the fit itself is deterministic
    std::size_t iterations = 800;
    double lambda = 1e-4;
    std::size_t min_per_class = 20;
};

/// One-vs-rest maximum-margin linear classifier over standardized features,
/// fit with Pegasos-style stochastic subgradient descent.
class ClassifierModel {
public:
    static constexpr int kFormatVersion = 1;

    ClassifierModel() {
        means_.fill(0.0);
        scales_.fill(1.0);
        for (auto& row : weights_) row.fill(0.0);
    }

    static ClassifierModel train(const std::vector<LabeledFeatures>& dataset, const TrainConfig& cfg = {}) {
        std::array<std::size_t, kLabelCount> counts{};
        for (const auto& d : dataset) counts[static_cast<std::size_t>(d.label)]++;
        for (std::size_t c = 0; c < kLabelCount; ++c) {
            if (counts[c] < cfg.min_per_class) {
                throw Error(Errc::ClassUnderrepresented,
                            std::string(to_string(static_cast<BehaviorLabel>(c))) + " has " +
                                std::to_string(counts[c]) + " examples, need " + std::to_string(cfg.min_per_class));
            }
        }
        ClassifierModel m;
        m.fit_standardization(dataset);
        const std::size_t n = dataset.size();
        std::vector<std::array<double, kFeatureCount>> xs(n);
        for (std::size_t i = 0; i < n; ++i) xs[i] = m.standardize(dataset[i].features);

        // Full-batch subgradient descent on the L2-regularized hinge loss,
        // one binary problem per class, with tail-iterate averaging.
        const double lambda = cfg.lambda;
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t c = 0; c < kLabelCount; ++c) {
            std::array<double, kFeatureCount + 1> w{};
            std::array<double, kFeatureCount + 1> avg{};
            std::size_t averaged = 0;
            for (std::size_t t = 1; t <= cfg.iterations; ++t) {
                std::array<double, kFeatureCount + 1> grad{};
                for (std::size_t j = 0; j < kFeatureCount; ++j) grad[j] = lambda * w[j];
                for (std::size_t i = 0; i < n; ++i) {
                    const double y = dataset[i].label == static_cast<BehaviorLabel>(c) ? 1.0 : -1.0;
                    double score = w[kFeatureCount];
                    for (std::size_t j = 0; j < kFeatureCount; ++j) score += w[j] * xs[i][j];
                    if (y * score < 1.0) {
                        for (std::size_t j = 0; j < kFeatureCount; ++j) grad[j] -= inv_n * y * xs[i][j];
                        grad[kFeatureCount] -= inv_n * y;
                    }
                }
                const double eta = 2.0 / (1.0 + 0.01 * static_cast<double>(t));
                for (std::size_t j = 0; j <= kFeatureCount; ++j) w[j] -= eta * grad[j];
                if (t > cfg.iterations / 2) {
                    for (std::size_t j = 0; j <= kFeatureCount; ++j) avg[j] += w[j];
                    ++averaged;
                }
            }
            for (std::size_t j = 0; j <= kFeatureCount; ++j) {
                m.weights_[c][j] = avg[j] / static_cast<double>(averaged);
            }
        }
        return m;
    }

    BehaviorLabel predict(const FeatureVector& f) const {
        const auto x = standardize(f);
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_c = 0;
        for (std::size_t c = 0; c < kLabelCount; ++c) {
            double score = weights_[c][kFeatureCount];
            for (std::size_t j = 0; j < kFeatureCount; ++j) score += weights_[c][j] * x[j];
            if (score > best) { // strict comparison breaks ties toward the lower enum value
                best = score;
                best_c = c;
            }
        }
        return static_cast<BehaviorLabel>(best_c);
    }

    void save(std::ostream& os) const {
        os << "wz-classifier v" << kFormatVersion << "\n";
        os << "classes " << kLabelCount << "\n";
        for (std::size_t c = 0; c < kLabelCount; ++c) {
            os << (c ? " " : "") << label_slug(static_cast<BehaviorLabel>(c));
        }
        os << "\nfeatures " << kFeatureCount << "\n";
        auto write_row = [&os](const char* tag, const double* v, std::size_t n) {
            os << tag;
            char buf[40];
            for (std::size_t i = 0; i < n; ++i) {
                std::snprintf(buf, sizeof buf, " %.17g", v[i]);
                os << buf;
            }
            os << "\n";
        };
        write_row("means", means_.data(), kFeatureCount);
        write_row("scales", scales_.data(), kFeatureCount);
        for (std::size_t c = 0; c < kLabelCount; ++c) {
            std::string tag = "weights " + label_slug(static_cast<BehaviorLabel>(c));
            write_row(tag.c_str(), weights_[c].data(), kFeatureCount + 1);
        }
    }

    static ClassifierModel load(std::istream& is) {
        ClassifierModel m;
        std::string header;
        std::getline(is, header);
        if (header != "wz-classifier v1") throw Error(Errc::ParseError, "bad classifier header: " + header);
        std::string word;
        std::size_t count = 0;
        is >> word >> count;
        if (word != "classes" || count != kLabelCount) throw Error(Errc::ParseError, "bad class count");
        for (std::size_t c = 0; c < kLabelCount; ++c) {
            is >> word;
            BehaviorLabel l;
            if (!label_from_string(word, l) || l != static_cast<BehaviorLabel>(c)) {
                throw Error(Errc::ParseError, "unexpected class " + word);
            }
        }
        is >> word >> count;
        if (word != "features" || count != kFeatureCount) throw Error(Errc::ParseError, "bad feature count");
        auto read_row = [&is](const char* tag, double* v, std::size_t n, std::size_t skip_words) {
            std::string w;
            is >> w;
            if (w != tag) throw Error(Errc::ParseError, std::string("expected ") + tag + ", got " + w);
            for (std::size_t s = 0; s < skip_words; ++s) is >> w;
            for (std::size_t i = 0; i < n; ++i) {
                if (!(is >> v[i])) throw Error(Errc::ParseError, std::string("truncated row ") + tag);
            }
        };
        read_row("means", m.means_.data(), kFeatureCount, 0);
        read_row("scales", m.scales_.data(), kFeatureCount, 0);
        for (std::size_t c = 0; c < kLabelCount; ++c) {
            read_row("weights", m.weights_[c].data(), kFeatureCount + 1, 1);
        }
        return m;
    }

    const std::array<double, kFeatureCount>& means() const { return means_; }
    const std::array<double, kFeatureCount>& scales() const { return scales_; }
    const std::array<double, kFeatureCount + 1>& class_weights(std::size_t c) const { return weights_[c]; }

    bool operator==(const ClassifierModel& o) const {
        return means_ == o.means_ && scales_ == o.scales_ && weights_ == o.weights_;
    }

private:
    void fit_standardization(const std::vector<LabeledFeatures>& dataset) {
        const double n = static_cast<double>(dataset.size());
        means_.fill(0.0);
        for (const auto& d : dataset) {
            const auto x = d.features.as_array();
            for (std::size_t j = 0; j < kFeatureCount; ++j) means_[j] += x[j];
        }
        for (double& mj : means_) mj /= n;
        std::array<double, kFeatureCount> var{};
        for (const auto& d : dataset) {
            const auto x = d.features.as_array();
            for (std::size_t j = 0; j < kFeatureCount; ++j) {
                const double dx = x[j] - means_[j];
                var[j] += dx * dx;
            }
        }
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            scales_[j] = std::sqrt(var[j] / n);
            if (scales_[j] < 1e-12) scales_[j] = 1.0;
        }
    }

    std::array<double, kFeatureCount> standardize(const FeatureVector& f) const {
        auto x = f.as_array();
        for (std::size_t j = 0; j < kFeatureCount; ++j) x[j] = (x[j] - means_[j]) / scales_[j];
        return x;
    }

    std::array<double, kFeatureCount> means_;
    std::array<double, kFeatureCount> scales_;
    std::array<std::array<double, kFeatureCount + 1>, kLabelCount> weights_;
};

} // namespace wz
