#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "support.hpp"
#include "wz/classify.hpp"
#include "wz/kinematics.hpp"
#include "wz/maneuvers.hpp"

using namespace wz;

namespace {

FeatureVector features_of(const VehicleTrack& tr) {
    const KinematicTrack kt = derive_kinematics(tr);
    UnsafeInterval span;
    span.t_start = kt.samples.front().t;
    span.t_end = kt.samples.back().t;
    return extract_features(kt, span);
}

} // namespace

TEST_CASE("features of constant deceleration") {
    const auto f = features_of(wztest::straight_track(25.0, {{3.0, -2.5}}));
    CHECK(f.mean_ax == doctest::Approx(-2.5).epsilon(1e-6));
    CHECK(f.net_lateral_displacement == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("features of a left lane change") {
    const auto f = features_of(wztest::lane_change_track(20.0, 3.5, 3.0));
    CHECK(f.net_lateral_displacement == doctest::Approx(3.5).epsilon(0.03));
    CHECK(std::abs(f.net_heading_change) < 0.05);
}

TEST_CASE("features of a constant-speed left turn") {
    // Closed-form arc: heading change is the turn angle, a_x stays near zero.
    const auto f = features_of(wztest::arc_track(15.0, 0.4, 4.0));
    CHECK(f.net_heading_change > 0.3);
    CHECK(std::abs(f.mean_ax) < 0.2);
}

TEST_CASE("empty intervals are rejected") {
    const auto tr = wztest::straight_track(20.0, {{3.0, 0.0}});
    const KinematicTrack kt = derive_kinematics(tr);
    UnsafeInterval iv;
    iv.t_start = 100.0;
    iv.t_end = 101.0;
    CHECK_THROWS_AS((void)extract_features(kt, iv), Error);
}

TEST_CASE("rule cascade composes its three stages") {
    FeatureVector f;
    f.net_lateral_displacement = 3.5;
    f.net_heading_change = 0.0;
    f.mean_ax = 0.1;
    CHECK(rule_label(f, 3.5) == BehaviorLabel::TL_CL);

    f = {};
    f.net_heading_change = -0.3;
    f.mean_ax = -1.0;
    CHECK(rule_label(f, 3.5) == BehaviorLabel::TR_D);

    f = {};
    CHECK(rule_label(f, 3.5) == BehaviorLabel::L_C);

    f = {};
    f.mean_ax = 0.5;
    CHECK(rule_label(f, 3.5) == BehaviorLabel::L_A);

    f = {};
    f.net_heading_change = 0.2;
    f.mean_ax = 0.5;
    CHECK(rule_label(f, 3.5) == BehaviorLabel::TL_A);

    // Lane-change displacement with a large heading change is a turn instead.
    f = {};
    f.net_lateral_displacement = 3.0;
    f.net_heading_change = 0.4;
    CHECK(rule_label(f, 3.5) == BehaviorLabel::TL_C);
}

TEST_CASE("mirror symmetry maps left labels to right labels") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 500; ++i) {
        FeatureVector f;
        f.mean_ax = wztest::uniform(rng, -2.0, 2.0);
        f.net_heading_change = wztest::uniform(rng, -0.6, 0.6);
        f.net_lateral_displacement = wztest::uniform(rng, -5.0, 5.0);
        f.signed_peak_ay = wztest::uniform(rng, -5.0, 5.0);
        FeatureVector m = f;
        m.net_heading_change = -f.net_heading_change;
        m.net_lateral_displacement = -f.net_lateral_displacement;
        m.signed_peak_ay = -f.signed_peak_ay;
        const BehaviorLabel a = rule_label(f, 3.5);
        const BehaviorLabel b = rule_label(m, 3.5);
        std::string sa = to_string(a), sb = to_string(b);
        auto flip = [](std::string s) {
            if (s.rfind("TL", 0) == 0) return "TR" + s.substr(2);
            if (s.rfind("TR", 0) == 0) return "TL" + s.substr(2);
            return s;
        };
        CHECK(flip(sa) == sb);
    }
}

TEST_CASE("training is deterministic and separable data fits exactly") {
    std::vector<LabeledFeatures> data;
    std::mt19937_64 rng(22);
    for (int i = 0; i < 40; ++i) {
        for (BehaviorLabel l : all_labels()) {
            // One blob per corner of feature space: trivially separable.
            FeatureVector f;
            auto x = f.as_array();
            const auto c = static_cast<std::size_t>(l);
            f.mean_ax = c == 0 ? 8.0 + wztest::uniform(rng, -0.5, 0.5) : wztest::uniform(rng, -0.5, 0.5);
            f.min_ax = c == 1 ? 8.0 : 0.0;
            f.max_ax = c == 2 ? 8.0 : 0.0;
            f.mean_abs_ay = c == 3 ? 8.0 : 0.0;
            f.max_abs_ay = c == 4 ? 8.0 : 0.0;
            f.signed_peak_ay = c == 5 ? 8.0 : 0.0;
            f.net_heading_change = c == 6 ? 8.0 : 0.0;
            f.net_lateral_displacement = c == 7 ? 8.0 : 0.0;
            f.duration = c == 8 ? 8.0 : 1.0 + wztest::uniform(rng, 0.0, 0.1);
            f.mean_v = c == 9 ? 8.0 : (c == 10 ? -8.0 : wztest::uniform(rng, -0.2, 0.2));
            (void)x;
            data.push_back({f, l});
        }
    }
    const auto m1 = ClassifierModel::train(data);
    const auto m2 = ClassifierModel::train(data);
    CHECK(m1 == m2);
    std::size_t correct = 0;
    for (const auto& d : data) {
        if (m1.predict(d.features) == d.label) ++correct;
    }
    CHECK(correct == data.size());
}

TEST_CASE("permuting the dataset order does not change predictions") {
    const auto corpus = synthetic_corpus(30, 88);
    std::vector<LabeledFeatures> shuffled = corpus;
    std::mt19937_64 rng(5);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto a = ClassifierModel::train(corpus);
    const auto b = ClassifierModel::train(shuffled);
    for (const auto& d : corpus) {
        CHECK(a.predict(d.features) == b.predict(d.features));
    }
}

TEST_CASE("underrepresented classes are rejected") {
    std::vector<LabeledFeatures> data;
    for (int i = 0; i < 30; ++i) data.push_back({{}, BehaviorLabel::L_C});
    CHECK_THROWS_AS((void)ClassifierModel::train(data), Error);
}

TEST_CASE("synthetic corpus trains to high rule agreement") {
    const auto corpus = synthetic_corpus(60, 31);
    std::vector<LabeledFeatures> train, held;
    for (std::size_t i = 0; i < corpus.size(); ++i) (i % 5 == 4 ? held : train).push_back(corpus[i]);
    const auto model = ClassifierModel::train(train);
    std::size_t agree = 0;
    for (const auto& d : held) {
        if (model.predict(d.features) == d.label) ++agree;
    }
    CHECK(static_cast<double>(agree) / static_cast<double>(held.size()) >= 0.95);
}

TEST_CASE("training centroids predict their own class") {
    // Nearest-centroid sanity oracle: the mean feature vector of each class
    // must land in that class.
    const auto corpus = synthetic_corpus(60, 32);
    const auto model = ClassifierModel::train(corpus);
    for (BehaviorLabel l : all_labels()) {
        FeatureVector mean;
        auto acc = mean.as_array();
        acc.fill(0.0);
        std::size_t n = 0;
        for (const auto& d : corpus) {
            if (d.label != l) continue;
            const auto x = d.features.as_array();
            for (std::size_t j = 0; j < kFeatureCount; ++j) acc[j] += x[j];
            ++n;
        }
        REQUIRE(n > 0);
        FeatureVector f;
        f.mean_ax = acc[0] / n;
        f.min_ax = acc[1] / n;
        f.max_ax = acc[2] / n;
        f.mean_abs_ay = acc[3] / n;
        f.max_abs_ay = acc[4] / n;
        f.signed_peak_ay = acc[5] / n;
        f.net_heading_change = acc[6] / n;
        f.net_lateral_displacement = acc[7] / n;
        f.duration = acc[8] / n;
        f.mean_v = acc[9] / n;
        CHECK(model.predict(f) == l);
    }
}

TEST_CASE("model round-trips through its text format") {
    const auto corpus = synthetic_corpus(25, 33);
    const auto model = ClassifierModel::train(corpus);
    std::stringstream ss;
    model.save(ss);
    const std::string first = ss.str();
    const auto loaded = ClassifierModel::load(ss);
    CHECK(loaded == model);
    std::stringstream ss2;
    loaded.save(ss2);
    CHECK(ss2.str() == first);
}

TEST_CASE("all-zero features fall back to the identity class under the rule") {
    FeatureVector f;
    CHECK(rule_label(f, 3.5) == BehaviorLabel::L_C);
}
