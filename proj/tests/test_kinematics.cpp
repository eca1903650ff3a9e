#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "wz/kinematics.hpp"

using namespace wz;

TEST_CASE("linear motion differentiates exactly") {
    VehicleTrack tr;
    tr.sample_rate_hz = 10.0;
    for (int i = 0; i < 50; ++i) {
        const double t = i * 0.1;
        tr.samples.push_back({t, 10.0 * t, 0.0, 10.0});
    }
    const auto d = differentiate(tr);
    for (std::size_t i = 0; i < d.t.size(); ++i) {
        CHECK(d.xp[i] == doctest::Approx(10.0).epsilon(1e-12));
        CHECK(d.xpp[i] == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("central differences are exact on quadratics") {
    VehicleTrack tr;
    tr.sample_rate_hz = 10.0;
    for (int i = 0; i < 60; ++i) {
        const double t = i * 0.1;
        tr.samples.push_back({t, 0.5 * 1.2 * t * t, 0.0, 1.2 * t});
    }
    const auto d = differentiate(tr);
    for (std::size_t i = 0; i < d.t.size(); ++i) {
        CHECK(d.xpp[i] == doctest::Approx(1.2).epsilon(1e-9));
    }
}

TEST_CASE("circle derivatives match the closed form") {
    // Oracle: x = 100 cos(0.2 t) has x' = -20 sin(0.2 t).
    const auto tr = wztest::circle_track(100.0, 20.0, 10.0, 10.0);
    const auto d = differentiate(tr);
    for (std::size_t i = 0; i < d.t.size(); ++i) {
        const double expected = -20.0 * std::sin(0.2 * d.t[i]);
        if (std::abs(expected) > 1.0) {
            CHECK(d.xp[i] == doctest::Approx(expected).epsilon(1e-3));
        } else {
            CHECK(std::abs(d.xp[i] - expected) < 2e-3 * 20.0);
        }
    }
}

TEST_CASE("short or non-uniform tracks are rejected") {
    VehicleTrack tr;
    tr.sample_rate_hz = 10.0;
    for (int i = 0; i < 4; ++i) tr.samples.push_back({i * 0.1, 0.0, 0.0, 0.0});
    CHECK_THROWS_WITH_AS((void)differentiate(tr), doctest::Contains("TooShort"), Error);

    tr.samples.push_back({0.4, 0.0, 0.0, 0.0});
    tr.samples.push_back({0.55, 0.0, 0.0, 0.0}); // 0.15 s gap
    CHECK_THROWS_WITH_AS((void)differentiate(tr), doctest::Contains("NonUniformSampling"), Error);
}

TEST_CASE("curvature radius recovers an analytic circle") {
    const auto tr = wztest::circle_track(100.0, 20.0, 10.0, 20.0);
    const auto kt = derive_kinematics(tr);
    for (const auto& s : kt.samples) {
        CHECK(std::abs(std::abs(s.rho) - 100.0) < 0.1);
    }
}

TEST_CASE("straight line reports infinite radius and zero lateral accel") {
    VehicleTrack tr;
    tr.sample_rate_hz = 10.0;
    for (int i = 0; i < 30; ++i) tr.samples.push_back({i * 0.1, 15.0 * i * 0.1, 0.0, 15.0});
    const auto kt = derive_kinematics(tr);
    for (const auto& s : kt.samples) {
        CHECK(std::isinf(s.rho));
        CHECK(s.a_y == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("clockwise and counterclockwise circles mirror the radius sign") {
    const auto ccw = derive_kinematics(wztest::circle_track(100.0, 20.0, 10.0, 10.0, false));
    const auto cw = derive_kinematics(wztest::circle_track(100.0, 20.0, 10.0, 10.0, true));
    for (std::size_t i = 0; i < ccw.samples.size(); ++i) {
        CHECK(ccw.samples[i].rho == doctest::Approx(-cw.samples[i].rho).epsilon(1e-6));
    }
    CHECK(ccw.samples[5].rho < 0.0); // counterclockwise = left turn = negative denominator
}

TEST_CASE("circle accelerations: a_x vanishes for uniform speed, |a_y| = v^2/R") {
    const auto kt = derive_kinematics(wztest::circle_track(100.0, 20.0, 10.0, 20.0));
    for (const auto& s : kt.samples) {
        CHECK(std::abs(s.a_x) < 0.01);
        CHECK(std::abs(std::abs(s.a_y) - 4.0) < 0.01);
    }
}

TEST_CASE("straight braking maps to a_x") {
    const auto tr = wztest::straight_track(20.0, {{3.0, -2.5}});
    const auto kt = derive_kinematics(tr);
    for (std::size_t i = 1; i + 1 < kt.samples.size(); ++i) {
        CHECK(kt.samples[i].a_x == doctest::Approx(-2.5).epsilon(1e-6));
        CHECK(kt.samples[i].a_y == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("stationary vehicle reports zero accelerations by convention") {
    VehicleTrack tr;
    tr.sample_rate_hz = 10.0;
    for (int i = 0; i < 30; ++i) tr.samples.push_back({i * 0.1, 42.0, 7.0, 0.0});
    const auto kt = derive_kinematics(tr);
    for (const auto& s : kt.samples) {
        CHECK(s.a_x == 0.0);
        CHECK(s.a_y == 0.0);
        CHECK(s.v == 0.0);
    }
}

TEST_CASE("braking track through the full pipeline stays near ground truth") {
    const auto tr = wztest::straight_track(25.0, {{2.0, 0.0}, {2.0, -2.0}, {2.0, 0.0}});
    const auto kt = derive_kinematics(tr);
    double min_ax = 0.0;
    for (const auto& s : kt.samples) min_ax = std::min(min_ax, s.a_x);
    CHECK(min_ax > -2.2);
    CHECK(min_ax < -1.8);
}

TEST_CASE("lane-change peak lateral acceleration matches the closed form") {
    const double dy = 3.5, T = 3.0, v = 20.0;
    const double expected_peak = 0.5 * dy * std::pow(std::numbers::pi / T, 2);
    const auto kt = derive_kinematics(wztest::lane_change_track(v, dy, T));
    double peak = 0.0;
    for (const auto& s : kt.samples) peak = std::max(peak, std::abs(s.a_y));
    CHECK(std::abs(peak - expected_peak) / expected_peak < 0.05);
}

TEST_CASE("pythagorean identity holds at every live sample") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 100; ++rep) {
        const auto tr = wztest::smooth_random_track(rng, 10.0, 10.0, rep);
        const auto d = differentiate(tr);
        for (std::size_t i = 0; i < d.t.size(); ++i) {
            const auto a = accelerations(d.xp[i], d.yp[i], d.xpp[i], d.ypp[i]);
            if (a.v <= kEpsilonSpeed) continue;
            const double lhs = a.a_x * a.a_x + a.a_y * a.a_y;
            const double rhs = d.xpp[i] * d.xpp[i] + d.ypp[i] * d.ypp[i];
            CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, rhs));
        }
    }
}

TEST_CASE("frame invariance: rotating positions preserves v, |a_x|, |a_y|, |rho|") {
    std::mt19937_64 rng(12);
    const auto tr = wztest::smooth_random_track(rng);
    const double ang = 0.7;
    VehicleTrack rot = tr;
    for (auto& s : rot.samples) {
        const double x = s.x * std::cos(ang) - s.y * std::sin(ang);
        const double y = s.x * std::sin(ang) + s.y * std::cos(ang);
        s.x = x;
        s.y = y;
    }
    const auto a = derive_kinematics(tr);
    const auto b = derive_kinematics(rot);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].v == doctest::Approx(b.samples[i].v).epsilon(1e-9));
        CHECK(std::abs(a.samples[i].a_x) == doctest::Approx(std::abs(b.samples[i].a_x)).epsilon(1e-9));
        CHECK(std::abs(a.samples[i].a_y) == doctest::Approx(std::abs(b.samples[i].a_y)).epsilon(1e-9));
        if (std::isfinite(a.samples[i].rho) && std::isfinite(b.samples[i].rho)) {
            CHECK(std::abs(a.samples[i].rho) == doctest::Approx(std::abs(b.samples[i].rho)).epsilon(1e-6));
        }
    }
}

TEST_CASE("time reversal flips a_x and preserves |a_y|") {
    std::mt19937_64 rng(13);
    const auto tr = wztest::smooth_random_track(rng);
    VehicleTrack rev = tr;
    std::reverse(rev.samples.begin(), rev.samples.end());
    for (std::size_t i = 0; i < rev.samples.size(); ++i) rev.samples[i].t = tr.samples[i].t;
    const auto a = derive_kinematics(tr);
    const auto b = derive_kinematics(rev);
    const std::size_t n = a.samples.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& fwd = a.samples[i];
        const auto& bwd = b.samples[n - 1 - i];
        CHECK(fwd.a_x == doctest::Approx(-bwd.a_x).epsilon(1e-9));
        CHECK(std::abs(fwd.a_y) == doctest::Approx(std::abs(bwd.a_y)).epsilon(1e-9));
    }
}
