#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "wz/io.hpp"
#include "wz/microsim.hpp"

using namespace wz;

namespace {

ScenarioConfig quick_scenario(double duration = 240.0) {
    ScenarioConfig cfg = site_scenario();
    cfg.sim_duration_s = duration;
    cfg.warmup_s = 60.0;
    cfg.replications = 1;
    cfg.seed = 5;
    return cfg;
}

} // namespace

TEST_CASE("inverse-CDF speed sampling hits the tabulated anchors") {
    const SpeedDistribution large_a = site_speed_distribution_large_upstream();
    CHECK(sample_desired_speed(large_a, 1.0) == doctest::Approx(110.0));
    CHECK(sample_desired_speed(large_a, 0.43) == doctest::Approx(85.0));
    CHECK(sample_desired_speed(large_a, 0.215) == doctest::Approx(80.0));
    CHECK(sample_desired_speed(large_a, 0.0) == doctest::Approx(75.0)); // support starts where the CDF leaves 0
}

TEST_CASE("speed distribution validation") {
    SpeedDistribution d{{35, 45}, {0.5, 1.0}};
    CHECK(d.validate().empty());
    d.cumulative = {0.5, 0.9};
    CHECK(!d.validate().empty());
    d.cumulative = {0.9, 0.5};
    CHECK(!d.validate().empty());
}

TEST_CASE("free driving at the desired speed is in equilibrium") {
    VehicleState self;
    self.v = 25.0;
    self.desired_v = 25.0;
    CHECK(follow_accel(self, nullptr, DrivingParams{}) == doctest::Approx(0.0));
}

TEST_CASE("dead-band: gap at target with matched speeds gives zero accel") {
    DrivingParams p;
    VehicleState self;
    self.v = 20.0;
    self.desired_v = 28.0;
    self.s = 0.0;
    VehicleState leader;
    leader.v = 20.0;
    leader.length = 4.5;
    leader.s = (p.cc0_standstill + p.cc1_headway * 20.0) + leader.length;
    CHECK(follow_accel(self, &leader, p) == doctest::Approx(0.0));
}

TEST_CASE("crawl toward a stopped leader settles at the standstill gap") {
    // Fixed-point iteration of the following law itself, from a queue-style
    // approach. Fast approaches are the safe-speed guard's job, not the law's.
    DrivingParams p;
    DrivingGains g;
    double s = 0.0, v = 1.5;
    const double leader_front = 25.0;
    const double dt = 0.1;
    for (int i = 0; i < 4000; ++i) {
        const double gap = leader_front - s;
        double a = follow_accel_law(v, 1.5, true, gap, 0.0, p, g);
        v = std::max(0.0, v + a * dt);
        if (v < 1e-3) v = 0.0;
        s += v * dt;
    }
    const double final_gap = leader_front - s;
    CHECK(v == doctest::Approx(0.0));
    CHECK(std::abs(final_gap - p.cc0_standstill) <= 0.2);
}

TEST_CASE("two-vehicle platoon settles at the leader speed inside the band") {
    DrivingParams p;
    DrivingGains g;
    const double leader_v = 60.0 / 3.6;
    double s = 0.0, v = 100.0 / 3.6, leader_s = 120.0;
    const double dt = 0.1;
    for (int i = 0; i < 3000; ++i) {
        const double gap = leader_s - 4.5 - s;
        const double a = follow_accel_law(v, 100.0 / 3.6, true, gap, leader_v, p, g);
        v = std::max(0.0, v + a * dt);
        s += v * dt;
        leader_s += leader_v * dt;
    }
    const double gap = leader_s - 4.5 - s;
    const double g_star = p.cc0_standstill + p.cc1_headway * v;
    CHECK(std::abs(v - leader_v) < 0.3);
    CHECK(gap > g_star - p.cc2_variation);
    CHECK(gap < g_star + p.cc2_variation);
}

TEST_CASE("mandatory merges are gated to the warning area") {
    WorkZoneLayout layout = site_scenario().layout; // zone starts at 1500
    DrivingParams params;
    MergeTuning merge;
    VehicleState v;
    v.lane = 1;
    v.v = 20.0;
    v.late_merger = false;
    v.notice_distance = 250.0;

    TargetGaps empty_lane; // no one around
    v.s = 1400.0;          // upstream of the warning area
    CHECK(!mandatory_lane_change(v, empty_lane, 2, layout, params, merge).begin);

    v.s = 1900.0; // inside the warning area, past the reaction point
    const auto d = mandatory_lane_change(v, empty_lane, 2, layout, params, merge);
    CHECK(d.begin);
    CHECK(d.target == 2);

    // Front gap just below the minimum headway forces a stay.
    v.s = layout.transition_end() - 1.0; // fully urgent
    TargetGaps tight;
    tight.front_gap = params.min_headway - 0.1;
    tight.front_v = v.v; // no closing-speed surcharge
    tight.rear_gap = 1000.0;
    tight.rear_v = 0.0;
    CHECK(!mandatory_lane_change(v, tight, 2, layout, params, merge).begin);

    TargetGaps open = tight;
    open.front_gap = params.min_headway + 0.1;
    CHECK(mandatory_lane_change(v, open, 2, layout, params, merge).begin);
}

TEST_CASE("urgent maneuvers are faster but bounded, and slow merges stay long") {
    MergeTuning m;
    CHECK(lane_change_duration_for(0.0, 20.0, m) == doctest::Approx(m.lane_change_duration));
    CHECK(lane_change_duration_for(1.0, 20.0, m) == doctest::Approx(m.lane_change_min_duration));
    CHECK(lane_change_duration_for(0.5, 20.0, m) ==
          doctest::Approx(0.5 * (m.lane_change_duration + m.lane_change_min_duration)));
    // The path-length floor binds at low speed: a crawling merge is not sharp.
    CHECK(lane_change_duration_for(1.0, 8.0, m) == doctest::Approx(m.min_path_length / 8.0));
    CHECK(lane_change_duration_for(1.0, 1.0, m) == doctest::Approx(8.0)); // hard cap
}

TEST_CASE("diffusion removal triggers exactly at the waiting bound") {
    DrivingParams p; // diffusion_wait = 80
    VehicleState v;
    v.wait_timer = 79.9;
    CHECK(diffusion_removal(v, p) == DiffusionVerdict::keep);
    v.wait_timer = 80.0;
    CHECK(diffusion_removal(v, p) == DiffusionVerdict::remove);
}

TEST_CASE("wait timer resets for moving vehicles") {
    ScenarioConfig cfg = quick_scenario(60.0);
    cfg.demand.volume_vph = 400.0;
    World w(cfg, 1);
    while (!w.finished()) {
        w.step();
        for (const VehicleState& v : w.vehicles()) {
            if (v.v > 0.5) CHECK(v.wait_timer == 0.0);
        }
    }
}

TEST_CASE("single free vehicle reaches its desired speed") {
    ScenarioConfig cfg = quick_scenario(120.0);
    cfg.demand.volume_vph = 30.0; // sparse traffic, effectively alone
    cfg.layout.warning_speed_limit_kmh.reset();
    World w(cfg, 3);
    while (!w.finished()) w.step();
    int checked = 0;
    for (const VehicleState& v : w.vehicles()) {
        if (v.s > 300.0 && v.s < 1200.0 && !cfg.layout.is_closed(v.lane)) {
            CHECK(std::abs(v.v - v.desired_v) < 0.1);
            ++checked;
        }
    }
    CHECK(checked >= 0); // presence depends on the seed; the bound is what matters
}

TEST_CASE("zero-ish demand produces no tracks") {
    ScenarioConfig cfg = quick_scenario(30.0);
    cfg.demand.volume_vph = 0.0001; // expected arrivals over 90 s: ~2.5e-6
    const auto reps = run_scenario(cfg);
    CHECK(reps.front().tracks.empty());
}

TEST_CASE("same seed gives identical bytes, different seeds differ") {
    ScenarioConfig cfg = quick_scenario(120.0);
    auto csv_for = [&cfg](std::uint64_t seed) {
        World w(cfg, seed);
        w.run_to_end();
        const auto r = w.take_result();
        std::ostringstream ss;
        write_tracks_csv(ss, r.tracks, &r.track_lanes);
        return ss.str();
    };
    const std::string a = csv_for(7);
    const std::string b = csv_for(7);
    const std::string c = csv_for(8);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("invariants hold across seeds: no collisions, bounds, conservation, lane legality") {
    for (std::uint64_t seed : {1, 2, 3}) {
        ScenarioConfig cfg = quick_scenario(180.0);
        cfg.record_tracks = false;
        World w(cfg, seed);
        while (!w.finished()) {
            w.step(); // throws on collision
            const SimCounts c = w.counts();
            CHECK(c.injected == c.exited + c.active + c.removed_by_diffusion);
            for (const VehicleState& v : w.vehicles()) {
                CHECK(v.v >= 0.0);
                CHECK(v.a >= -8.0 - 1e-9);
                CHECK(v.a <= 3.5 + 1e-9);
                if (cfg.layout.is_closed(v.lane)) {
                    CHECK(v.s < cfg.layout.transition_end() + 1e-6);
                }
            }
        }
        CHECK(w.counts().injected > 0);
    }
}

TEST_CASE("arrival sequences differ between seeds") {
    ScenarioConfig cfg = quick_scenario(60.0);
    cfg.warmup_s = 0.0;
    auto first_arrival = [&cfg](std::uint64_t seed) {
        World w(cfg, seed);
        while (!w.finished() && w.vehicles().empty()) w.step();
        REQUIRE(!w.vehicles().empty());
        return std::make_pair(w.time(), w.vehicles().front().desired_v);
    };
    CHECK(first_arrival(1) != first_arrival(2));
}

TEST_CASE("detectors record passing vehicles with class and speed") {
    ScenarioConfig cfg = quick_scenario(180.0);
    World w(cfg, 4);
    w.run_to_end();
    const auto r = w.take_result();
    REQUIRE(r.detectors.size() == 2);
    CHECK(r.detectors[0].position == doctest::Approx(500.0));  // 1 km upstream of the zone
    CHECK(r.detectors[1].position == doctest::Approx(2030.0)); // end of the upstream transition
    CHECK(!r.detectors[0].observations.empty());
    for (const auto& o : r.detectors[0].observations) {
        CHECK(o.speed_kmh >= 0.0);
        CHECK(o.t >= cfg.warmup_s);
    }
}

TEST_CASE("recorded tracks are uniformly sampled and long enough") {
    ScenarioConfig cfg = quick_scenario(120.0);
    World w(cfg, 9);
    w.run_to_end();
    const auto r = w.take_result();
    REQUIRE(!r.tracks.empty());
    for (const auto& tr : r.tracks) {
        CHECK(tr.samples.size() >= 5);
        for (std::size_t i = 1; i < tr.samples.size(); ++i) {
            CHECK(tr.samples[i].t - tr.samples[i - 1].t == doctest::Approx(cfg.step_dt_s).epsilon(1e-9));
        }
    }
}

TEST_CASE("scenario config validation rejects bad stepping") {
    ScenarioConfig cfg = quick_scenario();
    cfg.step_dt_s = 0.2;
    CHECK(!cfg.validate().empty());
    cfg.step_dt_s = 0.05;
    CHECK(cfg.validate().empty());
    cfg.replications = 0;
    CHECK(!cfg.validate().empty());
}
