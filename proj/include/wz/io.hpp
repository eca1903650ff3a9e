#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wz/calibrate.hpp"
#include "wz/classify.hpp"
#include "wz/correction.hpp"
#include "wz/core.hpp"
#include "wz/density.hpp"
#include "wz/microsim.hpp"
#include "wz/pipeline.hpp"

namespace wz {

// Numeric CSV fields are written with 6 significant digits so that
// write -> read -> write is byte-stable.
inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline const char* kTrackCsvHeader = "vehicle_id,class,t,x,y,v,lane";

inline void write_tracks_csv(std::ostream& os, const std::vector<VehicleTrack>& tracks,
                             const std::vector<std::vector<int>>* lanes = nullptr) {
    os << kTrackCsvHeader << "\n";
    for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
        const VehicleTrack& tr = tracks[ti];
        for (std::size_t i = 0; i < tr.samples.size(); ++i) {
            const TrajectorySample& s = tr.samples[i];
            const int lane = lanes ? (*lanes)[ti][i] : 0;
            os << tr.vehicle_id << ',' << to_string(tr.vehicle_class) << ',' << format_number(s.t) << ','
               << format_number(s.x) << ',' << format_number(s.y) << ',' << format_number(s.v) << ',' << lane << "\n";
        }
    }
}

struct TrackCsv {
    std::vector<VehicleTrack> tracks;
    std::vector<std::vector<int>> lanes; ///< parallel to tracks/samples
};

inline TrackCsv read_tracks_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw Error(Errc::ParseError, "empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool has_v = line == kTrackCsvHeader;
    if (!has_v && line != "vehicle_id,class,t,x,y,lane") {
        throw Error(Errc::SchemaError, "unexpected header: " + line);
    }
    struct Row {
        int id;
        VehicleClass klass;
        double t, x, y, v;
        int lane;
    };
    std::map<int, std::vector<Row>> by_vehicle;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        const std::size_t expected = has_v ? 7 : 6;
        if (fields.size() != expected) {
            throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(expected) + " fields, got " +
                                              std::to_string(fields.size()));
        }
        try {
            Row r;
            std::size_t f = 0;
            r.id = std::stoi(fields[f++]);
            const std::string& cls = fields[f++];
            if (cls == "small") {
                r.klass = VehicleClass::small;
            } else if (cls == "large") {
                r.klass = VehicleClass::large;
            } else {
                throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": unknown class " + cls);
            }
            r.t = std::stod(fields[f++]);
            r.x = std::stod(fields[f++]);
            r.y = std::stod(fields[f++]);
            r.v = has_v ? std::stod(fields[f++]) : 0.0;
            r.lane = std::stoi(fields[f++]);
            by_vehicle[r.id].push_back(r);
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": malformed numeric field");
        }
    }
    TrackCsv out;
    for (auto& [id, rows] : by_vehicle) {
        VehicleTrack tr;
        tr.vehicle_id = id;
        tr.vehicle_class = rows.front().klass;
        std::vector<int> lane_col;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i > 0 && rows[i].t <= rows[i - 1].t) {
                throw Error(Errc::SchemaError, "vehicle " + std::to_string(id) + " has non-increasing timestamps");
            }
            tr.samples.push_back({rows[i].t, rows[i].x, rows[i].y, rows[i].v});
            lane_col.push_back(rows[i].lane);
        }
        if (tr.samples.size() >= 2) {
            tr.sample_rate_hz = 1.0 / (tr.samples[1].t - tr.samples[0].t);
            if (!has_v) {
                // Recover speeds from positions: central differences inside,
                // one-sided at the ends.
                const double dt = tr.samples[1].t - tr.samples[0].t;
                for (std::size_t i = 0; i < tr.samples.size(); ++i) {
                    const std::size_t a = i == 0 ? 0 : i - 1;
                    const std::size_t b = i + 1 < tr.samples.size() ? i + 1 : i;
                    const double span = static_cast<double>(b - a) * dt;
                    tr.samples[i].v = std::hypot(tr.samples[b].x - tr.samples[a].x,
                                                 tr.samples[b].y - tr.samples[a].y) / span;
                }
            }
        }
        out.tracks.push_back(std::move(tr));
        out.lanes.push_back(std::move(lane_col));
    }
    return out;
}

inline const char* kDetectorCsvHeader = "position,t,vehicle_id,class,speed_kmh";

inline void write_detectors_csv(std::ostream& os, const std::vector<DetectorRecord>& detectors) {
    os << kDetectorCsvHeader << "\n";
    for (const DetectorRecord& d : detectors) {
        for (const DetectorObservation& o : d.observations) {
            os << format_number(d.position) << ',' << format_number(o.t) << ',' << o.vehicle_id << ','
               << to_string(o.klass) << ',' << format_number(o.speed_kmh) << "\n";
        }
    }
}

inline std::vector<DetectorRecord> read_detectors_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw Error(Errc::ParseError, "empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kDetectorCsvHeader) throw Error(Errc::SchemaError, "unexpected header: " + line);
    std::map<double, DetectorRecord> by_pos;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f;
        std::vector<std::string> fields;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() != 5) throw Error(Errc::ParseError, "line " + std::to_string(line_no));
        try {
            const double pos = std::stod(fields[0]);
            DetectorObservation o;
            o.t = std::stod(fields[1]);
            o.vehicle_id = std::stoi(fields[2]);
            o.klass = fields[3] == "large" ? VehicleClass::large : VehicleClass::small;
            o.speed_kmh = std::stod(fields[4]);
            auto& rec = by_pos[pos];
            rec.position = pos;
            rec.observations.push_back(o);
        } catch (const std::exception&) {
            throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": malformed numeric field");
        }
    }
    std::vector<DetectorRecord> out;
    for (auto& [pos, rec] : by_pos) out.push_back(std::move(rec));
    return out;
}

inline void write_density_csv(std::ostream& os, const DensityField& field) {
    os << "x,y,value\n";
    const auto nx = field.spec.nx(), ny = field.spec.ny();
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            os << format_number(field.spec.cell_x(i)) << ',' << format_number(field.spec.cell_y(j)) << ','
               << format_number(field.at(i, j)) << "\n";
        }
    }
}

/// Rebuild a density field from its CSV. The grid is inferred from the
/// distinct cell-center coordinates.
inline DensityField read_density_csv(std::istream& is, double bandwidth = 30.0) {
    std::string line;
    if (!std::getline(is, line)) throw Error(Errc::ParseError, "empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x,y,value") throw Error(Errc::SchemaError, "unexpected header: " + line);
    std::vector<double> xs, ys, vals;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f;
        std::vector<std::string> fields;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() != 3) throw Error(Errc::ParseError, "bad density row: " + line);
        xs.push_back(std::stod(fields[0]));
        ys.push_back(std::stod(fields[1]));
        vals.push_back(std::stod(fields[2]));
    }
    if (xs.empty()) throw Error(Errc::ParseError, "no density rows");
    std::vector<double> ux = xs, uy = ys;
    std::sort(ux.begin(), ux.end());
    ux.erase(std::unique(ux.begin(), ux.end()), ux.end());
    std::sort(uy.begin(), uy.end());
    uy.erase(std::unique(uy.begin(), uy.end()), uy.end());
    DensityField field;
    field.spec.cell = ux.size() > 1 ? ux[1] - ux[0] : (uy.size() > 1 ? uy[1] - uy[0] : 5.0);
    field.spec.x_min = ux.front() - 0.5 * field.spec.cell;
    field.spec.x_max = ux.back() + 0.5 * field.spec.cell;
    field.spec.y_min = uy.front() - 0.5 * field.spec.cell;
    field.spec.y_max = uy.back() + 0.5 * field.spec.cell;
    field.spec.bandwidth = bandwidth;
    field.values.assign(field.spec.nx() * field.spec.ny(), 0.0);
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const auto i = static_cast<std::size_t>(std::lower_bound(ux.begin(), ux.end(), xs[k]) - ux.begin());
        const auto j = static_cast<std::size_t>(std::lower_bound(uy.begin(), uy.end(), ys[k]) - uy.begin());
        field.at(i, j) = vals[k];
    }
    return field;
}

/// Grayscale map of a density field, plain-text PGM, brightest at the peak.
inline void write_pgm(std::ostream& os, const DensityField& field) {
    const auto nx = field.spec.nx(), ny = field.spec.ny();
    double peak = 0.0;
    for (double v : field.values) peak = std::max(peak, v);
    os << "P2\n" << nx << " " << ny << "\n255\n";
    for (std::size_t j = 0; j < ny; ++j) {
        // Row order top-down: the highest y first.
        const std::size_t row = ny - 1 - j;
        for (std::size_t i = 0; i < nx; ++i) {
            const int level = peak > 0 ? static_cast<int>(std::lround(field.at(i, row) / peak * 255.0)) : 0;
            os << level << (i + 1 < nx ? " " : "\n");
        }
    }
}

/// Zone boundaries and labeled cluster-center markers over the field extent.
inline void write_svg_overlay(std::ostream& os, const DensityField& field, const WorkZoneLayout& layout,
                              const std::vector<ClusterCenter>& centers) {
    const DensityGridSpec& g = field.spec;
    const double scale = 1.0; // SVG units per meter
    const double w = (g.x_max - g.x_min) * scale;
    const double h = (g.y_max - g.y_min) * scale;
    auto sx = [&](double x) { return (x - g.x_min) * scale; };
    auto sy = [&](double y) { return (g.y_max - y) * scale; };
    char buf[160];
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 "
       << w << " " << h << "\">\n";
    const double boundaries[] = {layout.zone_start_x,          layout.warning_end(),
                                 layout.transition_end(),      layout.buffer_end(),
                                 layout.work_end(),            layout.downstream_transition_end(),
                                 layout.zone_end_x()};
    for (double b : boundaries) {
        if (b < g.x_min || b > g.x_max) continue;
        std::snprintf(buf, sizeof buf,
                      "  <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#444\" stroke-dasharray=\"4 3\"/>\n",
                      sx(b), sy(g.y_min), sx(b), sy(g.y_max));
        os << buf;
    }
    for (const ClusterCenter& c : centers) {
        std::snprintf(buf, sizeof buf, "  <circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"none\" stroke=\"#c00\"/>\n",
                      sx(c.x), sy(c.y));
        os << buf;
        std::snprintf(buf, sizeof buf, "  <text x=\"%.2f\" y=\"%.2f\" font-size=\"8\">%s</text>\n", sx(c.x) + 6.0,
                      sy(c.y) - 2.0, format_number(c.density).c_str());
        os << buf;
    }
    os << "</svg>\n";
}

// ---------------------------------------------------------------------------
// JSON bindings

using nlohmann::json;

inline void to_json(json& j, const SpeedDistribution& d) {
    j = json{{"control_points_kmh", d.control_points_kmh}, {"cumulative", d.cumulative}};
}

inline void from_json(const json& j, SpeedDistribution& d) {
    j.at("control_points_kmh").get_to(d.control_points_kmh);
    j.at("cumulative").get_to(d.cumulative);
}

inline void to_json(json& j, const WorkZoneLayout& l) {
    j = json{{"warning_length", l.warning_length},
             {"upstream_transition_length", l.upstream_transition_length},
             {"upstream_transition_style", to_string(l.upstream_transition_style)},
             {"buffer_length", l.buffer_length},
             {"work_length", l.work_length},
             {"downstream_transition_length", l.downstream_transition_length},
             {"termination_length", l.termination_length},
             {"lane_count", l.lane_count},
             {"closed_lanes", std::vector<int>(l.closed_lanes.begin(), l.closed_lanes.end())},
             {"lane_width", l.lane_width},
             {"zone_start_x", l.zone_start_x}};
    if (l.warning_speed_limit_kmh) j["warning_speed_limit_kmh"] = *l.warning_speed_limit_kmh;
}

inline void from_json(const json& j, WorkZoneLayout& l) {
    j.at("warning_length").get_to(l.warning_length);
    j.at("upstream_transition_length").get_to(l.upstream_transition_length);
    const std::string style = j.value("upstream_transition_style", "stepped");
    if (style == "stepped") {
        l.upstream_transition_style = TransitionStyle::stepped;
    } else if (style == "gradual") {
        l.upstream_transition_style = TransitionStyle::gradual;
    } else {
        throw Error(Errc::SchemaError, "unknown transition style: " + style);
    }
    l.buffer_length = j.value("buffer_length", 80.0);
    j.at("work_length").get_to(l.work_length);
    l.downstream_transition_length = j.value("downstream_transition_length", 30.0);
    l.termination_length = j.value("termination_length", 30.0);
    j.at("lane_count").get_to(l.lane_count);
    std::vector<int> closed = j.at("closed_lanes").get<std::vector<int>>();
    l.closed_lanes = std::set<int>(closed.begin(), closed.end());
    l.lane_width = j.value("lane_width", 3.5);
    l.zone_start_x = j.value("zone_start_x", 0.0);
    if (j.contains("warning_speed_limit_kmh")) {
        l.warning_speed_limit_kmh = j.at("warning_speed_limit_kmh").get<double>();
    } else {
        l.warning_speed_limit_kmh.reset();
    }
}

inline void to_json(json& j, const DrivingParams& p) {
    j = json{{"cc0_standstill", p.cc0_standstill},
             {"cc1_headway", p.cc1_headway},
             {"cc2_variation", p.cc2_variation},
             {"diffusion_wait", p.diffusion_wait},
             {"min_headway", p.min_headway}};
}

inline void from_json(const json& j, DrivingParams& p) {
    j.at("cc0_standstill").get_to(p.cc0_standstill);
    j.at("cc1_headway").get_to(p.cc1_headway);
    j.at("cc2_variation").get_to(p.cc2_variation);
    j.at("diffusion_wait").get_to(p.diffusion_wait);
    j.at("min_headway").get_to(p.min_headway);
}

inline void to_json(json& j, const DemandConfig& d) {
    j = json{{"volume_vph", d.volume_vph},
             {"large_fraction", d.large_fraction},
             {"desired_speed_small", d.desired_speed_small},
             {"desired_speed_large", d.desired_speed_large}};
}

inline void from_json(const json& j, DemandConfig& d) {
    j.at("volume_vph").get_to(d.volume_vph);
    j.at("large_fraction").get_to(d.large_fraction);
    j.at("desired_speed_small").get_to(d.desired_speed_small);
    j.at("desired_speed_large").get_to(d.desired_speed_large);
}

inline void to_json(json& j, const ScenarioConfig& c) {
    j = json{{"layout", c.layout},
             {"demand", c.demand},
             {"driving", c.driving},
             {"sim_duration_s", c.sim_duration_s},
             {"warmup_s", c.warmup_s},
             {"step_dt_s", c.step_dt_s},
             {"seed", c.seed},
             {"replications", c.replications},
             {"record_tracks", c.record_tracks},
             {"name", c.name}};
    if (c.warning_speed_limit_override_kmh) j["warning_speed_limit_override_kmh"] = *c.warning_speed_limit_override_kmh;
    if (c.network_length > 0) j["network_length"] = c.network_length;
    if (!c.detector_positions.empty()) j["detector_positions"] = c.detector_positions;
}

inline void from_json(const json& j, ScenarioConfig& c) {
    j.at("layout").get_to(c.layout);
    j.at("demand").get_to(c.demand);
    if (j.contains("driving")) j.at("driving").get_to(c.driving);
    c.sim_duration_s = j.value("sim_duration_s", 3600.0);
    c.warmup_s = j.value("warmup_s", 120.0);
    c.step_dt_s = j.value("step_dt_s", 0.1);
    c.seed = j.value("seed", std::uint64_t{1});
    c.replications = j.value("replications", 3);
    c.record_tracks = j.value("record_tracks", true);
    c.name = j.value("name", std::string{});
    if (j.contains("warning_speed_limit_override_kmh")) {
        c.warning_speed_limit_override_kmh = j.at("warning_speed_limit_override_kmh").get<double>();
    } else {
        c.warning_speed_limit_override_kmh.reset();
    }
    c.network_length = j.value("network_length", 0.0);
    if (j.contains("detector_positions")) {
        j.at("detector_positions").get_to(c.detector_positions);
    } else {
        c.detector_positions.clear();
    }
}

inline void to_json(json& j, const DetectionConfig& c) {
    j = json{{"window_s", c.window_s},
             {"hop_s", c.hop_s},
             {"lat_max", c.thresholds.lat_max},
             {"lon_accel_max", c.thresholds.lon_accel_max},
             {"lon_decel_max", c.thresholds.lon_decel_max},
             {"t1_percentile", c.t1_percentile},
             {"merge_gap_s", c.merge_gap_s}};
}

inline void from_json(const json& j, DetectionConfig& c) {
    c.window_s = j.value("window_s", 1.0);
    c.hop_s = j.value("hop_s", 0.1);
    c.thresholds.lat_max = j.value("lat_max", 3.6);
    c.thresholds.lon_accel_max = j.value("lon_accel_max", 1.25);
    c.thresholds.lon_decel_max = j.value("lon_decel_max", 2.5);
    c.t1_percentile = j.value("t1_percentile", 0.30);
    c.merge_gap_s = j.value("merge_gap_s", 0.3);
}

inline void to_json(json& j, const DensityGridSpec& g) {
    j = json{{"x_min", g.x_min},   {"x_max", g.x_max},         {"y_min", g.y_min},
             {"y_max", g.y_max},   {"cell", g.cell},           {"bandwidth", g.bandwidth},
             {"proportion_constant", g.proportion_constant}};
}

inline void from_json(const json& j, DensityGridSpec& g) {
    j.at("x_min").get_to(g.x_min);
    j.at("x_max").get_to(g.x_max);
    j.at("y_min").get_to(g.y_min);
    j.at("y_max").get_to(g.y_max);
    g.cell = j.value("cell", 5.0);
    g.bandwidth = j.value("bandwidth", 30.0);
    g.proportion_constant = j.value("proportion_constant", 36.5);
}

inline void to_json(json& j, const SafetyThresholds& t) {
    j = json{{"lon_upstream", t.lon_upstream},
             {"lane_change_upstream", t.lane_change_upstream},
             {"termination", t.termination}};
}

inline void from_json(const json& j, SafetyThresholds& t) {
    t.lon_upstream = j.value("lon_upstream", 3.0);
    t.lane_change_upstream = j.value("lane_change_upstream", 3.0);
    t.termination = j.value("termination", 3.0);
}

inline void to_json(json& j, const AssessmentRow& r) {
    j = json{{"label", to_string(r.label)},
             {"region_group", to_string(r.group)},
             {"max_density", r.max_density},
             {"proportion_percent", r.proportion},
             {"replications_present", r.replications_present}};
}

inline void to_json(json& j, const AssessmentReport& r) {
    j = json{{"scenario", r.scenario}, {"replications", r.replications}, {"rows", r.rows}};
}

inline void to_json(json& j, const ProblemFlag& f) {
    j = json{{"index", f.index},
             {"label", to_string(f.label)},
             {"region_group", to_string(f.group)},
             {"density", f.density},
             {"threshold", f.threshold}};
}

inline void to_json(json& j, const LoopIteration& it) {
    j = json{{"layout", it.layout}, {"report", it.report}, {"flags", it.flags}};
    if (it.action) j["action"] = to_string(it.action->kind);
}

inline void to_json(json& j, const LoopHistory& h) {
    j = json{{"verdict", to_string(h.verdict)}, {"iterations", h.iterations}};
}

inline void to_json(json& j, const MeanSpeeds& m) {
    j = json{{"small_kmh", m.small_kmh}, {"large_kmh", m.large_kmh}, {"all_kmh", m.all_kmh}};
}

inline void from_json(const json& j, MeanSpeeds& m) {
    j.at("small_kmh").get_to(m.small_kmh);
    j.at("large_kmh").get_to(m.large_kmh);
    j.at("all_kmh").get_to(m.all_kmh);
}

inline void to_json(json& j, const Observations& o) {
    j = json{{"small_dist", o.small_dist}, {"large_dist", o.large_dist}, {"means", o.means}};
}

inline void from_json(const json& j, Observations& o) {
    j.at("small_dist").get_to(o.small_dist);
    j.at("large_dist").get_to(o.large_dist);
    j.at("means").get_to(o.means);
}

inline void to_json(json& j, const OrthogonalRun& r) {
    j = json{{"index", r.index},
             {"levels", r.levels},
             {"params", r.params},
             {"measured_means", r.measured_means},
             {"p1", r.p1_value},
             {"p2", r.p2_value}};
}

inline void to_json(json& j, const MeasureXi& m) {
    j = json{{"name", m.name},
             {"actual", m.actual},
             {"simulated", m.simulated},
             {"xi_percent", m.xi_percent},
             {"within", m.within}};
}

inline void to_json(json& j, const ValidationResult& v) {
    j = json{{"measures", v.measures}, {"within_fraction", v.within_fraction}, {"accepted", v.accepted}};
}

inline void to_json(json& j, const CalibrationResult& c) {
    j = json{{"runs", c.runs},
             {"p1_level_means", c.means.p1_means},
             {"p2_level_means", c.means.p2_means},
             {"best_levels", c.best},
             {"best_levels_p1", c.best_p1},
             {"best_levels_p2", c.best_p2},
             {"best_params", c.best_params},
             {"validation", c.validation}};
}

/// Whole-pipeline configuration consumed by the correction loop command.
struct PipelineConfig {
    ScenarioConfig scenario;
    DetectionConfig detection;
    ClassifierMode classifier_mode = ClassifierMode::rule;
    std::string classifier_model_path;
    std::optional<DensityGridSpec> grid;
    SafetyThresholds thresholds;
    CorrectionBounds bounds;
    double min_peak = 1e-3;
    std::string output_dir;
};

inline void to_json(json& j, const CorrectionBounds& b) {
    j = json{{"min_limit_kmh", b.min_limit_kmh},
             {"max_limit_kmh", b.max_limit_kmh},
             {"min_transition_m", b.min_transition_m},
             {"max_transition_m", b.max_transition_m}};
}

inline void from_json(const json& j, CorrectionBounds& b) {
    b.min_limit_kmh = j.value("min_limit_kmh", 40.0);
    b.max_limit_kmh = j.value("max_limit_kmh", 80.0);
    b.min_transition_m = j.value("min_transition_m", 30.0);
    b.max_transition_m = j.value("max_transition_m", 120.0);
}

inline void to_json(json& j, const PipelineConfig& p) {
    j = json{{"scenario", p.scenario},
             {"detection", p.detection},
             {"classifier", json{{"mode", p.classifier_mode == ClassifierMode::rule ? "rule" : "svm"},
                                 {"model", p.classifier_model_path}}},
             {"thresholds", p.thresholds},
             {"bounds", p.bounds},
             {"min_peak", p.min_peak},
             {"output_dir", p.output_dir}};
    if (p.grid) j["grid"] = *p.grid;
}

inline void from_json(const json& j, PipelineConfig& p) {
    j.at("scenario").get_to(p.scenario);
    if (j.contains("detection")) j.at("detection").get_to(p.detection);
    if (j.contains("classifier")) {
        const std::string mode = j.at("classifier").value("mode", "rule");
        if (mode == "svm") {
            p.classifier_mode = ClassifierMode::svm;
        } else if (mode == "rule") {
            p.classifier_mode = ClassifierMode::rule;
        } else {
            throw Error(Errc::SchemaError, "unknown classifier mode: " + mode);
        }
        p.classifier_model_path = j.at("classifier").value("model", "");
    }
    if (j.contains("grid")) {
        DensityGridSpec g;
        j.at("grid").get_to(g);
        p.grid = g;
    } else {
        p.grid.reset();
    }
    if (j.contains("thresholds")) j.at("thresholds").get_to(p.thresholds);
    if (j.contains("bounds")) j.at("bounds").get_to(p.bounds);
    p.min_peak = j.value("min_peak", 1e-3);
    p.output_dir = j.value("output_dir", std::string{});
}

// ---------------------------------------------------------------------------
// File helpers

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::IoError, "cannot write " + path);
    f << content;
}

template <typename T>
T load_json_file(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, path + ": " + e.what());
    }
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        throw Error(Errc::SchemaError, path + ": " + e.what());
    }
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

} // namespace wz
