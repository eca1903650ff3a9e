// wzsafe: work-zone safety assessment toolkit.
//
// Subcommands cover the three framework steps: simulate traffic through a
// configured zone, analyze trajectories into unsafe-behavior densities, and
// assess/correct the layout until it passes its thresholds.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "wz/calibrate.hpp"
#include "wz/classify.hpp"
#include "wz/correction.hpp"
#include "wz/io.hpp"
#include "wz/maneuvers.hpp"
#include "wz/microsim.hpp"
#include "wz/pipeline.hpp"

namespace fs = std::filesystem;
using wz::json;

namespace {

constexpr const char* kVersion = "wzsafe 1.0.0";

bool g_json_errors = false;

int fail(const wz::Error& e) {
    if (g_json_errors) {
        json j{{"error", e.what()}, {"kind", wz::errc_name(e.code())}};
        std::cerr << j.dump() << "\n";
    } else {
        std::cerr << "error: " << e.what() << "\n";
    }
    switch (e.code()) {
        case wz::Errc::ParseError:
        case wz::Errc::SchemaError:
        case wz::Errc::InvalidConfig:
        case wz::Errc::MismatchedControlPoints:
        case wz::Errc::IoError:
            return 1;
        default:
            return 2;
    }
}

wz::AnalysisConfig analysis_from(const wz::PipelineConfig& pc) {
    wz::AnalysisConfig a;
    a.detection = pc.detection;
    a.mode = pc.classifier_mode;
    a.min_peak = pc.min_peak;
    if (pc.classifier_mode == wz::ClassifierMode::svm) {
        if (pc.classifier_model_path.empty()) {
            throw wz::Error(wz::Errc::InvalidConfig, "classifier mode svm requires a model path");
        }
        std::ifstream mf(pc.classifier_model_path);
        if (!mf) throw wz::Error(wz::Errc::IoError, "cannot open " + pc.classifier_model_path);
        a.model = wz::ClassifierModel::load(mf);
    }
    return a;
}

void write_analysis_outputs(const std::string& out_dir, const std::vector<wz::BehaviorSegment>& segments,
                            const wz::LabelFields& fields) {
    fs::create_directories(out_dir);
    {
        std::ostringstream ss;
        ss << "vehicle_id,label,t_start,t_end,trigger_axis,centroid_x,centroid_y,peak_energy\n";
        for (const wz::BehaviorSegment& s : segments) {
            ss << s.vehicle_id << ',' << wz::to_string(s.label) << ',' << wz::format_number(s.interval.t_start) << ','
               << wz::format_number(s.interval.t_end) << ',' << wz::to_string(s.interval.trigger_axis) << ','
               << wz::format_number(s.centroid_x) << ',' << wz::format_number(s.centroid_y) << ','
               << wz::format_number(s.interval.peak_energy) << "\n";
        }
        wz::write_file(out_dir + "/segments.csv", ss.str());
    }
    for (const auto& [label, field] : fields) {
        std::ostringstream ss;
        wz::write_density_csv(ss, field);
        wz::write_file(out_dir + "/density_" + wz::label_slug(label) + ".csv", ss.str());
    }
}

int cmd_simulate(const std::string& scenario_path, std::uint64_t seed_override, bool has_seed, int replication,
                 const std::string& out_path, const std::string& detectors_path) {
    auto cfg = wz::load_json_file<wz::ScenarioConfig>(scenario_path);
    if (has_seed) cfg.seed = seed_override;
    const auto violations = cfg.validate();
    if (!violations.empty()) throw wz::Error(wz::Errc::InvalidConfig, violations.front());
    wz::World world(cfg, cfg.seed + static_cast<std::uint64_t>(replication));
    world.run_to_end();
    const wz::ReplicationResult result = world.take_result();
    std::ostringstream ss;
    wz::write_tracks_csv(ss, result.tracks, &result.track_lanes);
    wz::write_file(out_path, ss.str());
    if (!detectors_path.empty()) {
        std::ostringstream ds;
        wz::write_detectors_csv(ds, result.detectors);
        wz::write_file(detectors_path, ds.str());
    }
    std::cout << "wrote " << result.tracks.size() << " tracks to " << out_path << "\n";
    return 0;
}

int cmd_analyze(const std::string& tracks_path, const std::string& layout_path, const std::string& out_dir,
                const std::string& detection_path, const std::string& model_path, const std::string& grid_path) {
    std::ifstream tf(tracks_path);
    if (!tf) throw wz::Error(wz::Errc::IoError, "cannot open " + tracks_path);
    const wz::TrackCsv tracks = wz::read_tracks_csv(tf);
    const auto layout = wz::load_json_file<wz::WorkZoneLayout>(layout_path);

    wz::AnalysisConfig cfg;
    if (!detection_path.empty()) cfg.detection = wz::load_json_file<wz::DetectionConfig>(detection_path);
    if (!model_path.empty()) {
        std::ifstream mf(model_path);
        if (!mf) throw wz::Error(wz::Errc::IoError, "cannot open " + model_path);
        cfg.model = wz::ClassifierModel::load(mf);
        cfg.mode = wz::ClassifierMode::svm;
    }
    wz::DensityGridSpec grid = grid_path.empty() ? wz::default_grid_for(layout)
                                                 : wz::load_json_file<wz::DensityGridSpec>(grid_path);
    const auto grid_violations = grid.validate(&layout);
    if (!grid_violations.empty()) throw wz::Error(wz::Errc::InvalidConfig, grid_violations.front());

    const auto segments = wz::analyze_tracks(tracks.tracks, layout, cfg);
    const auto fields = wz::density_fields(segments, grid);
    write_analysis_outputs(out_dir, segments, fields);
    std::cout << "analyzed " << tracks.tracks.size() << " tracks: " << segments.size() << " unsafe segments, "
              << fields.size() << " density fields -> " << out_dir << "\n";
    return 0;
}

int cmd_assess(const std::string& density_dir, const std::string& layout_path, const std::string& thresholds_path,
               const std::string& out_path, double min_peak) {
    const auto layout = wz::load_json_file<wz::WorkZoneLayout>(layout_path);
    wz::SafetyThresholds thresholds;
    if (!thresholds_path.empty()) thresholds = wz::load_json_file<wz::SafetyThresholds>(thresholds_path);
    wz::LabelFields fields;
    for (const auto& entry : fs::directory_iterator(density_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("density_", 0) != 0 || entry.path().extension() != ".csv") continue;
        const std::string slug = name.substr(8, name.size() - 8 - 4);
        wz::BehaviorLabel label;
        if (!wz::label_from_string(slug, label)) continue;
        std::ifstream f(entry.path());
        wz::DensityField field = wz::read_density_csv(f);
        field.label = label;
        fields[label] = std::move(field);
    }
    const wz::AssessmentReport report = wz::build_report({fields}, layout, min_peak);
    const auto flags = wz::assess(report, thresholds);
    json j{{"report", report}, {"flags", flags}, {"safe", flags.empty()}};
    wz::write_file(out_path, wz::dump_json(j));
    std::cout << (flags.empty() ? "zone assesses safe" : "zone has " + std::to_string(flags.size()) + " problem flag(s)")
              << " -> " << out_path << "\n";
    return 0;
}

int cmd_correct_loop(const std::string& config_path, int max_iters, const std::string& out_path) {
    const auto pc = wz::load_json_file<wz::PipelineConfig>(config_path);
    const wz::AnalysisConfig analysis = analysis_from(pc);
    const wz::DensityGridSpec grid = pc.grid ? *pc.grid : wz::default_grid_for(pc.scenario.layout);
    const wz::LoopHistory history =
        wz::correction_loop(pc.scenario, analysis, grid, pc.thresholds, max_iters, pc.bounds);
    wz::write_file(out_path, wz::dump_json(json(history)));
    std::cout << "verdict: " << wz::to_string(history.verdict) << " after " << history.iterations.size()
              << " iteration(s) -> " << out_path << "\n";
    return 0;
}

int cmd_calibrate(const std::string& observations_path, const std::string& scenario_path, const std::string& out_path,
                  std::size_t detector_index) {
    const auto obs = wz::load_json_file<wz::Observations>(observations_path);
    const auto scenario = wz::load_json_file<wz::ScenarioConfig>(scenario_path);
    wz::CalibrateConfig cc;
    cc.detector_index = detector_index;
    const wz::CalibrationResult result = wz::calibrate(obs, scenario, cc);
    wz::write_file(out_path, wz::dump_json(json(result)));
    std::cout << "best combination:";
    const char* names = "ABCDE";
    for (std::size_t f = 0; f < wz::kFactorCount; ++f) std::cout << " " << names[f] << result.best[f] + 1;
    std::cout << (result.validation.accepted ? " (validated)" : " (validation failed)") << " -> " << out_path << "\n";
    return 0;
}

int cmd_train_classifier(const std::string& out_path, int per_class, std::uint64_t seed, bool report) {
    std::vector<wz::LabeledFeatures> train, held_out;
    const auto corpus = wz::synthetic_corpus(per_class, seed);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        (i % 5 == 4 ? held_out : train).push_back(corpus[i]);
    }
    wz::TrainConfig tc;
    tc.seed = seed;
    const auto model = wz::ClassifierModel::train(train, tc);
    std::ofstream f(out_path);
    if (!f) throw wz::Error(wz::Errc::IoError, "cannot write " + out_path);
    model.save(f);
    if (report) {
        std::size_t agree = 0;
        for (const auto& lf : held_out) {
            if (model.predict(lf.features) == lf.label) ++agree;
        }
        std::cout << "held-out agreement: " << agree << "/" << held_out.size() << " ("
                  << 100.0 * static_cast<double>(agree) / static_cast<double>(held_out.size()) << "%)\n";
    }
    std::cout << "model saved to " << out_path << "\n";
    return 0;
}

int cmd_render(const std::string& density_path, const std::string& layout_path, const std::string& out_base,
               double min_peak) {
    const auto layout = wz::load_json_file<wz::WorkZoneLayout>(layout_path);
    std::ifstream f(density_path);
    if (!f) throw wz::Error(wz::Errc::IoError, "cannot open " + density_path);
    const wz::DensityField field = wz::read_density_csv(f);
    bool empty = true;
    for (double v : field.values) {
        if (v > 0) {
            empty = false;
            break;
        }
    }
    if (empty) std::cerr << "warning: density field is empty\n";
    const auto centers = wz::find_cluster_centers(field, layout, min_peak);
    std::ostringstream pgm;
    wz::write_pgm(pgm, field);
    wz::write_file(out_base + ".pgm", pgm.str());
    std::ostringstream svg;
    wz::write_svg_overlay(svg, field, layout, centers);
    wz::write_file(out_base + ".svg", svg.str());
    std::cout << "rendered " << out_base << ".pgm and " << out_base << ".svg (" << centers.size()
              << " cluster centers)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Work-zone traffic safety assessment and correction toolkit"};
    app.set_version_flag("--version", kVersion);
    app.add_flag("--json-errors", g_json_errors, "Emit errors as JSON on stderr");
    app.require_subcommand(1);

    std::string scenario_path, out_path, detectors_path, tracks_path, layout_path, out_dir;
    std::string detection_path, model_path, grid_path, density_dir, thresholds_path, config_path;
    std::string observations_path, density_path, out_base;
    std::uint64_t seed = 0;
    int replication = 0;
    int max_iters = 5;
    int per_class = 250;
    std::size_t detector_index = 1;
    double min_peak = 1e-3;
    bool train_report = false;

    auto* sim = app.add_subcommand("simulate", "Run one replication and export trajectories");
    sim->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    auto* seed_opt = sim->add_option("--seed", seed, "Override the scenario seed");
    sim->add_option("--replication", replication, "Replication index (seed offset)");
    sim->add_option("--out", out_path, "Output tracks CSV")->required();
    sim->add_option("--detectors", detectors_path, "Also export detector records CSV");

    auto* ana = app.add_subcommand("analyze", "Detect, classify, and map unsafe segments from tracks");
    ana->add_option("--tracks", tracks_path, "Tracks CSV")->required();
    ana->add_option("--layout", layout_path, "Layout JSON")->required();
    ana->add_option("--out", out_dir, "Output directory")->required();
    ana->add_option("--detection", detection_path, "Detection config JSON");
    ana->add_option("--model", model_path, "Classifier model (defaults to the rule cascade)");
    ana->add_option("--grid", grid_path, "Density grid JSON");

    auto* ass = app.add_subcommand("assess", "Score density maps against safety thresholds");
    ass->add_option("--density", density_dir, "Directory of density_*.csv files")->required();
    ass->add_option("--layout", layout_path, "Layout JSON")->required();
    ass->add_option("--thresholds", thresholds_path, "Thresholds JSON");
    ass->add_option("--out", out_path, "Report JSON")->required();
    ass->add_option("--min-peak", min_peak, "Cluster-center density floor");

    auto* loop = app.add_subcommand("correct-loop", "Iterate simulate-analyze-assess-correct");
    loop->add_option("--config", config_path, "Pipeline JSON")->required();
    loop->add_option("--max-iters", max_iters, "Iteration bound");
    loop->add_option("--out", out_path, "History JSON")->required();

    auto* cal = app.add_subcommand("calibrate", "Orthogonal-design driving-parameter calibration");
    cal->add_option("--observations", observations_path, "Observed distributions/means JSON")->required();
    cal->add_option("--scenario", scenario_path, "Scenario template JSON")->required();
    cal->add_option("--out", out_path, "Calibration report JSON")->required();
    cal->add_option("--detector-index", detector_index, "Detector playing the comparison position");

    auto* tc = app.add_subcommand("train-classifier", "Train the behavior classifier on synthetic maneuvers");
    tc->add_option("--out", out_path, "Model file")->required();
    tc->add_option("--per-class", per_class, "Examples per class");
    tc->add_option("--seed", seed, "Corpus/training seed");
    tc->add_flag("--report", train_report, "Print held-out agreement");

    auto* ren = app.add_subcommand("render", "Render a density CSV as PGM plus SVG overlay");
    ren->add_option("--density", density_path, "Density CSV")->required();
    ren->add_option("--layout", layout_path, "Layout JSON")->required();
    ren->add_option("--out", out_base, "Output basename")->required();
    ren->add_option("--min-peak", min_peak, "Cluster-center density floor");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
        app.exit(e);
        return 1;
    }

    try {
        if (sim->parsed()) {
            return cmd_simulate(scenario_path, seed, !seed_opt->empty(), replication, out_path, detectors_path);
        }
        if (ana->parsed()) {
            return cmd_analyze(tracks_path, layout_path, out_dir, detection_path, model_path, grid_path);
        }
        if (ass->parsed()) return cmd_assess(density_dir, layout_path, thresholds_path, out_path, min_peak);
        if (loop->parsed()) return cmd_correct_loop(config_path, max_iters, out_path);
        if (cal->parsed()) return cmd_calibrate(observations_path, scenario_path, out_path, detector_index);
        if (tc->parsed()) {
            return cmd_train_classifier(out_path, per_class, seed ? seed : 7, train_report);
        }
        if (ren->parsed()) return cmd_render(density_path, layout_path, out_base, min_peak);
    } catch (const wz::Error& e) {
        return fail(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
