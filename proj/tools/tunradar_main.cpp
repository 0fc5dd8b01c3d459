// Command-line front end: simulate scenarios, correct ghost points, run
// detection, evaluate pipeline variants, benchmark the two correction
// paths, and build/inspect tunnel models.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "tunradar/io.hpp"
#include "tunradar/pipeline.hpp"

namespace fs = std::filesystem;
using namespace tunradar;

namespace {

struct CommonOpts {
    std::string config;
    std::string out_dir = ".";
    uint64_t seed = 0;
    bool seed_set = false;
};

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return os;
}

ScenarioFile load_scenario(const std::string& config_path) {
    const fs::path path(config_path);
    return parse_scenario_config(load_json_file(path), path.parent_path());
}

std::vector<RadarPoint> collect_ghost_batch(const SegmentedTunnelModel& model,
                                            const ScenarioFile& sf, size_t want) {
    std::vector<RadarPoint> batch;
    uint64_t seed = sf.scenario.seed;
    while (batch.size() < want) {
        ScenarioConfig sc = sf.scenario;
        sc.seed = seed++;
        const auto sim = simulate_scenario(model, sc);
        for (const auto& frame : sim.frames) {
            for (const auto& sp : frame.points) {
                try {
                    if (model.classify(sp.point).label == PointLabel::kGhost)
                        batch.push_back(sp.point);
                } catch (const OutOfExtentError&) {
                }
                if (batch.size() >= want) return batch;
            }
        }
        if (seed > sf.scenario.seed + 64)
            throw std::runtime_error("bench: scenario yields too few ghost points");
    }
    return batch;
}

int cmd_model(const CommonOpts& opts, const std::string& out_file) {
    const fs::path path(opts.config);
    const auto cfg = parse_tunnel_config(load_json_file(path));
    const auto model = build_model(cfg);
    const std::string text = dump_model_text(model);
    if (out_file.empty()) {
        std::cout << text;
    } else {
        open_out(out_file) << text;
    }
    return 0;
}

int cmd_simulate(const CommonOpts& opts) {
    auto sf = load_scenario(opts.config);
    if (opts.seed_set) sf.scenario.seed = opts.seed;
    const auto model = build_model(sf.tunnel);
    const auto sim = simulate_scenario(model, sf.scenario);

    fs::create_directories(opts.out_dir);
    auto frames_os = open_out(fs::path(opts.out_dir) / "frames.jsonl");
    write_frames_jsonl(frames_os, sim.frames);
    auto truth_os = open_out(fs::path(opts.out_dir) / "truth.jsonl");
    write_truth_jsonl(truth_os, sim.truth);

    std::cout << "simulated " << sim.frames.size() << " frames ("
              << sf.scenario.vehicles.size() << " vehicles) -> " << opts.out_dir << "\n";
    return 0;
}

int cmd_correct(const CommonOpts& opts, const std::string& frames_file,
                const std::string& correction_model, bool keep_uncorrectable) {
    const auto sf = load_scenario(opts.config);
    const auto model = build_model(sf.tunnel);

    std::ifstream is(frames_file);
    if (!is) throw std::runtime_error("cannot open " + frames_file);
    const auto frames = read_frames_jsonl(is);

    CorrectionConfig cfg;
    cfg.radar_position = sf.scenario.radar.position;
    cfg.drop_uncorrectable = !keep_uncorrectable;

    std::vector<CorrectedFrame> corrected;
    std::vector<CandidateDumpRecord> dumps;
    CandidateDumpSink sink = [&](const CandidateDumpRecord& rec) { dumps.push_back(rec); };

    const SegmentedCandidateGenerator seg_gen;
    const CurvedCandidateGenerator cur_gen;
    std::vector<Vec2> previous;
    ClusterConfig cluster_cfg;
    Tracker tracker;
    for (const auto& frame : frames) {
        CorrectedFrame cf;
        if (correction_model == "curved") {
            cf = correct_frame(model, cfg, frame, previous, cur_gen, SelectionPolicy::kFused, sink);
        } else {
            cf = correct_frame(model, cfg, frame, previous, seg_gen, SelectionPolicy::kFused, sink);
        }
        // track on the side so the spatial-distance criterion has history
        std::vector<RadarPoint> pts;
        for (const auto& cp : cf.points) pts.push_back(cp.point);
        std::vector<Vec2> detections;
        for (const auto& c : cluster_frame(pts, cluster_cfg)) detections.push_back(c.centroid);
        previous.clear();
        for (const auto& o : tracker.step(frame.index, detections)) previous.push_back(o.position);
        corrected.push_back(std::move(cf));
    }

    fs::create_directories(opts.out_dir);
    auto corrected_os = open_out(fs::path(opts.out_dir) / "corrected.jsonl");
    write_corrected_jsonl(corrected_os, corrected);
    auto cand_os = open_out(fs::path(opts.out_dir) / "candidates.jsonl");
    write_candidates_jsonl(cand_os, dumps);

    std::cout << "corrected " << frames.size() << " frames (" << dumps.size()
              << " ghost records, model=" << correction_model << ") -> " << opts.out_dir << "\n";
    return 0;
}

int cmd_detect(const CommonOpts& opts, const std::string& frames_file) {
    std::ifstream is(frames_file);
    if (!is) throw std::runtime_error("cannot open " + frames_file);
    const auto frames = read_frames_jsonl(is);

    ClusterConfig cluster_cfg;
    Tracker tracker;
    std::vector<TrackFrameLog> logs;
    for (const auto& frame : frames) {
        std::vector<RadarPoint> pts;
        for (const auto& sp : frame.points) pts.push_back(sp.point);
        std::vector<Vec2> detections;
        for (const auto& c : cluster_frame(pts, cluster_cfg)) detections.push_back(c.centroid);
        logs.push_back({frame.index, tracker.step(frame.index, detections)});
    }

    fs::create_directories(opts.out_dir);
    auto os = open_out(fs::path(opts.out_dir) / "tracks.jsonl");
    write_tracks_jsonl(os, logs);
    std::cout << "tracked " << frames.size() << " frames -> " << opts.out_dir << "/tracks.jsonl\n";
    return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& variant_arg) {
    auto sf = load_scenario(opts.config);
    if (opts.seed_set) sf.scenario.seed = opts.seed;
    const auto model = build_model(sf.tunnel);
    const auto sim = simulate_scenario(model, sf.scenario);

    std::vector<PipelineVariant> variants;
    if (variant_arg == "all") {
        variants = {PipelineVariant::kRawPoints,   PipelineVariant::kGhostRemoval,
                    PipelineVariant::kLeastDistance, PipelineVariant::kLeastPathLoss,
                    PipelineVariant::kCurveModel,    PipelineVariant::kFull};
    } else {
        variants = {parse_variant(variant_arg)};
    }

    fs::create_directories(opts.out_dir);
    auto frames_os = open_out(fs::path(opts.out_dir) / "frames.jsonl");
    write_frames_jsonl(frames_os, sim.frames);
    auto truth_os = open_out(fs::path(opts.out_dir) / "truth.jsonl");
    write_truth_jsonl(truth_os, sim.truth);

    PipelineConfig cfg;
    cfg.keep_artifacts = true;
    cfg.collect_candidates = true;
    cfg.correction.radar_position = sf.scenario.radar.position;

    std::vector<MetricsRow> rows;
    for (const auto v : variants) {
        const auto res = run_pipeline(model, sf.scenario.radar, sim, v, cfg);
        const std::string vname = variant_name(v);

        auto corrected_os = open_out(fs::path(opts.out_dir) / ("corrected_" + vname + ".jsonl"));
        write_corrected_jsonl(corrected_os, res.corrected_frames);
        std::vector<TrackFrameLog> logs;
        for (size_t k = 0; k < res.tracks_per_frame.size(); ++k)
            logs.push_back({static_cast<int>(k), res.tracks_per_frame[k]});
        auto tracks_os = open_out(fs::path(opts.out_dir) / ("tracks_" + vname + ".jsonl"));
        write_tracks_jsonl(tracks_os, logs);
        auto cand_os = open_out(fs::path(opts.out_dir) / ("candidates_" + vname + ".jsonl"));
        write_candidates_jsonl(cand_os, res.candidate_dumps);

        MetricsRow row;
        row.scenario = sf.scenario.name;
        row.variant = vname;
        row.frames = static_cast<long>(sim.frames.size());
        row.report = res.metrics;
        row.mean_lag = res.lag.mean_lag;
        row.never_confirmed = res.lag.never_confirmed;
        row.processing_fps = res.processing_fps;
        rows.push_back(row);

        std::cout << vname << ": P=" << res.metrics.precision << " R=" << res.metrics.recall
                  << " F1=" << res.metrics.f1 << " fps=" << res.processing_fps << "\n";
    }
    auto metrics_os = open_out(fs::path(opts.out_dir) / "metrics.csv");
    write_metrics_csv(metrics_os, rows);
    return 0;
}

int cmd_bench(const CommonOpts& opts, int points, int frame_size, const std::string& out_file) {
    const auto sf = load_scenario(opts.config);
    const auto model = build_model(sf.tunnel);
    CorrectionConfig cfg;
    cfg.radar_position = sf.scenario.radar.position;

    const auto batch = collect_ghost_batch(model, sf, static_cast<size_t>(points));
    const auto report = bench_correction(model, cfg, batch, frame_size);

    const json j{{"schema", kTimingSchema},
                 {"batch_size", report.batch_size},
                 {"segmented_us_per_point", report.segmented_us_per_point},
                 {"curved_us_per_point", report.curved_us_per_point},
                 {"speedup", report.speedup},
                 {"frame_size", report.frame_size},
                 {"pipeline_fps", report.pipeline_fps}};
    if (!out_file.empty()) open_out(out_file) << j.dump(2) << "\n";
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tunnel radar multipath simulation and ghost-correction toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string frames_file, out_file, variant = "full", correction_model = "segmented";
    bool keep_uncorrectable = false;
    int bench_points = 1000, bench_frame_size = 200;

    const auto add_common = [&](CLI::App* cmd, bool needs_outdir = true) {
        cmd->add_option("--config", opts.config, "config file (JSON)")->required();
        if (needs_outdir) cmd->add_option("--out-dir", opts.out_dir, "output directory");
        cmd->add_option("--seed", opts.seed, "override the scenario seed")
            ->each([&](const std::string&) { opts.seed_set = true; });
    };

    auto* sim_cmd = app.add_subcommand("simulate", "simulate a scenario into frame/truth logs");
    add_common(sim_cmd);

    auto* correct_cmd = app.add_subcommand("correct", "correct ghost points in a frames log");
    add_common(correct_cmd);
    correct_cmd->add_option("--frames", frames_file, "frames log (JSONL)")->required();
    correct_cmd->add_option("--model", correction_model, "segmented|curved")
        ->check(CLI::IsMember({"segmented", "curved"}));
    correct_cmd->add_flag("--keep-uncorrectable", keep_uncorrectable,
                          "keep flagged uncorrectable ghosts instead of dropping them");

    auto* detect_cmd = app.add_subcommand("detect", "cluster and track a frames log");
    add_common(detect_cmd);
    detect_cmd->add_option("--frames", frames_file, "frames log (JSONL)")->required();

    auto* eval_cmd = app.add_subcommand("eval", "run a pipeline variant end to end");
    add_common(eval_cmd);
    eval_cmd->add_option("--variant", variant,
                         "raw_points|ghost_removal|least_distance|least_path_loss|curve_model|full|all");

    auto* bench_cmd = app.add_subcommand("bench", "time segmented vs curved correction");
    add_common(bench_cmd, false);
    bench_cmd->add_option("--points", bench_points, "ghost batch size (>= 1000 recommended)");
    bench_cmd->add_option("--frame-size", bench_frame_size, "points per frame for the fps figure");
    bench_cmd->add_option("--out", out_file, "write the timing report to this file");

    auto* model_cmd = app.add_subcommand("model", "build and dump a tunnel model");
    add_common(model_cmd, false);
    model_cmd->add_option("--out", out_file, "write the model dump to this file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim_cmd->parsed()) return cmd_simulate(opts);
        if (correct_cmd->parsed()) return cmd_correct(opts, frames_file, correction_model, keep_uncorrectable);
        if (detect_cmd->parsed()) return cmd_detect(opts, frames_file);
        if (eval_cmd->parsed()) return cmd_eval(opts, variant);
        if (bench_cmd->parsed()) return cmd_bench(opts, bench_points, bench_frame_size, out_file);
        if (model_cmd->parsed()) return cmd_model(opts, out_file);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
