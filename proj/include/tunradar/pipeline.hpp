// End-to-end pipeline: simulated (or loaded) frames -> classification ->
// per-variant correction policy -> clustering -> tracking -> matching
// against ground truth. Also the segmented-vs-curved timing benchmark.
#pragma once

#include <chrono>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tunradar/curved_oracle.hpp"
#include "tunradar/detection.hpp"
#include "tunradar/ghost_correction.hpp"
#include "tunradar/metrics.hpp"
#include "tunradar/multipath_sim.hpp"
#include "tunradar/tunnel_model.hpp"

namespace tunradar {

// Baselines replace parts of the full method: raw points skip correction
// entirely, ghost removal drops ghosts, the two single-criterion variants
// disable the fusion, and curve_model swaps in the curved-surface solver.
enum class PipelineVariant {
    kRawPoints,
    kGhostRemoval,
    kLeastDistance,
    kLeastPathLoss,
    kCurveModel,
    kFull,
};

inline const char* variant_name(PipelineVariant v) {
    switch (v) {
        case PipelineVariant::kRawPoints: return "raw_points";
        case PipelineVariant::kGhostRemoval: return "ghost_removal";
        case PipelineVariant::kLeastDistance: return "least_distance";
        case PipelineVariant::kLeastPathLoss: return "least_path_loss";
        case PipelineVariant::kCurveModel: return "curve_model";
        case PipelineVariant::kFull: return "full";
    }
    return "unknown";
}

inline PipelineVariant parse_variant(const std::string& name) {
    for (PipelineVariant v :
         {PipelineVariant::kRawPoints, PipelineVariant::kGhostRemoval, PipelineVariant::kLeastDistance,
          PipelineVariant::kLeastPathLoss, PipelineVariant::kCurveModel, PipelineVariant::kFull}) {
        if (name == variant_name(v)) return v;
    }
    throw ConfigError("unknown pipeline variant: " + name);
}

struct PipelineConfig {
    CorrectionConfig correction;
    ClusterConfig cluster;
    TrackerConfig tracker;
    MatchConfig match;
    bool keep_artifacts = false;    // retain per-frame outputs in the result
    bool collect_candidates = false;
};

struct VehicleFrameStats {
    int in_region_frames = 0;
    int detected_frames = 0;

    double recall() const {
        return in_region_frames > 0 ? static_cast<double>(detected_frames) / in_region_frames : 0.0;
    }
};

struct PipelineResult {
    MetricsReport metrics;
    SpatialLagReport lag;
    double processing_fps = 0.0;  // correction + clustering + tracking only
    long total_points = 0;
    long ghosts_corrected = 0;
    long corrected_inside_footprint = 0;
    std::map<int, VehicleFrameStats> per_vehicle;
    std::vector<CorrectedFrame> corrected_frames;          // keep_artifacts
    std::vector<std::vector<TrackOutput>> tracks_per_frame;  // keep_artifacts
    std::vector<CandidateDumpRecord> candidate_dumps;        // collect_candidates
};

namespace detail {

inline bool footprint_contains(const TruthVehicle& v, const Vec2& p) {
    const Vec2 rel = p - v.position;
    const Vec2 axis = v.heading;
    const Vec2 perp{-axis.y, axis.x};
    return std::abs(dot(rel, axis)) <= v.length / 2.0 && std::abs(dot(rel, perp)) <= v.width / 2.0;
}

}  // namespace detail

// Run one variant over a simulated scenario. Deterministic given the
// simulation result and config; the measured fps is the only wall-clock
// output.
inline PipelineResult run_pipeline(const SegmentedTunnelModel& model, const RadarConfig& radar,
                                   const SimulationResult& sim, PipelineVariant variant,
                                   PipelineConfig cfg = {}) {
    cfg.correction.radar_position = radar.position;  // single source of truth
    PipelineResult result;
    Tracker tracker(cfg.tracker);
    std::vector<Vec2> previous_detections;
    MetricsCounts counts;
    const Vec2 radar2 = radar.position.top_view();

    std::map<int, double> first_in_region_y;
    std::map<int, double> first_confirmed_y;

    const auto in_region = [&](const Vec2& p) {
        const double r = distance(p, radar2);
        return r >= radar.range_min && r <= radar.range_max;
    };

    const SegmentedCandidateGenerator segmented_gen;
    const CurvedCandidateGenerator curved_gen;
    CandidateDumpSink sink = nullptr;
    if (cfg.collect_candidates) {
        sink = [&](const CandidateDumpRecord& rec) { result.candidate_dumps.push_back(rec); };
    }

    using clock = std::chrono::steady_clock;
    std::chrono::nanoseconds processing_time{0};

    for (size_t k = 0; k < sim.frames.size(); ++k) {
        const SimFrame& frame = sim.frames[k];
        const TruthFrame& truth = sim.truth[k];
        result.total_points += static_cast<long>(frame.points.size());

        const auto t0 = clock::now();

        CorrectedFrame corrected;
        switch (variant) {
            case PipelineVariant::kRawPoints: {
                corrected.index = frame.index;
                corrected.timestamp = frame.timestamp;
                for (const auto& sp : frame.points) {
                    CorrectedPoint cp;
                    cp.point = sp.point;
                    cp.raw = sp.point;
                    cp.provenance = sp.provenance;
                    cp.status = CorrectionStatus::kNormal;
                    corrected.points.push_back(cp);
                }
                break;
            }
            case PipelineVariant::kGhostRemoval: {
                corrected.index = frame.index;
                corrected.timestamp = frame.timestamp;
                for (const auto& sp : frame.points) {
                    bool ghost = true;
                    try {
                        ghost = model.classify(sp.point).label == PointLabel::kGhost;
                    } catch (const OutOfExtentError&) {
                    }
                    if (ghost) continue;
                    CorrectedPoint cp;
                    cp.point = sp.point;
                    cp.raw = sp.point;
                    cp.provenance = sp.provenance;
                    cp.status = CorrectionStatus::kNormal;
                    corrected.points.push_back(cp);
                }
                break;
            }
            case PipelineVariant::kLeastDistance:
                corrected = correct_frame(model, cfg.correction, frame, previous_detections,
                                          segmented_gen, SelectionPolicy::kSpatialDistanceOnly, sink);
                break;
            case PipelineVariant::kLeastPathLoss:
                corrected = correct_frame(model, cfg.correction, frame, previous_detections,
                                          segmented_gen, SelectionPolicy::kPathLossOnly, sink);
                break;
            case PipelineVariant::kCurveModel:
                corrected = correct_frame(model, cfg.correction, frame, previous_detections,
                                          curved_gen, SelectionPolicy::kFused, sink);
                break;
            case PipelineVariant::kFull:
                corrected = correct_frame(model, cfg.correction, frame, previous_detections,
                                          segmented_gen, SelectionPolicy::kFused, sink);
                break;
        }

        std::vector<RadarPoint> cluster_input;
        cluster_input.reserve(corrected.points.size());
        for (const auto& cp : corrected.points) cluster_input.push_back(cp.point);
        const auto clusters = cluster_frame(cluster_input, cfg.cluster);

        std::vector<Vec2> detections;
        detections.reserve(clusters.size());
        for (const auto& c : clusters) detections.push_back(c.centroid);

        const auto outputs = tracker.step(frame.index, detections);

        processing_time += clock::now() - t0;

        previous_detections.clear();
        for (const auto& o : outputs) previous_detections.push_back(o.position);

        // ----- evaluation (not timed) -----
        for (const auto& cp : corrected.points) {
            if (cp.status != CorrectionStatus::kCorrected) continue;
            ++result.ghosts_corrected;
            if (cp.provenance.vehicle_id >= 0) {
                for (const auto& v : truth.vehicles) {
                    if (v.id != cp.provenance.vehicle_id) continue;
                    if (detail::footprint_contains(v, cp.point.position()))
                        ++result.corrected_inside_footprint;
                    break;
                }
            }
        }

        std::vector<Vec2> truth_positions;
        std::vector<int> truth_ids;
        for (const auto& v : truth.vehicles) {
            if (!in_region(v.position)) continue;
            truth_positions.push_back(v.position);
            truth_ids.push_back(v.id);
            auto& stats = result.per_vehicle[v.id];
            stats.in_region_frames += 1;
            first_in_region_y.try_emplace(v.id, v.position.y);
        }

        std::vector<Vec2> track_positions;
        for (const auto& o : outputs) track_positions.push_back(o.position);
        const auto match = match_frame(track_positions, truth_positions, cfg.match);
        counts += match;
        for (const auto& [det_idx, truth_idx] : match.matched_pairs) {
            const int vid = truth_ids[static_cast<size_t>(truth_idx)];
            result.per_vehicle[vid].detected_frames += 1;
            first_confirmed_y.try_emplace(vid, track_positions[static_cast<size_t>(det_idx)].y);
        }

        if (cfg.keep_artifacts) {
            result.corrected_frames.push_back(std::move(corrected));
            result.tracks_per_frame.push_back(outputs);
        }
    }

    result.metrics = compute_metrics(counts);

    std::vector<LagInput> lag_inputs;
    for (const auto& [vid, entry_y] : first_in_region_y) {
        LagInput in;
        in.vehicle_id = vid;
        in.entry_y = entry_y;
        if (auto it = first_confirmed_y.find(vid); it != first_confirmed_y.end())
            in.first_confirmed_y = it->second;
        lag_inputs.push_back(in);
    }
    result.lag = spatial_lag(lag_inputs);

    const double seconds = std::chrono::duration<double>(processing_time).count();
    result.processing_fps = seconds > 0.0 ? static_cast<double>(sim.frames.size()) / seconds : 0.0;
    return result;
}

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

struct BenchReport {
    int batch_size = 0;
    double segmented_us_per_point = 0.0;
    double curved_us_per_point = 0.0;
    double speedup = 0.0;  // curved / segmented per-point cost
    int frame_size = 0;
    double pipeline_fps = 0.0;  // correction + clustering + tracking at frame_size
};

// Per-point cost of both correction paths over the same ghost batch, plus
// the sustained frame rate of the full segmented pipeline at a given frame
// size.
inline BenchReport bench_correction(const SegmentedTunnelModel& model, const CorrectionConfig& cfg,
                                    std::span<const RadarPoint> ghost_batch, int frame_size = 200) {
    using clock = std::chrono::steady_clock;
    BenchReport report;
    report.batch_size = static_cast<int>(ghost_batch.size());
    report.frame_size = frame_size;

    const SegmentedCandidateGenerator seg_gen;
    const CurvedCandidateGenerator cur_gen;
    const std::vector<Vec2> prev;

    double guard = 0.0;  // keep the optimizer honest
    {
        const auto t0 = clock::now();
        for (const auto& g : ghost_batch) {
            const auto cands = seg_gen(model, cfg, g);
            if (!cands.empty()) {
                const auto pick = select_by_path_loss(cands);
                guard += cands[pick].position.x;
            }
        }
        const double us = std::chrono::duration<double, std::micro>(clock::now() - t0).count();
        report.segmented_us_per_point = us / static_cast<double>(ghost_batch.size());
    }
    {
        const auto t0 = clock::now();
        for (const auto& g : ghost_batch) {
            const auto cands = cur_gen(model, cfg, g);
            if (!cands.empty()) {
                const auto pick = select_by_path_loss(cands);
                guard += cands[pick].position.x;
            }
        }
        const double us = std::chrono::duration<double, std::micro>(clock::now() - t0).count();
        report.curved_us_per_point = us / static_cast<double>(ghost_batch.size());
    }
    report.speedup = report.segmented_us_per_point > 0.0
                         ? report.curved_us_per_point / report.segmented_us_per_point
                         : 0.0;

    // full segmented pipeline at the requested frame size
    {
        ClusterConfig cluster_cfg;
        Tracker tracker;
        std::vector<Vec2> previous;
        const int n_frames = 20;
        const auto t0 = clock::now();
        size_t cursor = 0;
        for (int k = 0; k < n_frames; ++k) {
            SimFrame frame;
            frame.index = k;
            for (int p = 0; p < frame_size; ++p) {
                frame.points.push_back({ghost_batch[cursor % ghost_batch.size()], Provenance{}});
                ++cursor;
            }
            const auto corrected =
                correct_frame(model, cfg, frame, previous, seg_gen, SelectionPolicy::kFused);
            std::vector<RadarPoint> pts;
            for (const auto& cp : corrected.points) pts.push_back(cp.point);
            const auto clusters = cluster_frame(pts, cluster_cfg);
            std::vector<Vec2> detections;
            for (const auto& c : clusters) detections.push_back(c.centroid);
            const auto outputs = tracker.step(k, detections);
            previous.clear();
            for (const auto& o : outputs) previous.push_back(o.position);
        }
        const double seconds = std::chrono::duration<double>(clock::now() - t0).count();
        report.pipeline_fps = n_frames / seconds;
    }
    volatile double sink = guard;
    (void)sink;
    return report;
}

}  // namespace tunradar
