// Evaluation: minimum-distance binary matching of detections against ground
// truth, precision/recall/F1, and the spatial lag of first track confirmation.
#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "tunradar/hungarian.hpp"
#include "tunradar/types.hpp"

namespace tunradar {

struct MatchConfig {
    double lateral_threshold = 1.5;      // lane-level accuracy
    double longitudinal_threshold = 5.0; // sized for long trucks
};

struct FrameMatchResult {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    std::vector<std::pair<int, int>> matched_pairs;  // (detection idx, truth idx) counted as TP
};

// Optimal one-to-one matching by total Euclidean distance; a matched pair
// counts as a true positive only when both per-axis offsets are inside the
// thresholds, otherwise it contributes one FP and one FN.
inline FrameMatchResult match_frame(std::span<const Vec2> detections, std::span<const Vec2> truths,
                                    const MatchConfig& cfg) {
    FrameMatchResult res;
    const int nd = static_cast<int>(detections.size());
    const int nt = static_cast<int>(truths.size());
    std::vector<char> det_matched(static_cast<size_t>(nd), false);
    std::vector<char> truth_matched(static_cast<size_t>(nt), false);

    if (nd > 0 && nt > 0) {
        std::vector<double> cost(static_cast<size_t>(nd) * nt, 0.0);
        for (int d = 0; d < nd; ++d)
            for (int t = 0; t < nt; ++t)
                cost[static_cast<size_t>(d) * nt + t] =
                    distance(detections[static_cast<size_t>(d)], truths[static_cast<size_t>(t)]);
        const auto assign = solve_assignment(cost, nd, nt);
        for (int d = 0; d < nd; ++d) {
            const int t = assign[static_cast<size_t>(d)];
            if (t < 0) continue;
            det_matched[static_cast<size_t>(d)] = true;
            truth_matched[static_cast<size_t>(t)] = true;
            const double dx = std::abs(detections[static_cast<size_t>(d)].x -
                                       truths[static_cast<size_t>(t)].x);
            const double dy = std::abs(detections[static_cast<size_t>(d)].y -
                                       truths[static_cast<size_t>(t)].y);
            if (dx <= cfg.lateral_threshold && dy <= cfg.longitudinal_threshold) {
                res.tp += 1;
                res.matched_pairs.emplace_back(d, t);
            } else {
                res.fp += 1;
                res.fn += 1;
            }
        }
    }
    for (int d = 0; d < nd; ++d)
        if (!det_matched[static_cast<size_t>(d)]) res.fp += 1;
    for (int t = 0; t < nt; ++t)
        if (!truth_matched[static_cast<size_t>(t)]) res.fn += 1;
    return res;
}

struct MetricsCounts {
    long tp = 0;
    long fp = 0;
    long fn = 0;

    MetricsCounts& operator+=(const FrameMatchResult& r) {
        tp += r.tp;
        fp += r.fp;
        fn += r.fn;
        return *this;
    }
    MetricsCounts& operator+=(const MetricsCounts& r) {
        tp += r.tp;
        fp += r.fp;
        fn += r.fn;
        return *this;
    }
};

struct MetricsReport {
    MetricsCounts counts;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R); zero denominators yield 0.
inline MetricsReport compute_metrics(const MetricsCounts& counts) {
    MetricsReport rep;
    rep.counts = counts;
    const double tp = static_cast<double>(counts.tp);
    rep.precision = counts.tp + counts.fp > 0 ? tp / static_cast<double>(counts.tp + counts.fp) : 0.0;
    rep.recall = counts.tp + counts.fn > 0 ? tp / static_cast<double>(counts.tp + counts.fn) : 0.0;
    rep.f1 = rep.precision + rep.recall > 0.0
                 ? 2.0 * rep.precision * rep.recall / (rep.precision + rep.recall)
                 : 0.0;
    return rep;
}

// Spatial lag of one vehicle: longitudinal distance, in its travel
// direction, between where it entered the detection region and where its
// trajectory was first confirmed.
struct LagInput {
    int vehicle_id = 0;
    double entry_y = 0.0;                     // first in-region longitudinal position
    std::optional<double> first_confirmed_y;  // from the first confirmed matched track
};

struct SpatialLagReport {
    std::vector<std::pair<int, double>> per_vehicle;
    double mean_lag = 0.0;
    int never_confirmed = 0;
};

inline SpatialLagReport spatial_lag(std::span<const LagInput> inputs) {
    SpatialLagReport rep;
    double sum = 0.0;
    for (const auto& in : inputs) {
        if (!in.first_confirmed_y) {
            rep.never_confirmed += 1;
            continue;
        }
        const double lag = std::abs(*in.first_confirmed_y - in.entry_y);
        rep.per_vehicle.emplace_back(in.vehicle_id, lag);
        sum += lag;
    }
    if (!rep.per_vehicle.empty()) rep.mean_lag = sum / static_cast<double>(rep.per_vehicle.size());
    return rep;
}

}  // namespace tunradar
