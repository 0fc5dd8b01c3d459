// Two-stage ghost point correction. Stage one unfolds the reflection across
// every plausible wall/roof plane segment and produces one true-point
// candidate per segment (triangle construction in the cross-section frame).
// Stage two picks the most probable candidate by received-power ranking and
// by spatial distance to the previous frame's vehicles, then fuses the two.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "tunradar/geometry.hpp"
#include "tunradar/tunnel_model.hpp"
#include "tunradar/types.hpp"

namespace tunradar {

struct CorrectionConfig {
    double vehicle_roof_height = 1.5;      // assumed reflection height on the vehicle
    double association_gate = 4.0;         // d_max for the spatial-distance criterion
    Vec3 radar_position{0.0, 0.0, 5.1};    // radar_position.z is the mount height
    double patch_margin = 0.5;             // tolerance on reflection-point bound checks
    bool drop_uncorrectable = true;        // false: keep flagged in the output frame
    double construction_tolerance = 1e-6;  // mirrored ghost must reproduce the detection
    double sin_beta_guard = 1e-6;
    double cos_two_beta_guard = 1e-6;
};

// Free-space radar-equation constants for the one-bounce path
// O -> T -> R -> O. All of them cancel in the candidate ranking, which
// depends on the product L1*L2 only; they are kept here so the received
// power can be reported in physical units.
struct PathLossModel {
    double transmit_power = 1.0;
    double gain_tx = 1.0;
    double gain_rx = 1.0;
    double rcs_vehicle = 1.0;
    double rcs_surface = 1.0;
    double wavelength = 0.0039;  // 77 GHz

    double received_power(double l0, double l1, double l2) const {
        const double four_pi = 4.0 * kPi;
        const double denom = std::pow(four_pi, 4) * std::pow(l0 * l1 * l2, 2);
        return transmit_power * gain_tx * gain_rx * rcs_vehicle * rcs_surface * wavelength *
               wavelength / denom;
    }

    static double ranking_key(double l1, double l2) { return l1 * l2; }
};

struct TruePointCandidate {
    Vec2 position;            // hypothesized vehicle position (top view)
    int roof_index = 0;       // 1-based reflection segment indices
    int path_index = 0;
    int side = +1;
    double l1 = 0.0;          // |O R|, radar to reflection point (3D)
    double l2 = 0.0;          // |R T|, reflection point to vehicle roof (3D)
    Vec3 roof_point;          // T at the assumed roof height
    Vec3 mirrored_ghost;      // G', specular image of the roof point
    Vec3 reflection_point;    // R on the plane segment
    double dist_g2t = 0.0;
};

// ---------------------------------------------------------------------------
// Stage one: candidate generation
// ---------------------------------------------------------------------------

namespace detail {

struct TriangleSolution {
    Vec2 true_pos;
    double dist_g2t = 0.0;
    int side = +1;
};

// Unfold the reflection across roof chord i in the given path frame.
// Angles and lengths follow the two-symmetric-triangles construction; all
// intermediate quantities are signed so the chain stays exact for chords
// past the tunnel crown as well.
inline std::optional<TriangleSolution> unfold_across_chord(const CrossSectionSpec& cs,
                                                           int roof_index, double sector_angle,
                                                           const PathFrame& frame, const Vec2& ghost,
                                                           double h_car, double sin_beta_guard,
                                                           double cos_two_beta_guard) {
    const double s = std::sqrt(frame.m * frame.m + 1.0);
    const double offset = frame_offset(frame, ghost);
    const int side = offset >= 0.0 ? +1 : -1;
    const double dist_center = std::abs(offset);

    const double alpha =
        roof_index * sector_angle - std::asin(cs.h_center / cs.r_tunnel);
    const double gamma = (kPi - sector_angle) / 2.0;
    const double beta = kPi - alpha - gamma;

    const double sin_beta = std::sin(beta);
    const double cos_two_beta = std::cos(2.0 * beta);
    if (std::abs(sin_beta) < sin_beta_guard) return std::nullopt;
    if (std::abs(cos_two_beta) < cos_two_beta_guard) return std::nullopt;

    const double delta_h = cs.h_center - h_car;
    const double sin_alpha = std::sin(alpha);
    double ad, dg;
    if (delta_h == 0.0) {
        ad = cs.r_tunnel;
        dg = dist_center;
    } else {
        if (std::abs(sin_alpha) < 1e-12) return std::nullopt;
        ad = cs.r_tunnel + delta_h / sin_alpha;
        dg = dist_center + delta_h / std::tan(alpha);
    }
    const double cd = ad * std::sin(gamma) / sin_beta;
    const double dist_g2t = (cd - dg) * (1.0 - cos_two_beta) / cos_two_beta;
    if (!std::isfinite(dist_g2t)) return std::nullopt;

    // Move the ghost by dist_g2t perpendicular to the local centerline,
    // toward the road (the branch is picked by the ghost's side).
    const Vec2 lateral_unit{1.0 / s, -frame.m / s};
    TriangleSolution sol;
    sol.true_pos = ghost - (side * dist_g2t) * lateral_unit;
    sol.dist_g2t = dist_g2t;
    sol.side = side;
    return sol;
}

struct Reconstruction {
    Vec3 roof_point;
    Vec3 mirrored_ghost;
    Vec3 reflection_point;
    double l1 = 0.0;
    double l2 = 0.0;
};

// Rebuild the 3D specular path for a solved candidate: mirror the roof
// point across the hypothesis plane and intersect the radar ray with it.
// When `tolerance` is finite the mirrored point must also project back
// onto the detected ghost (exact when the unfold frame and the plane frame
// coincide, as in the curved solver).
inline std::optional<Reconstruction> reconstruct_path(const Plane3& plane, const Vec3& radar,
                                                      const Vec2& true_pos, double h_car,
                                                      const Vec2& ghost, double tolerance) {
    Reconstruction rec;
    rec.roof_point = {true_pos.x, true_pos.y, h_car};
    rec.mirrored_ghost = mirror_point_across_plane(rec.roof_point, plane);
    if (std::isfinite(tolerance) &&
        distance(rec.mirrored_ghost.top_view(), ghost) > tolerance)
        return std::nullopt;

    const auto hit = intersect_segment_plane(radar, rec.mirrored_ghost, plane);
    if (!hit || hit->t <= 0.0 || hit->t >= 1.0) return std::nullopt;
    rec.reflection_point = hit->point;
    rec.l1 = distance(radar, rec.reflection_point);
    rec.l2 = distance(rec.reflection_point, rec.roof_point);
    if (!(rec.l1 > 0.0) || !(rec.l2 > 0.0)) return std::nullopt;
    return rec;
}

}  // namespace detail

// Roof/path segment pairs whose wall patch is crossed, in top view, by the
// segment from the radar to the detected ghost. This is a superset of the
// pairs that can yield a valid reflection; generate_candidate does the
// exact checks.
inline std::vector<std::pair<int, int>> enumerate_reflection_segments(
    const SegmentedTunnelModel& model, const CorrectionConfig& config, const RadarPoint& ghost) {
    const Vec2 radar2 = config.radar_position.top_view();
    const Vec2 g{ghost.x, ghost.y};
    std::vector<std::pair<int, int>> out;

    const int n_roof = static_cast<int>(model.roof_segments().size());
    const int n_path = static_cast<int>(model.path_segments().size());
    for (int j = 1; j <= n_path; ++j) {
        const int side = model.signed_offset(g, j) >= 0.0 ? +1 : -1;
        for (int i = 1; i <= n_roof; ++i) {
            const auto quad =
                model.patch_quad(side, i, j, config.patch_margin);
            if (segment_intersects_convex_quad(radar2, g, quad)) out.emplace_back(i, j);
        }
    }
    return out;
}

// Full construction for one (roof, path) segment pair. The 2D unfolding is
// framed by the path segment the ghost itself lies in (the segment whose
// line feeds the centerline-distance formula); the hypothesis pair (i, j)
// names the wall patch assumed to have reflected the signal, which supplies
// the plane for the 3D path-length reconstruction. Returns nullopt when the
// geometry is degenerate or the candidate is not a drivable position;
// hypotheses whose reflection point drifts off the patch are kept, since
// arbitrating between surviving hypotheses is the job of stage two.
inline std::optional<TruePointCandidate> generate_candidate(const SegmentedTunnelModel& model,
                                                            const CorrectionConfig& config,
                                                            const RadarPoint& ghost,
                                                            std::pair<int, int> segment) {
    const auto [roof_i, path_j] = segment;
    const RoofSegment& rs = model.roof_segment(roof_i);
    const Vec2 g{ghost.x, ghost.y};

    int ghost_slab;
    try {
        ghost_slab = model.path_segment_index_at(g.y);
    } catch (const OutOfExtentError&) {
        return std::nullopt;
    }
    const PathFrame frame = model.frame_of(ghost_slab);

    const auto sol = detail::unfold_across_chord(model.cross_section(), roof_i, rs.sector_angle,
                                                 frame, g, config.vehicle_roof_height,
                                                 config.sin_beta_guard, config.cos_two_beta_guard);
    if (!sol) return std::nullopt;

    // Candidates must be drivable positions (checked where they landed).
    int cand_slab;
    try {
        cand_slab = model.path_segment_index_at(sol->true_pos.y);
    } catch (const OutOfExtentError&) {
        return std::nullopt;
    }
    const double lane_offset = model.signed_offset(sol->true_pos, cand_slab);
    const auto& lanes = model.lane_boundaries();
    if (lane_offset < lanes.left - 1e-9 || lane_offset > lanes.right + 1e-9) return std::nullopt;

    const WallPatch patch = model.patch(sol->side, roof_i, path_j);
    const double tol = path_j == ghost_slab ? config.construction_tolerance
                                            : std::numeric_limits<double>::infinity();
    const auto rec = detail::reconstruct_path(patch.plane, config.radar_position, sol->true_pos,
                                              config.vehicle_roof_height, g, tol);
    if (!rec) return std::nullopt;

    TruePointCandidate cand;
    cand.position = sol->true_pos;
    cand.roof_index = roof_i;
    cand.path_index = path_j;
    cand.side = sol->side;
    cand.l1 = rec->l1;
    cand.l2 = rec->l2;
    cand.roof_point = rec->roof_point;
    cand.mirrored_ghost = rec->mirrored_ghost;
    cand.reflection_point = rec->reflection_point;
    cand.dist_g2t = sol->dist_g2t;
    return cand;
}

// ---------------------------------------------------------------------------
// Stage two: selection and fusion
// ---------------------------------------------------------------------------

// Least signal path loss first: argmax of 1/(L1*L2). Ties break toward the
// lowest roof index, then the lowest path index, for reproducibility.
inline std::size_t select_by_path_loss(std::span<const TruePointCandidate> candidates) {
    if (candidates.empty()) throw std::invalid_argument("select_by_path_loss: no candidates");
    std::size_t best = 0;
    for (std::size_t k = 1; k < candidates.size(); ++k) {
        const double key = PathLossModel::ranking_key(candidates[k].l1, candidates[k].l2);
        const double best_key = PathLossModel::ranking_key(candidates[best].l1, candidates[best].l2);
        if (key < best_key ||
            (key == best_key &&
             std::pair{candidates[k].roof_index, candidates[k].path_index} <
                 std::pair{candidates[best].roof_index, candidates[best].path_index}))
            best = k;
    }
    return best;
}

// Least spatial distance first, gated: only selects when the closest
// previous-frame vehicle is nearer than d_max.
inline std::optional<std::size_t> select_by_spatial_distance(
    std::span<const TruePointCandidate> candidates, std::span<const Vec2> previous_detections,
    double d_max) {
    std::optional<std::size_t> best;
    double best_dist = d_max;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        for (const Vec2& v : previous_detections) {
            const double d = distance(candidates[k].position, v);
            if (d < best_dist ||
                (best && d == best_dist &&
                 std::pair{candidates[k].roof_index, candidates[k].path_index} <
                     std::pair{candidates[*best].roof_index, candidates[*best].path_index})) {
                best_dist = d;
                best = k;
            }
        }
    }
    return best;
}

// Midpoint of the two selections (the least-squares merge); falls back to
// the signal pick when the distance criterion selected nothing.
inline Vec2 fuse_true_position(const Vec2& t_signal, const std::optional<Vec2>& t_dist) {
    if (!t_dist) return t_signal;
    return (t_signal + *t_dist) / 2.0;
}

// ---------------------------------------------------------------------------
// Frame-level correction
// ---------------------------------------------------------------------------

struct CandidateDumpRecord {
    int frame_index = 0;
    RadarPoint ghost;
    Provenance provenance;
    std::vector<TruePointCandidate> candidates;
    int signal_choice = -1;
    int dist_choice = -1;  // -1 = not selected
    std::optional<Vec2> final_position;
};

using CandidateDumpSink = std::function<void(const CandidateDumpRecord&)>;

// Candidate generator for the segmented model (the production path).
struct SegmentedCandidateGenerator {
    std::vector<TruePointCandidate> operator()(const SegmentedTunnelModel& model,
                                               const CorrectionConfig& config,
                                               const RadarPoint& ghost) const {
        std::vector<TruePointCandidate> out;
        for (const auto& seg : enumerate_reflection_segments(model, config, ghost)) {
            if (auto cand = generate_candidate(model, config, ghost, seg))
                out.push_back(*cand);
        }
        return out;
    }
};

enum class SelectionPolicy { kFused, kPathLossOnly, kSpatialDistanceOnly };

// Correct one frame: normal points pass through untouched, each ghost is
// replaced by its fused true position (Doppler carried over), ghosts with
// no valid candidate are dropped or kept flagged per config.
template <typename CandidateGenerator>
CorrectedFrame correct_frame(const SegmentedTunnelModel& model, const CorrectionConfig& config,
                             const SimFrame& frame, std::span<const Vec2> previous_detections,
                             const CandidateGenerator& generator,
                             SelectionPolicy policy = SelectionPolicy::kFused,
                             const CandidateDumpSink& dump = nullptr) {
    CorrectedFrame out;
    out.index = frame.index;
    out.timestamp = frame.timestamp;
    out.points.reserve(frame.points.size());

    for (const SimPoint& sp : frame.points) {
        CorrectedPoint cp;
        cp.raw = sp.point;
        cp.point = sp.point;
        cp.provenance = sp.provenance;

        bool is_ghost = false;
        try {
            is_ghost = model.classify(sp.point).label == PointLabel::kGhost;
        } catch (const OutOfExtentError&) {
            cp.status = CorrectionStatus::kUncorrectable;
            if (!config.drop_uncorrectable) out.points.push_back(cp);
            continue;
        }
        if (!is_ghost) {
            cp.status = CorrectionStatus::kNormal;
            out.points.push_back(cp);
            continue;
        }

        const std::vector<TruePointCandidate> candidates = generator(model, config, sp.point);
        CandidateDumpRecord record;
        record.frame_index = frame.index;
        record.ghost = sp.point;
        record.provenance = sp.provenance;
        record.candidates = candidates;

        if (candidates.empty()) {
            cp.status = CorrectionStatus::kUncorrectable;
            if (dump) dump(record);
            if (!config.drop_uncorrectable) out.points.push_back(cp);
            continue;
        }

        const std::size_t signal_idx = select_by_path_loss(candidates);
        const auto dist_idx =
            select_by_spatial_distance(candidates, previous_detections, config.association_gate);
        record.signal_choice = static_cast<int>(signal_idx);
        record.dist_choice = dist_idx ? static_cast<int>(*dist_idx) : -1;

        std::optional<Vec2> final;
        const TruePointCandidate* chosen = nullptr;
        switch (policy) {
            case SelectionPolicy::kFused: {
                std::optional<Vec2> t_dist;
                if (dist_idx) t_dist = candidates[*dist_idx].position;
                final = fuse_true_position(candidates[signal_idx].position, t_dist);
                chosen = &candidates[signal_idx];
                break;
            }
            case SelectionPolicy::kPathLossOnly:
                final = candidates[signal_idx].position;
                chosen = &candidates[signal_idx];
                break;
            case SelectionPolicy::kSpatialDistanceOnly:
                if (dist_idx) {
                    final = candidates[*dist_idx].position;
                    chosen = &candidates[*dist_idx];
                }
                break;
        }
        record.final_position = final;
        if (dump) dump(record);

        if (!final) {
            cp.status = CorrectionStatus::kUncorrectable;
            if (!config.drop_uncorrectable) out.points.push_back(cp);
            continue;
        }
        cp.status = CorrectionStatus::kCorrected;
        cp.point.x = final->x;
        cp.point.y = final->y;
        cp.roof_segment = chosen->roof_index;
        cp.path_segment = chosen->path_index;
        out.points.push_back(cp);
    }
    return out;
}

}  // namespace tunradar
