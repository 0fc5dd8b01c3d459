// Reference correction against the exact (non-segmented) tunnel path: the
// reflection point's foot on the curved centerline is found with Newton's
// method and the local tangent line replaces the path-segment chord in the
// unfolding construction. Slower than the segmented path by design; it
// exists as the accuracy/speed baseline.
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tunradar/ghost_correction.hpp"
#include "tunradar/tunnel_model.hpp"

namespace tunradar {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CurvedReflectionProblem {
    Vec2 radar;              // top view
    Vec2 ghost;              // top view
    const CenterlineSpec* centerline = nullptr;
    double lateral_offset = 0.0;  // signed distance d from the reflection point
                                  // to the centerline (sign = road side)
    double b1 = 0.0;              // radar->ghost line: lateral = b1*longitudinal + b0
    double b0 = 0.0;
    bool vertical_line = false;   // radar and ghost share the longitudinal station

    static CurvedReflectionProblem make(const Vec2& radar, const Vec2& ghost,
                                        const CenterlineSpec& centerline, double d_signed) {
        CurvedReflectionProblem p;
        p.radar = radar;
        p.ghost = ghost;
        p.centerline = &centerline;
        p.lateral_offset = d_signed;
        const double dy = ghost.y - radar.y;
        if (std::abs(dy) < 1e-12) {
            p.vertical_line = true;
        } else {
            p.b1 = (ghost.x - radar.x) / dy;
            p.b0 = (radar.x * ghost.y - ghost.x * radar.y) / dy;
        }
        return p;
    }
};

struct CurvedTangent {
    double m_s = 0.0;   // tangent slope at the foot point
    double b_s = 0.0;   // tangent intercept
    Vec2 foot;          // S on the centerline
    Vec2 reflection;    // R in top view, on the radar->ghost line
    int iterations = 0;
    double residual = 0.0;
    bool used_bisection = false;

    PathFrame frame() const { return {m_s, b_s}; }
};

namespace detail {

// Residual of the foot-point equation in meters: the gap between the
// centerline and the radar->ghost line at u, compared against the lateral
// offset mapped through the local tangent direction.
inline double curved_residual(const CurvedReflectionProblem& p, double u) {
    const Polynomial& poly = p.centerline->poly;
    const double q = poly.derivative(u);
    const double root = std::sqrt(q * q + 1.0);
    if (p.vertical_line) return u - p.lateral_offset * q / root - p.ghost.y;
    return (poly(u) - p.b1 * u - p.b0) / (p.b1 * q + 1.0) + p.lateral_offset / root;
}

// Product form of the same equation (no 1/(b1*q+1) pole) and its analytic
// derivative; this is what Newton iterates on.
inline double curved_equation(const CurvedReflectionProblem& p, double u) {
    const Polynomial& poly = p.centerline->poly;
    const double q = poly.derivative(u);
    const double root = std::sqrt(q * q + 1.0);
    if (p.vertical_line) return u - p.lateral_offset * q / root - p.ghost.y;
    return poly(u) - p.b1 * u - p.b0 + p.lateral_offset * (p.b1 * q + 1.0) / root;
}

inline double curved_equation_derivative(const CurvedReflectionProblem& p, double u) {
    const Polynomial& poly = p.centerline->poly;
    const double q = poly.derivative(u);
    const double qp = poly.second_derivative(u);
    const double r2 = q * q + 1.0;
    if (p.vertical_line) return 1.0 - p.lateral_offset * qp / (r2 * std::sqrt(r2));
    return q - p.b1 + p.lateral_offset * qp * (p.b1 - q) / (r2 * std::sqrt(r2));
}

}  // namespace detail

// Newton iteration from the ghost's longitudinal coordinate; falls back to
// bracketed bisection over the given extent when Newton wanders. Converged
// solutions satisfy the collinearity / perpendicularity / distance
// conditions to the reported residual.
inline CurvedTangent solve_curved_tangent(const CurvedReflectionProblem& problem,
                                          std::pair<double, double> extent,
                                          double tolerance = 1e-9, int max_iterations = 50) {
    const Polynomial& poly = problem.centerline->poly;
    double u = problem.ghost.y;
    CurvedTangent out;

    bool converged = false;
    for (int it = 0; it < max_iterations; ++it) {
        const double res = detail::curved_residual(problem, u);
        out.iterations = it;
        if (std::abs(res) < tolerance) {
            converged = true;
            break;
        }
        const double g = detail::curved_equation(problem, u);
        const double gp = detail::curved_equation_derivative(problem, u);
        if (gp == 0.0 || !std::isfinite(gp)) break;
        double step = g / gp;
        if (!std::isfinite(step)) break;
        if (std::abs(step) > 400.0) step = step > 0 ? 400.0 : -400.0;
        u -= step;
        if (u < extent.first - 100.0 || u > extent.second + 100.0) break;
    }

    if (!converged) {
        // scan for a sign change of the product-form equation, then bisect
        const int kScan = 256;
        const double lo = extent.first - 10.0, hi = extent.second + 10.0;
        double prev_u = lo, prev_g = detail::curved_equation(problem, lo);
        bool bracketed = false;
        for (int k = 1; k <= kScan; ++k) {
            const double uk = lo + (hi - lo) * k / kScan;
            const double gk = detail::curved_equation(problem, uk);
            if (prev_g == 0.0 || (prev_g < 0.0) != (gk < 0.0)) {
                double a = prev_u, b = uk;
                double ga = prev_g;
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (a + b);
                    const double gm = detail::curved_equation(problem, mid);
                    if (gm == 0.0 || (ga < 0.0) == (gm < 0.0)) {
                        a = mid;
                        ga = gm;
                    } else {
                        b = mid;
                    }
                    if (b - a < 1e-13 * std::max(1.0, std::abs(a))) break;
                }
                u = 0.5 * (a + b);
                bracketed = true;
                break;
            }
            prev_u = uk;
            prev_g = gk;
        }
        if (!bracketed || std::abs(detail::curved_residual(problem, u)) > tolerance)
            throw SolverError("solve_curved_tangent: no convergence for ghost at y=" +
                              std::to_string(problem.ghost.y));
        out.used_bisection = true;
    }

    out.m_s = poly.derivative(u);
    out.b_s = poly(u) - out.m_s * u;
    out.foot = {poly(u), u};
    out.residual = std::abs(detail::curved_residual(problem, u));
    if (problem.vertical_line) {
        const double root = std::sqrt(out.m_s * out.m_s + 1.0);
        out.reflection = out.foot + problem.lateral_offset * Vec2{1.0 / root, -out.m_s / root};
    } else {
        // collinearity is exact by construction: R sits on the radar->ghost line
        const double ur = (u + out.m_s * poly(u) - out.m_s * problem.b0) / (problem.b1 * out.m_s + 1.0);
        out.reflection = {problem.b1 * ur + problem.b0, ur};
    }
    return out;
}

// Nearest-point parameter on the centerline (top view).
inline double nearest_point_on_centerline(const CenterlineSpec& centerline, const Vec2& p,
                                          std::pair<double, double> extent) {
    const Polynomial& poly = centerline.poly;
    const auto g = [&](double u) {
        return (poly(u) - p.x) * poly.derivative(u) + (u - p.y);
    };
    double u = p.y;
    for (int it = 0; it < 30; ++it) {
        const double gu = g(u);
        if (std::abs(gu) < 1e-12) return u;
        const double q = poly.derivative(u);
        const double gp = q * q + (poly(u) - p.x) * poly.second_derivative(u) + 1.0;
        if (gp == 0.0 || !std::isfinite(gp)) break;
        const double step = gu / gp;
        u -= step;
        if (std::abs(step) < 1e-12) return u;
    }
    // coarse scan fallback
    double best_u = p.y, best_d = distance(centerline.point_at(best_u), p);
    for (int k = 0; k <= 400; ++k) {
        const double uk =
            extent.first - 20.0 + (extent.second - extent.first + 40.0) * k / 400.0;
        const double d = distance(centerline.point_at(uk), p);
        if (d < best_d) {
            best_d = d;
            best_u = uk;
        }
    }
    return best_u;
}

// Signed lateral offset of a top-view point from the curved centerline.
inline double signed_offset_from_curve(const CenterlineSpec& centerline, const Vec2& p,
                                       std::pair<double, double> extent) {
    const double u = nearest_point_on_centerline(centerline, p, extent);
    const PathFrame tangent{centerline.slope_at(u), centerline.lateral_at(u) -
                                                        centerline.slope_at(u) * u};
    return frame_offset(tangent, p);
}

// Candidate generator backed by the curved-surface solver. Produces one
// candidate per roof segment: a first pass with the tangent at the ghost's
// foot estimates the reflection point, whose offset feeds the foot-point
// solve; the solved tangent frame then replaces the path-segment line in
// the unfolding construction.
struct CurvedCandidateGenerator {
    mutable std::vector<double>* residual_log = nullptr;  // optional diagnostics

    std::vector<TruePointCandidate> operator()(const SegmentedTunnelModel& model,
                                               const CorrectionConfig& config,
                                               const RadarPoint& ghost) const {
        const CenterlineSpec& centerline = model.centerline();
        const auto extent = model.extent();
        const Vec2 g{ghost.x, ghost.y};
        const Vec2 radar2 = config.radar_position.top_view();
        const CrossSectionSpec& cs = model.cross_section();

        // tangent at the ghost's own station for the first pass
        const double u0 = nearest_point_on_centerline(centerline, g, extent);
        const PathFrame ghost_frame{centerline.slope_at(u0),
                                    centerline.lateral_at(u0) - centerline.slope_at(u0) * u0};

        std::vector<TruePointCandidate> out;
        for (const RoofSegment& rs : model.roof_segments()) {
            const int side = frame_offset(ghost_frame, g) >= 0.0 ? +1 : -1;

            // seed the foot-point solve at the sector's mid-band offset; the
            // fixed-point sweeps below pull it to the self-consistent value
            double d_signed = side * 0.5 * (rs.chord_lo.x + rs.chord_hi.x);

            // Fixed point: the solved foot must be consistent with the
            // reflection point its own construction produces. Damped sweeps;
            // millimeter agreement is ample (the tangent slope changes by
            // curvature * delta).
            CurvedTangent tangent;
            std::optional<detail::TriangleSolution> sol;
            std::optional<detail::Reconstruction> rec;
            bool converged = false;
            for (int sweep = 0; sweep < 8; ++sweep) {
                try {
                    tangent = solve_curved_tangent(
                        CurvedReflectionProblem::make(radar2, g, centerline, d_signed), extent);
                } catch (const SolverError&) {
                    break;
                }
                const PathFrame frame = tangent.frame();
                sol = detail::unfold_across_chord(cs, rs.index, rs.sector_angle, frame, g,
                                                  config.vehicle_roof_height, config.sin_beta_guard,
                                                  config.cos_two_beta_guard);
                if (!sol) break;
                const Plane3 plane =
                    chord_plane_in_frame(rs, frame, sol->side, tangent.foot.y, cs.h_center);
                rec = detail::reconstruct_path(plane, config.radar_position, sol->true_pos,
                                               config.vehicle_roof_height, g,
                                               config.construction_tolerance);
                if (!rec) break;
                const double d_next = signed_offset_from_curve(
                    centerline, rec->reflection_point.top_view(), extent);
                const bool settled = std::abs(d_next - d_signed) < 1e-3;
                d_signed = d_next;
                if (settled) {
                    converged = true;
                    break;
                }
            }
            if (!converged || !sol || !rec) continue;
            if (residual_log) residual_log->push_back(tangent.residual);

            // hypothesis gate, the curved analog of the patch quad test: the
            // reflection point's top-view offset must fall inside this
            // sector's lateral band
            const double w_lo = std::min(rs.chord_lo.x, rs.chord_hi.x) - config.patch_margin;
            const double w_hi = std::max(rs.chord_lo.x, rs.chord_hi.x) + config.patch_margin;
            const double w_r = side * d_signed;
            if (w_r < w_lo || w_r > w_hi) continue;

            // admissibility against the exact curve (the tangent line drifts
            // from the centerline away from the foot point)
            const double lane_offset = signed_offset_from_curve(centerline, sol->true_pos, extent);
            const auto& lanes = model.lane_boundaries();
            if (lane_offset < lanes.left - 1e-9 || lane_offset > lanes.right + 1e-9) continue;

            TruePointCandidate cand;
            cand.position = sol->true_pos;
            cand.roof_index = rs.index;
            cand.side = sol->side;
            try {
                cand.path_index = model.path_segment_index_at(rec->reflection_point.y);
            } catch (const OutOfExtentError&) {
                cand.path_index = 0;
            }
            cand.l1 = rec->l1;
            cand.l2 = rec->l2;
            cand.roof_point = rec->roof_point;
            cand.mirrored_ghost = rec->mirrored_ghost;
            cand.reflection_point = rec->reflection_point;
            cand.dist_g2t = sol->dist_g2t;
            out.push_back(cand);
        }
        return out;
    }
};

}  // namespace tunradar
