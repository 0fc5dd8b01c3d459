// Segmented tunnel geometry: circular-segment cross-section chopped into N
// roof chords, curved path chopped into M straight segments, plus the error
// budget that ties segmentation fineness to the radar's range resolution.
//
// Axis convention used throughout the library: y is the longitudinal
// coordinate (distance along the radar boresight, increasing into the
// tunnel), x is the lateral offset across the road, z is height. The
// centerline is a polynomial x = f(y). "right" means positive lateral
// offset when looking downrange.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tunradar/geometry.hpp"
#include "tunradar/types.hpp"

namespace tunradar {

inline constexpr double kPi = 3.14159265358979323846;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OutOfExtentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Cross-section
// ---------------------------------------------------------------------------

// Circular-segment profile: arc of radius r_tunnel whose center sits
// h_center above the road surface.
struct CrossSectionSpec {
    double r_tunnel = 5.5;
    double h_center = 1.6;
    double w_road = 4.0;

    void validate() const {
        if (!(r_tunnel > 0.0)) throw ConfigError("cross-section: r_tunnel must be > 0");
        if (!(h_center >= 0.0 && h_center < r_tunnel))
            throw GeometryError("cross-section: requires 0 <= h_center < r_tunnel");
        if (!(w_road > 0.0 && w_road < 2.0 * r_tunnel))
            throw ConfigError("cross-section: requires 0 < w_road < 2*r_tunnel");
    }

    // Central angle subtended by the roof arc (the part above the road).
    double roof_arc_angle() const { return 2.0 * kPi - 2.0 * std::acos(h_center / r_tunnel); }

    // Lateral offset where the arc meets the road surface.
    double ground_half_width() const {
        return std::sqrt(r_tunnel * r_tunnel - h_center * h_center);
    }
};

// ---------------------------------------------------------------------------
// Centerline
// ---------------------------------------------------------------------------

struct CenterlineSpec {
    Polynomial poly;                                   // lateral = poly(longitudinal)
    double fit_residual_rms = 0.0;
    std::optional<std::pair<double, double>> fitted_range;  // y-range of calibration data

    double lateral_at(double y) const { return poly(y); }
    double slope_at(double y) const { return poly.derivative(y); }
    Vec2 point_at(double y) const { return {poly(y), y}; }
    // Angle of the tangent relative to the boresight axis.
    double tangent_angle_at(double y) const { return std::atan(poly.derivative(y)); }
};

// Least-squares polynomial through calibration samples (x = lateral,
// y = longitudinal). Columns are scaled before the QR solve so that
// far-range monomials do not wreck the conditioning.
inline CenterlineSpec fit_centerline(std::span<const Vec2> samples, int degree) {
    if (degree < 1) throw ConfigError("fit_centerline: degree must be >= 1");
    const int n = static_cast<int>(samples.size());
    const int cols = degree + 1;
    if (n < cols)
        throw ConfigError("fit_centerline: underdetermined system (" + std::to_string(n) +
                          " samples for degree " + std::to_string(degree) + ")");
    for (const auto& s : samples) {
        if (!std::isfinite(s.x) || !std::isfinite(s.y))
            throw ConfigError("fit_centerline: non-finite sample");
    }
    std::vector<double> ys(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) ys[i] = samples[i].y;
    std::sort(ys.begin(), ys.end());
    for (size_t i = 1; i < ys.size(); ++i) {
        if (std::abs(ys[i] - ys[i - 1]) < 1e-9)
            throw ConfigError("fit_centerline: longitudinal coordinates must be distinct");
    }

    Eigen::MatrixXd a(n, cols);
    Eigen::VectorXd rhs(n);
    for (int r = 0; r < n; ++r) {
        double p = 1.0;
        for (int c = 0; c < cols; ++c) {
            a(r, c) = p;
            p *= samples[static_cast<size_t>(r)].y;
        }
        rhs(r) = samples[static_cast<size_t>(r)].x;
    }
    Eigen::VectorXd scale(cols);
    for (int c = 0; c < cols; ++c) {
        const double s = a.col(c).cwiseAbs().maxCoeff();
        scale(c) = s > 0.0 ? s : 1.0;
        a.col(c) /= scale(c);
    }
    Eigen::VectorXd sol = a.colPivHouseholderQr().solve(rhs);
    const double rss = (a * sol - rhs).squaredNorm();

    std::vector<double> coeffs(static_cast<size_t>(cols));
    for (int c = 0; c < cols; ++c) coeffs[static_cast<size_t>(c)] = sol(c) / scale(c);

    CenterlineSpec spec;
    spec.poly = Polynomial(std::move(coeffs));
    spec.fit_residual_rms = std::sqrt(rss / n);
    spec.fitted_range = {ys.front(), ys.back()};
    return spec;
}

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

// One straight-chord approximation of a roof arc sector, in the
// cross-section frame (w = lateral offset toward the reflection side,
// z = height above the road). chord_lo is the endpoint nearer the wall
// foot, chord_hi the endpoint further along the arc.
struct RoofSegment {
    int index = 0;  // 1-based, counted from the correction-side wall upward
    Vec2 chord_lo;  // (w, z)
    Vec2 chord_hi;  // (w, z)
    Vec2 plane_point;   // chord midpoint
    Vec2 plane_normal;  // unit, pointing into the tunnel
    double sector_angle = 0.0;
};

inline std::vector<RoofSegment> segment_cross_section(const CrossSectionSpec& cs, int n_sectors) {
    cs.validate();
    if (n_sectors < 1) throw ConfigError("segment_cross_section: N must be >= 1");

    const double psi0 = std::acos(cs.h_center / cs.r_tunnel);
    const double theta = cs.roof_arc_angle() / n_sectors;
    const Vec2 center{0.0, cs.h_center};

    const auto arc_point = [&](double psi) -> Vec2 {
        return {cs.r_tunnel * std::sin(psi), cs.h_center - cs.r_tunnel * std::cos(psi)};
    };

    std::vector<RoofSegment> out;
    out.reserve(static_cast<size_t>(n_sectors));
    for (int i = 1; i <= n_sectors; ++i) {
        RoofSegment seg;
        seg.index = i;
        seg.sector_angle = theta;
        seg.chord_lo = arc_point(psi0 + (i - 1) * theta);
        seg.chord_hi = arc_point(psi0 + i * theta);
        seg.plane_point = (seg.chord_lo + seg.chord_hi) / 2.0;
        // The perpendicular bisector of a chord passes through the center,
        // so center - midpoint is the exact inward normal direction.
        seg.plane_normal = normalized(center - seg.plane_point);
        out.push_back(seg);
    }
    return out;
}

// Local straight-centerline frame: lateral = m * longitudinal + b. Path
// segments provide one per slab; the curved reference model substitutes the
// tangent line at the reflection point's foot.
struct PathFrame {
    double m = 0.0;
    double b = 0.0;
};

// Signed perpendicular offset from the frame's line (positive = right of
// the centerline looking downrange).
inline double frame_offset(const PathFrame& f, const Vec2& p) {
    return (p.x - f.m * p.y - f.b) / std::sqrt(f.m * f.m + 1.0);
}

// Embed a cross-section point (w = offset toward `side`, z = height) at
// longitudinal station y of the frame.
inline Vec3 embed_in_frame(const PathFrame& f, double w, double z, int side, double y) {
    const double s = std::sqrt(f.m * f.m + 1.0);
    return {f.m * y + f.b + side * w / s, y - side * w * f.m / s, z};
}

// One straight stretch of the tunnel path in top view. The local
// centerline is the chord between the dividing points: x = m*y + b.
struct PathSegment {
    int index = 0;  // 1-based
    Vec2 p_start;   // (x, y)
    Vec2 p_end;
    double m = 0.0;
    double b = 0.0;
    double length = 0.0;
    double y_start = 0.0;
    double y_end = 0.0;
};

struct PathSegmentation {
    std::vector<PathSegment> segments;
    bool extent_warning = false;  // extent reached beyond the fitted calibration range
};

// Iterative dividing-point construction: walk the centerline from the
// longitudinal origin and cut whenever the tangent has turned by the
// threshold angle or the chord has reached the length cap.
inline PathSegmentation segment_tunnel_path(const CenterlineSpec& centerline, double tangent_threshold,
                                            double max_segment_length,
                                            std::pair<double, double> extent) {
    if (!(tangent_threshold > 0.0)) throw ConfigError("segment_tunnel_path: threshold must be > 0");
    if (!(max_segment_length > 0.0)) throw ConfigError("segment_tunnel_path: L_max must be > 0");
    if (!(extent.second > extent.first) || extent.first < 0.0)
        throw ConfigError("segment_tunnel_path: extent must be a nonempty range with y >= 0");

    const double y_max = extent.second;
    PathSegmentation result;
    if (centerline.fitted_range &&
        (extent.first < centerline.fitted_range->first - 1e-9 ||
         y_max > centerline.fitted_range->second + 1e-9)) {
        result.extent_warning = true;
    }

    const auto chord_len = [&](double y0, double y1) {
        return distance(centerline.point_at(y0), centerline.point_at(y1));
    };
    const auto violates = [&](double y0, double ang0, double y1) {
        return std::abs(centerline.tangent_angle_at(y1) - ang0) > tangent_threshold ||
               chord_len(y0, y1) > max_segment_length;
    };

    double y_prev = 0.0;  // first dividing point sits at the longitudinal origin
    int index = 1;
    constexpr double step = 0.25;
    while (y_prev < y_max - 1e-9) {
        const double ang0 = centerline.tangent_angle_at(y_prev);
        double y_ok = y_prev;
        double y_bad = -1.0;
        for (double y = y_prev + step; y < y_max + step; y += step) {
            const double yc = std::min(y, y_max);
            if (violates(y_prev, ang0, yc)) {
                y_bad = yc;
                break;
            }
            y_ok = yc;
            if (yc >= y_max) break;
        }
        double y_next;
        if (y_bad < 0.0) {
            y_next = y_max;
        } else {
            // first constraint crossing between y_ok and y_bad
            double lo = y_ok, hi = y_bad;
            for (int it = 0; it < 60 && hi - lo > 1e-9; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (violates(y_prev, ang0, mid)) hi = mid;
                else lo = mid;
            }
            y_next = lo;
        }
        if (y_next - y_prev < 1e-6)
            throw GeometryError("segment_tunnel_path: no progress; tangent threshold too tight "
                                "for this centerline");

        PathSegment seg;
        seg.index = index++;
        seg.p_start = centerline.point_at(y_prev);
        seg.p_end = centerline.point_at(y_next);
        seg.y_start = y_prev;
        seg.y_end = y_next;
        seg.m = (seg.p_end.x - seg.p_start.x) / (seg.p_end.y - seg.p_start.y);
        seg.b = seg.p_start.x - seg.m * seg.p_start.y;
        seg.length = distance(seg.p_start, seg.p_end);
        result.segments.push_back(seg);
        y_prev = y_next;

        if (index > 100000)
            throw GeometryError("segment_tunnel_path: segment count exploded");
    }
    if (result.segments.empty()) throw GeometryError("segment_tunnel_path: empty extent");
    return result;
}

struct SegmentationParams {
    int sector_count = 12;
    double sector_angle = 0.0;       // radians; largest permissible value
    double tangent_threshold = 0.0;  // radians
    double max_segment_length = 100.0;

    void validate() const {
        if (sector_count < 1) throw ConfigError("segmentation params: N must be >= 1");
        if (!(sector_angle > 0.0) || !(tangent_threshold > 0.0))
            throw ConfigError("segmentation params: angles must be > 0");
        if (!(max_segment_length > 0.0)) throw ConfigError("segmentation params: L_max must be > 0");
    }
};

struct ErrorBudget {
    double cross_section_bound = 0.0;  // E_c
    double path_bound = 0.0;           // E_p
    double total() const { return cross_section_bound + path_bound; }
};

// Closed-form worst-case localization error of the segmented model:
//   E_c = 2 R (sin(theta/2) + sin^2(theta/2)),  E_p = L_max tan(dphi).
inline ErrorBudget segmentation_error_bounds(const CrossSectionSpec& cs,
                                             const SegmentationParams& params) {
    params.validate();
    const double s = std::sin(params.sector_angle / 2.0);
    return {2.0 * cs.r_tunnel * (s + s * s),
            params.max_segment_length * std::tan(params.tangent_threshold)};
}

// Largest segmentation angles whose error bounds stay within the radar's
// range resolution. The cross-section bound is monotone in theta but not
// invertible in closed form, hence the bisection; the path bound inverts
// analytically.
inline SegmentationParams optimize_segmentation_params(const CrossSectionSpec& cs,
                                                       double resolution_limit, double max_segment_length,
                                                       int sector_count_cap = 4096) {
    cs.validate();
    if (!(resolution_limit > 0.0))
        throw ConfigError("optimize_segmentation_params: resolution limit must be > 0");
    if (!(max_segment_length > 0.0))
        throw ConfigError("optimize_segmentation_params: L_max must be > 0");

    const auto e_c = [&](double theta) {
        const double s = std::sin(theta / 2.0);
        return 2.0 * cs.r_tunnel * (s + s * s);
    };

    const double arc = cs.roof_arc_angle();
    double theta_max;
    if (e_c(arc) <= resolution_limit) {
        theta_max = arc;
    } else {
        double lo = 0.0, hi = arc;
        while (hi - lo > 1e-9) {
            const double mid = 0.5 * (lo + hi);
            if (e_c(mid) <= resolution_limit) lo = mid;
            else hi = mid;
        }
        theta_max = lo;
    }

    SegmentationParams params;
    params.sector_angle = theta_max;
    params.tangent_threshold = std::atan(resolution_limit / max_segment_length);
    params.max_segment_length = max_segment_length;
    const int n = static_cast<int>(std::ceil(arc / theta_max - 1e-12));
    if (n > sector_count_cap)
        throw ConfigError("optimize_segmentation_params: required sector count " +
                          std::to_string(n) + " exceeds cap " + std::to_string(sector_count_cap));
    params.sector_count = std::max(1, n);
    return params;
}

// ---------------------------------------------------------------------------
// Assembled model
// ---------------------------------------------------------------------------

// Lateral lane edges as signed offsets from the centerline.
struct LaneBoundaries {
    double left = -2.0;
    double right = 2.0;
};

enum class PointLabel { kNormal, kGhost };
enum class LaneSide { kOnLane, kLeft, kRight };

struct PointClassification {
    PointLabel label = PointLabel::kNormal;
    LaneSide side = LaneSide::kOnLane;
    int path_segment = 0;        // 1-based
    double dist_center = 0.0;    // unsigned distance to the local segment line
    double signed_offset = 0.0;  // negative = left, positive = right
};

// A roof chord of one path segment, extruded along that segment and
// mirrored to the requested side: the planar stand-in for a piece of
// tunnel surface.
struct WallPatch {
    int side = +1;       // +1 right wall layout, -1 left
    int roof_index = 0;  // 1-based
    int path_index = 0;  // 1-based
    Plane3 plane;        // global frame, unit normal pointing into the tunnel
    std::array<Vec2, 4> quad;  // top-view footprint (parallelogram)
};

// Plane carrying roof chord `rs` extruded along an arbitrary frame,
// mirrored to `side`; the normal points into the tunnel.
inline Plane3 chord_plane_in_frame(const RoofSegment& rs, const PathFrame& f, int side,
                                   double y_anchor, double h_center) {
    const Vec3 lo = embed_in_frame(f, rs.chord_lo.x, rs.chord_lo.y, side, y_anchor);
    const Vec3 hi = embed_in_frame(f, rs.chord_hi.x, rs.chord_hi.y, side, y_anchor);
    const double s = std::sqrt(f.m * f.m + 1.0);
    const Vec3 along{f.m / s, 1.0 / s, 0.0};
    Vec3 n = normalized(cross(along, hi - lo));
    const Vec3 axis{f.m * y_anchor + f.b, y_anchor, h_center};
    if (dot(axis - lo, n) < 0.0) n = -1.0 * n;
    return Plane3{0.5 * (lo + hi), n};
}

// Is a point (assumed on the chord's plane) within the chord extent, up to
// `margin` meters? Frame-based twin of SegmentedTunnelModel::patch_contains
// without the longitudinal slab test.
inline bool chord_contains_in_frame(const RoofSegment& rs, const PathFrame& f, int side,
                                    const Vec3& p, double margin) {
    const double w = side * frame_offset(f, {p.x, p.y});
    const Vec2 cw{w, p.z};
    const Vec2 chord = rs.chord_hi - rs.chord_lo;
    const double len2 = dot(chord, chord);
    const double t = dot(cw - rs.chord_lo, chord) / len2;
    const double t_margin = margin / std::sqrt(len2);
    return t >= -t_margin && t <= 1.0 + t_margin;
}

class SegmentedTunnelModel {
public:
    static SegmentedTunnelModel build(const CrossSectionSpec& cs, const CenterlineSpec& centerline,
                                      const SegmentationParams& params,
                                      std::pair<double, double> extent,
                                      std::optional<LaneBoundaries> lanes = std::nullopt) {
        cs.validate();
        params.validate();
        SegmentedTunnelModel m;
        m.cross_section_ = cs;
        m.centerline_ = centerline;
        m.params_ = params;
        m.extent_ = extent;
        m.roof_segments_ = segment_cross_section(cs, params.sector_count);
        auto path = segment_tunnel_path(centerline, params.tangent_threshold,
                                        params.max_segment_length, extent);
        m.path_segments_ = std::move(path.segments);
        m.extent_warning_ = path.extent_warning;
        m.lanes_ = lanes.value_or(LaneBoundaries{-cs.w_road / 2.0, cs.w_road / 2.0});
        return m;
    }

    // Convenience: derive the segmentation from the radar resolution limit.
    static SegmentedTunnelModel build_optimized(const CrossSectionSpec& cs,
                                                const CenterlineSpec& centerline,
                                                double resolution_limit, double max_segment_length,
                                                std::pair<double, double> extent,
                                                std::optional<LaneBoundaries> lanes = std::nullopt) {
        return build(cs, centerline,
                     optimize_segmentation_params(cs, resolution_limit, max_segment_length), extent,
                     lanes);
    }

    const CrossSectionSpec& cross_section() const { return cross_section_; }
    const CenterlineSpec& centerline() const { return centerline_; }
    const SegmentationParams& params() const { return params_; }
    const std::vector<RoofSegment>& roof_segments() const { return roof_segments_; }
    const std::vector<PathSegment>& path_segments() const { return path_segments_; }
    const LaneBoundaries& lane_boundaries() const { return lanes_; }
    std::pair<double, double> extent() const { return extent_; }
    bool extent_warning() const { return extent_warning_; }
    ErrorBudget error_budget() const { return segmentation_error_bounds(cross_section_, params_); }

    // 1-based index of the path segment whose longitudinal slab contains y.
    int path_segment_index_at(double y) const {
        if (y < path_segments_.front().y_start - 1e-9 || y > path_segments_.back().y_end + 1e-9)
            throw OutOfExtentError("point at y=" + std::to_string(y) +
                                   " is outside the modeled extent");
        int lo = 0, hi = static_cast<int>(path_segments_.size()) - 1;
        while (lo < hi) {
            const int mid = (lo + hi) / 2;
            if (y <= path_segments_[static_cast<size_t>(mid)].y_end) hi = mid;
            else lo = mid + 1;
        }
        return path_segments_[static_cast<size_t>(lo)].index;
    }

    const PathSegment& path_segment(int index_1based) const {
        return path_segments_.at(static_cast<size_t>(index_1based - 1));
    }
    const RoofSegment& roof_segment(int index_1based) const {
        return roof_segments_.at(static_cast<size_t>(index_1based - 1));
    }

    PathFrame frame_of(int path_index) const {
        const PathSegment& seg = path_segment(path_index);
        return {seg.m, seg.b};
    }

    // Signed perpendicular offset of a top-view point from segment j's line
    // (positive = right of the centerline looking downrange).
    double signed_offset(const Vec2& p, int path_index) const {
        return frame_offset(frame_of(path_index), p);
    }

    PointClassification classify(const RadarPoint& p) const {
        PointClassification c;
        c.path_segment = path_segment_index_at(p.y);
        c.signed_offset = signed_offset({p.x, p.y}, c.path_segment);
        c.dist_center = std::abs(c.signed_offset);
        const bool inside = c.signed_offset >= lanes_.left && c.signed_offset <= lanes_.right;
        if (inside) {
            c.label = PointLabel::kNormal;
            c.side = LaneSide::kOnLane;
        } else {
            c.label = PointLabel::kGhost;
            c.side = c.signed_offset < 0.0 ? LaneSide::kLeft : LaneSide::kRight;
        }
        return c;
    }

    // Embed a cross-section point (w, z) of path segment j, mirrored to
    // `side`, at longitudinal station y.
    Vec3 embed(double w, double z, int side, int path_index, double y) const {
        return embed_in_frame(frame_of(path_index), w, z, side, y);
    }

    // Top-view footprint of a patch, optionally widened by `inflate` meters
    // in both the lateral and longitudinal directions.
    std::array<Vec2, 4> patch_quad(int side, int roof_index, int path_index,
                                   double inflate = 0.0) const {
        const RoofSegment& rs = roof_segment(roof_index);
        const PathSegment& ps = path_segment(path_index);
        const double w_lo = std::min(rs.chord_lo.x, rs.chord_hi.x) - inflate;
        const double w_hi = std::max(rs.chord_lo.x, rs.chord_hi.x) + inflate;
        const double y_lo = ps.y_start - inflate;
        const double y_hi = ps.y_end + inflate;
        const auto corner = [&](double w, double y) {
            const Vec3 p = embed(w, 0.0, side, path_index, y);
            return Vec2{p.x, p.y};
        };
        return {corner(w_lo, y_lo), corner(w_hi, y_lo), corner(w_hi, y_hi), corner(w_lo, y_hi)};
    }

    WallPatch patch(int side, int roof_index, int path_index) const {
        const PathSegment& ps = path_segment(path_index);
        WallPatch patch;
        patch.side = side;
        patch.roof_index = roof_index;
        patch.path_index = path_index;
        patch.plane = chord_plane_in_frame(roof_segment(roof_index), frame_of(path_index), side,
                                           0.5 * (ps.y_start + ps.y_end), cross_section_.h_center);
        patch.quad = patch_quad(side, roof_index, path_index);
        return patch;
    }

    // Is a 3D point (assumed on the patch plane) within the chord extent and
    // the longitudinal slab of the patch, up to `margin` meters?
    bool patch_contains(const WallPatch& patch, const Vec3& p, double margin) const {
        const PathSegment& ps = path_segment(patch.path_index);
        if (p.y < ps.y_start - margin || p.y > ps.y_end + margin) return false;
        return chord_contains_in_frame(roof_segment(patch.roof_index), frame_of(patch.path_index),
                                       patch.side, p, margin);
    }

private:
    CrossSectionSpec cross_section_;
    CenterlineSpec centerline_;
    SegmentationParams params_;
    std::vector<RoofSegment> roof_segments_;
    std::vector<PathSegment> path_segments_;
    LaneBoundaries lanes_;
    std::pair<double, double> extent_{0.0, 350.0};
    bool extent_warning_ = false;
};

}  // namespace tunradar
