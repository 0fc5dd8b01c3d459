// Forward simulator: scripted vehicles drive through the modeled tunnel and
// the radar sees direct returns plus specular one-bounce ghosts off the
// wall/roof plane segments, with occlusion, Doppler, seeded noise and
// per-facet dropout. Every emitted point carries its provenance, which makes
// the simulator the verification oracle for the correction pipeline.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tunradar/geometry.hpp"
#include "tunradar/random.hpp"
#include "tunradar/tunnel_model.hpp"
#include "tunradar/types.hpp"

namespace tunradar {

struct RadarNoise {
    double sigma_range = 0.3;        // meters, on the measured range
    double sigma_azimuth_deg = 0.2;  // degrees, on the measured azimuth
    double dropout = 0.2;            // per-facet, per-path miss probability
};

enum class ProjectionMode { kOrthographic, kSlantRange };

struct RadarConfig {
    Vec3 position{0.0, 0.0, 5.1};
    double range_min = 50.0;   // blind zone ends here
    double range_max = 350.0;
    double range_resolution = 2.0;  // drives the segmentation error budget
    double frame_rate = 10.0;
    RadarNoise noise;
    ProjectionMode projection = ProjectionMode::kOrthographic;
    int facets = 3;  // scattering facets per vehicle (1..3: center/front/rear)
    bool emit_direct = true;
    bool emit_ghosts = true;

    void validate() const {
        if (!(range_min >= 0.0 && range_max > range_min))
            throw ConfigError("radar: range gate must be ordered and positive");
        if (!(frame_rate > 0.0)) throw ConfigError("radar: frame rate must be > 0");
        if (facets < 1 || facets > 3) throw ConfigError("radar: facets must be 1..3");
        if (noise.dropout < 0.0 || noise.dropout >= 1.0)
            throw ConfigError("radar: dropout must be in [0,1)");
    }
};

struct VehicleSpec {
    int id = 0;
    std::string type = "car";  // car | truck
    double length = 4.5;
    double width = 1.8;
    double roof_height = 1.5;
};

struct Waypoint {
    double t = 0.0;
    double y = 0.0;  // longitudinal station on the centerline
    std::optional<double> lane_offset;
};

struct VehicleScript {
    VehicleSpec spec;
    double lane_offset = 0.0;  // default lateral offset from the centerline
    std::vector<Waypoint> waypoints;
};

struct ScenarioConfig {
    std::string name = "scenario";
    RadarConfig radar;
    double duration = 10.0;
    uint64_t seed = 1;
    std::vector<VehicleScript> vehicles;
};

// ---------------------------------------------------------------------------
// Scripted kinematics
// ---------------------------------------------------------------------------

namespace detail {

// Piecewise-linear station/offset lookup; nullopt before spawn / after exit.
inline std::optional<std::pair<double, double>> script_state_at(const VehicleScript& script,
                                                                double t, double* dy_dt) {
    const auto& wp = script.waypoints;
    if (wp.empty() || t < wp.front().t - 1e-9 || t > wp.back().t + 1e-9) return std::nullopt;
    const auto off = [&](size_t k) {
        return wp[k].lane_offset.value_or(script.lane_offset);
    };
    if (wp.size() == 1) {
        *dy_dt = 0.0;
        return std::pair{wp[0].y, off(0)};
    }
    size_t k = 0;
    while (k + 2 < wp.size() && t > wp[k + 1].t) ++k;
    const double span = wp[k + 1].t - wp[k].t;
    const double a = span > 0.0 ? std::clamp((t - wp[k].t) / span, 0.0, 1.0) : 0.0;
    *dy_dt = span > 0.0 ? (wp[k + 1].y - wp[k].y) / span : 0.0;
    return std::pair{wp[k].y + a * (wp[k + 1].y - wp[k].y),
                     off(k) + a * (off(k + 1) - off(k))};
}

}  // namespace detail

// World-space vehicle state at time t: the scripted station is carried along
// the centerline at the scripted lateral offset.
inline std::optional<TruthVehicle> vehicle_state_at(const CenterlineSpec& centerline,
                                                    const VehicleScript& script, double t) {
    double dy_dt = 0.0;
    const auto st = detail::script_state_at(script, t, &dy_dt);
    if (!st) return std::nullopt;
    const auto [y, off] = *st;

    const double m = centerline.slope_at(y);
    const double s = std::sqrt(m * m + 1.0);
    const Vec2 base = centerline.point_at(y);
    const Vec2 lateral{1.0 / s, -m / s};

    TruthVehicle v;
    v.id = script.spec.id;
    v.type = script.spec.type;
    v.length = script.spec.length;
    v.width = script.spec.width;
    v.roof_height = script.spec.roof_height;
    v.position = base + off * lateral;

    // d(position)/dy, including the rotation of the lateral unit vector
    const double mp = centerline.poly.second_derivative(y);
    const Vec2 dpos_dy{m - off * mp * m / (s * s * s), 1.0 - off * mp / (s * s * s)};
    v.velocity = dy_dt * dpos_dy;
    const Vec2 tangent = normalized(dpos_dy);
    v.heading = dy_dt >= 0.0 ? tangent : -1.0 * tangent;
    return v;
}

// ---------------------------------------------------------------------------
// Occlusion
// ---------------------------------------------------------------------------

// Does the 3D segment a->b pass through any other vehicle's footprint below
// that vehicle's roof? Footprints are rectangles oriented by heading.
inline bool path_occluded(const Vec3& a, const Vec3& b, std::span<const TruthVehicle> vehicles,
                          int exclude_id) {
    const Vec2 a2 = a.top_view(), b2 = b.top_view();
    const Vec2 d2 = b2 - a2;
    for (const TruthVehicle& v : vehicles) {
        if (v.id == exclude_id) continue;
        const Vec2 axis = v.heading;
        const Vec2 perp{-axis.y, axis.x};
        // slab intersection in the rectangle's frame
        double t0 = 0.0, t1 = 1.0;
        bool empty = false;
        for (int k = 0; k < 2 && !empty; ++k) {
            const Vec2& dir = k == 0 ? axis : perp;
            const double half = k == 0 ? v.length / 2.0 : v.width / 2.0;
            const double p0 = dot(a2 - v.position, dir);
            const double dp = dot(d2, dir);
            if (std::abs(dp) < 1e-12) {
                if (std::abs(p0) > half) empty = true;
                continue;
            }
            double lo = (-half - p0) / dp;
            double hi = (half - p0) / dp;
            if (lo > hi) std::swap(lo, hi);
            t0 = std::max(t0, lo);
            t1 = std::min(t1, hi);
            if (t0 > t1) empty = true;
        }
        if (empty || t0 > t1) continue;
        const double z0 = a.z + t0 * (b.z - a.z);
        const double z1 = a.z + t1 * (b.z - a.z);
        if (std::min(z0, z1) <= v.roof_height) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Frame emission
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> facet_offsets(const VehicleSpec& spec, int facets) {
    const double inset = std::min(0.5, spec.length / 4.0);
    const double f = spec.length / 2.0 - inset;
    if (facets == 1) return {0.0};
    if (facets == 2) return {f, -f};
    return {f, 0.0, -f};
}

inline Vec2 project_detection(const Vec3& image, const RadarConfig& radar) {
    if (radar.projection == ProjectionMode::kOrthographic) return image.top_view();
    const Vec2 radar2 = radar.position.top_view();
    const double slant = distance(radar.position, image);
    const Vec2 dir = normalized(image.top_view() - radar2);
    return radar2 + slant * dir;
}

inline RadarPoint apply_noise(const Vec2& detected, double doppler, const RadarConfig& radar,
                              Rng& rng) {
    RadarPoint p;
    p.doppler = doppler;
    if (radar.noise.sigma_range == 0.0 && radar.noise.sigma_azimuth_deg == 0.0) {
        p.x = detected.x;
        p.y = detected.y;
        return p;
    }
    const Vec2 radar2 = radar.position.top_view();
    const Vec2 rel = detected - radar2;
    const double r = norm(rel) + rng.gaussian(0.0, radar.noise.sigma_range);
    const double az = std::atan2(rel.x, rel.y) +
                      rng.gaussian(0.0, radar.noise.sigma_azimuth_deg * kPi / 180.0);
    p.x = radar2.x + r * std::sin(az);
    p.y = radar2.y + r * std::cos(az);
    return p;
}

}  // namespace detail

// Emit one radar frame for the given vehicle states. Pure given its inputs
// and the RNG state, so frames can be generated independently.
inline SimFrame simulate_frame(const SegmentedTunnelModel& model, const RadarConfig& radar,
                               std::span<const TruthVehicle> vehicles, Rng& rng, int frame_index = 0,
                               double timestamp = 0.0) {
    radar.validate();
    SimFrame frame;
    frame.index = frame_index;
    frame.timestamp = timestamp;

    const Vec2 radar2 = radar.position.top_view();
    const int n_roof = static_cast<int>(model.roof_segments().size());
    const int n_path = static_cast<int>(model.path_segments().size());

    const auto gate_ok = [&](const Vec2& p) {
        const double r = distance(p, radar2);
        return r >= radar.range_min && r <= radar.range_max;
    };

    for (const TruthVehicle& v : vehicles) {
        if (!gate_ok(v.position)) continue;  // outside the sensing gate
        const Vec3 vel3{v.velocity.x, v.velocity.y, 0.0};

        const auto offsets = detail::facet_offsets(
            VehicleSpec{v.id, v.type, v.length, v.width, v.roof_height}, radar.facets);
        for (size_t fi = 0; fi < offsets.size(); ++fi) {
            const Vec2 fpos2 = v.position + offsets[fi] * v.heading;
            const Vec3 facet{fpos2.x, fpos2.y, v.roof_height};

            if (radar.emit_direct) {
                const bool blocked = path_occluded(radar.position, facet, vehicles, v.id);
                const bool dropped = radar.noise.dropout > 0.0 && rng.bernoulli(radar.noise.dropout);
                if (!blocked && !dropped) {
                    const Vec2 detected = detail::project_detection(facet, radar);
                    const double doppler = dot(vel3, normalized(facet - radar.position));
                    if (gate_ok(detected)) {
                        SimPoint sp;
                        sp.point = detail::apply_noise(detected, doppler, radar, rng);
                        sp.provenance = {v.id, PathType::kDirect, 0, 0, static_cast<int>(fi)};
                        frame.points.push_back(sp);
                    }
                }
            }

            if (!radar.emit_ghosts) continue;
            // The i = 1..N layout on one side tiles the entire roof arc, so a
            // single pass covers both walls and the crown exactly once.
            for (int j = 1; j <= n_path; ++j) {
                for (int i = 1; i <= n_roof; ++i) {
                    const WallPatch patch = model.patch(+1, i, j);
                    const Vec3 image = mirror_point_across_plane(facet, patch.plane);
                    const auto hit = intersect_segment_plane(radar.position, image, patch.plane);
                    if (!hit || hit->t <= 1e-9 || hit->t >= 1.0 - 1e-9) continue;
                    if (!model.patch_contains(patch, hit->point, 1e-9)) continue;
                    if (path_occluded(radar.position, hit->point, vehicles, v.id)) continue;
                    if (path_occluded(hit->point, facet, vehicles, v.id)) continue;
                    if (radar.noise.dropout > 0.0 && rng.bernoulli(radar.noise.dropout)) continue;

                    const Vec2 detected = detail::project_detection(image, radar);
                    if (!gate_ok(detected)) continue;
                    // first-order bistatic Doppler: mirrored velocity along
                    // the radar->reflection-point leg
                    const Vec3 mirrored_vel = mirror_vector_across_plane(vel3, patch.plane.normal);
                    const double doppler =
                        dot(mirrored_vel, normalized(hit->point - radar.position));

                    // Provenance indices follow the correction convention:
                    // roof segments are numbered from the wall on the ghost's
                    // side, so a ghost landing on the opposite side flips i.
                    const int ghost_side = model.signed_offset(detected, j) >= 0.0 ? +1 : -1;
                    const int i_prov = ghost_side == +1 ? i : n_roof + 1 - i;

                    SimPoint sp;
                    sp.point = detail::apply_noise(detected, doppler, radar, rng);
                    sp.provenance = {v.id, PathType::kGhost, i_prov, j, static_cast<int>(fi)};
                    frame.points.push_back(sp);
                }
            }
        }
    }
    return frame;
}

// ---------------------------------------------------------------------------
// Scenario driver
// ---------------------------------------------------------------------------

struct SimulationResult {
    std::vector<SimFrame> frames;
    std::vector<TruthFrame> truth;
};

inline void validate_scenario(const SegmentedTunnelModel& model, const ScenarioConfig& scenario) {
    scenario.radar.validate();
    if (!(scenario.duration > 0.0)) throw ConfigError("scenario: duration must be > 0");
    const auto& lanes = model.lane_boundaries();
    for (const auto& script : scenario.vehicles) {
        if (script.waypoints.empty())
            throw ConfigError("scenario: vehicle " + std::to_string(script.spec.id) +
                              " has no waypoints");
        for (const auto& wp : script.waypoints) {
            const double off = wp.lane_offset.value_or(script.lane_offset);
            if (off < lanes.left || off > lanes.right)
                throw ConfigError("scenario: vehicle " + std::to_string(script.spec.id) +
                                  " leaves the lane boundaries (offset " + std::to_string(off) +
                                  ")");
        }
    }
}

// Deterministic under the scenario seed: frame k uses an RNG stream derived
// from (seed, k) only.
inline SimulationResult simulate_scenario(const SegmentedTunnelModel& model,
                                          const ScenarioConfig& scenario) {
    validate_scenario(model, scenario);
    const int n_frames =
        static_cast<int>(std::round(scenario.duration * scenario.radar.frame_rate));
    const double dt = 1.0 / scenario.radar.frame_rate;

    SimulationResult result;
    result.frames.reserve(static_cast<size_t>(n_frames));
    result.truth.reserve(static_cast<size_t>(n_frames));
    for (int k = 0; k < n_frames; ++k) {
        const double t = k * dt;
        TruthFrame truth;
        truth.index = k;
        truth.timestamp = t;
        for (const auto& script : scenario.vehicles) {
            if (auto v = vehicle_state_at(model.centerline(), script, t)) truth.vehicles.push_back(*v);
        }
        Rng rng(Rng::mix(scenario.seed, static_cast<uint64_t>(k)));
        result.frames.push_back(
            simulate_frame(model, scenario.radar, truth.vehicles, rng, k, t));
        result.truth.push_back(std::move(truth));
    }
    return result;
}

}  // namespace tunradar
