// Config parsing and the on-disk formats: JSON configs, line-delimited JSON
// records for frames / ground truth / tracks / candidate dumps, and the
// metrics CSV. Every format carries a schema string on its first line.
#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tunradar/detection.hpp"
#include "tunradar/ghost_correction.hpp"
#include "tunradar/metrics.hpp"
#include "tunradar/multipath_sim.hpp"
#include "tunradar/tunnel_model.hpp"

namespace tunradar {

inline constexpr const char* kTunnelSchema = "tunradar.tunnel.v1";
inline constexpr const char* kScenarioSchema = "tunradar.scenario.v1";
inline constexpr const char* kFramesSchema = "tunradar.frames.v1";
inline constexpr const char* kTruthSchema = "tunradar.truth.v1";
inline constexpr const char* kTracksSchema = "tunradar.tracks.v1";
inline constexpr const char* kCandidatesSchema = "tunradar.candidates.v1";
inline constexpr const char* kMetricsSchema = "tunradar.metrics.v1";
inline constexpr const char* kTimingSchema = "tunradar.timing.v1";

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Tunnel config
// ---------------------------------------------------------------------------

struct TunnelConfig {
    CrossSectionSpec cross_section;
    std::vector<double> centerline_coefficients;  // used when no samples given
    std::vector<Vec2> calibration_samples;        // fitted when nonempty
    int fit_degree = 3;
    std::optional<LaneBoundaries> lanes;
    std::pair<double, double> extent{0.0, 360.0};
    double max_segment_length = 100.0;
    double resolution_limit = 2.0;
};

namespace detail {

inline void expect_schema(const json& j, const char* want, const char* what) {
    if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
    if (j.value("schema", std::string{}) != want)
        throw ConfigError(std::string(what) + ": missing or wrong schema, expected " + want);
}

}  // namespace detail

inline TunnelConfig parse_tunnel_config(const json& j) {
    detail::expect_schema(j, kTunnelSchema, "tunnel config");
    TunnelConfig cfg;
    const auto& cs = j.at("cross_section");
    cfg.cross_section.r_tunnel = cs.at("r_tunnel").get<double>();
    cfg.cross_section.h_center = cs.at("h_center").get<double>();
    cfg.cross_section.w_road = cs.at("w_road").get<double>();

    if (j.contains("centerline")) {
        cfg.centerline_coefficients = j.at("centerline").at("coefficients").get<std::vector<double>>();
    }
    if (j.contains("calibration_samples")) {
        for (const auto& s : j.at("calibration_samples")) {
            cfg.calibration_samples.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
        }
        cfg.fit_degree = j.value("fit_degree", 3);
    }
    if (cfg.centerline_coefficients.empty() && cfg.calibration_samples.empty())
        throw ConfigError("tunnel config: needs centerline coefficients or calibration samples");

    if (j.contains("lane_boundaries")) {
        cfg.lanes = LaneBoundaries{j.at("lane_boundaries").at("left").get<double>(),
                                   j.at("lane_boundaries").at("right").get<double>()};
    }
    if (j.contains("extent")) {
        cfg.extent = {j.at("extent").at(0).get<double>(), j.at("extent").at(1).get<double>()};
    }
    cfg.max_segment_length = j.value("l_max", 100.0);
    cfg.resolution_limit = j.value("resolution_limit", 2.0);
    return cfg;
}

inline SegmentedTunnelModel build_model(const TunnelConfig& cfg) {
    CenterlineSpec centerline;
    if (!cfg.calibration_samples.empty()) {
        centerline = fit_centerline(cfg.calibration_samples, cfg.fit_degree);
    } else {
        centerline.poly = Polynomial(cfg.centerline_coefficients);
    }
    return SegmentedTunnelModel::build_optimized(cfg.cross_section, centerline,
                                                 cfg.resolution_limit, cfg.max_segment_length,
                                                 cfg.extent, cfg.lanes);
}

// ---------------------------------------------------------------------------
// Scenario config
// ---------------------------------------------------------------------------

struct ScenarioFile {
    TunnelConfig tunnel;
    ScenarioConfig scenario;
};

inline ScenarioFile parse_scenario_config(const json& j, const std::filesystem::path& base_dir) {
    detail::expect_schema(j, kScenarioSchema, "scenario config");
    ScenarioFile out;

    const auto& tj = j.at("tunnel");
    if (tj.is_string()) {
        std::ifstream in(base_dir / tj.get<std::string>());
        if (!in) throw ConfigError("scenario config: cannot open tunnel file " + tj.get<std::string>());
        json parsed;
        in >> parsed;
        out.tunnel = parse_tunnel_config(parsed);
    } else {
        out.tunnel = parse_tunnel_config(tj);
    }

    out.scenario.name = j.value("name", "scenario");
    out.scenario.duration = j.at("duration").get<double>();
    out.scenario.seed = j.value("seed", 1ull);

    if (j.contains("radar")) {
        const auto& r = j.at("radar");
        RadarConfig& rc = out.scenario.radar;
        if (r.contains("position")) {
            rc.position = {r.at("position").at(0).get<double>(), r.at("position").at(1).get<double>(),
                           r.at("position").at(2).get<double>()};
        }
        if (r.contains("range_gate")) {
            rc.range_min = r.at("range_gate").at(0).get<double>();
            rc.range_max = r.at("range_gate").at(1).get<double>();
        }
        rc.range_resolution = r.value("range_resolution", 2.0);
        rc.frame_rate = r.value("frame_rate", 10.0);
        rc.facets = r.value("facets", 3);
        rc.emit_direct = r.value("emit_direct", true);
        rc.emit_ghosts = r.value("emit_ghosts", true);
        if (r.contains("noise")) {
            rc.noise.sigma_range = r.at("noise").value("sigma_range", 0.3);
            rc.noise.sigma_azimuth_deg = r.at("noise").value("sigma_azimuth_deg", 0.2);
            rc.noise.dropout = r.at("noise").value("dropout", 0.2);
        }
        const std::string proj = r.value("projection", "orthographic");
        if (proj == "orthographic") rc.projection = ProjectionMode::kOrthographic;
        else if (proj == "slant_range") rc.projection = ProjectionMode::kSlantRange;
        else throw ConfigError("scenario config: unknown projection mode " + proj);
    }

    for (const auto& vj : j.value("vehicles", json::array())) {
        VehicleScript script;
        script.spec.id = vj.at("id").get<int>();
        script.spec.type = vj.value("type", "car");
        const bool truck = script.spec.type == "truck";
        script.spec.length = vj.value("length", truck ? 10.0 : 4.5);
        script.spec.width = vj.value("width", truck ? 2.5 : 1.8);
        script.spec.roof_height = vj.value("roof_height", truck ? 3.2 : 1.5);
        script.lane_offset = vj.value("lane_offset", 0.0);
        for (const auto& wj : vj.at("waypoints")) {
            Waypoint wp;
            wp.t = wj.at("t").get<double>();
            wp.y = wj.at("y").get<double>();
            if (wj.contains("lane_offset")) wp.lane_offset = wj.at("lane_offset").get<double>();
            script.waypoints.push_back(wp);
        }
        out.scenario.vehicles.push_back(std::move(script));
    }
    return out;
}

inline json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return j;
}

// ---------------------------------------------------------------------------
// Line-delimited record logs
// ---------------------------------------------------------------------------

inline void write_frames_jsonl(std::ostream& os, std::span<const SimFrame> frames) {
    os << json{{"schema", kFramesSchema}}.dump() << "\n";
    for (const auto& f : frames) {
        json points = json::array();
        for (const auto& sp : f.points) {
            points.push_back({{"x", sp.point.x},
                              {"y", sp.point.y},
                              {"vd", sp.point.doppler},
                              {"veh", sp.provenance.vehicle_id},
                              {"path", sp.provenance.path == PathType::kGhost ? "ghost" : "direct"},
                              {"seg", {sp.provenance.roof_segment, sp.provenance.path_segment}},
                              {"facet", sp.provenance.facet}});
        }
        os << json{{"frame", f.index}, {"t", f.timestamp}, {"points", std::move(points)}}.dump()
           << "\n";
    }
}

inline std::vector<SimFrame> read_frames_jsonl(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("frames log: empty file");
    if (json::parse(line).value("schema", std::string{}) != kFramesSchema)
        throw ConfigError("frames log: wrong schema header");
    std::vector<SimFrame> frames;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        SimFrame f;
        f.index = j.at("frame").get<int>();
        f.timestamp = j.at("t").get<double>();
        for (const auto& pj : j.at("points")) {
            SimPoint sp;
            sp.point = {pj.at("x").get<double>(), pj.at("y").get<double>(),
                        pj.at("vd").get<double>()};
            sp.provenance.vehicle_id = pj.value("veh", -1);
            sp.provenance.path =
                pj.value("path", "direct") == std::string("ghost") ? PathType::kGhost : PathType::kDirect;
            if (pj.contains("seg")) {
                sp.provenance.roof_segment = pj.at("seg").at(0).get<int>();
                sp.provenance.path_segment = pj.at("seg").at(1).get<int>();
            }
            sp.provenance.facet = pj.value("facet", 0);
            f.points.push_back(sp);
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

inline void write_truth_jsonl(std::ostream& os, std::span<const TruthFrame> frames) {
    os << json{{"schema", kTruthSchema}}.dump() << "\n";
    for (const auto& f : frames) {
        json vehicles = json::array();
        for (const auto& v : f.vehicles) {
            vehicles.push_back({{"id", v.id},
                                {"x", v.position.x},
                                {"y", v.position.y},
                                {"vx", v.velocity.x},
                                {"vy", v.velocity.y},
                                {"hx", v.heading.x},
                                {"hy", v.heading.y},
                                {"len", v.length},
                                {"wid", v.width},
                                {"roof", v.roof_height},
                                {"type", v.type}});
        }
        os << json{{"frame", f.index}, {"t", f.timestamp}, {"vehicles", std::move(vehicles)}}.dump()
           << "\n";
    }
}

inline std::vector<TruthFrame> read_truth_jsonl(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("truth log: empty file");
    if (json::parse(line).value("schema", std::string{}) != kTruthSchema)
        throw ConfigError("truth log: wrong schema header");
    std::vector<TruthFrame> frames;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        TruthFrame f;
        f.index = j.at("frame").get<int>();
        f.timestamp = j.at("t").get<double>();
        for (const auto& vj : j.at("vehicles")) {
            TruthVehicle v;
            v.id = vj.at("id").get<int>();
            v.position = {vj.at("x").get<double>(), vj.at("y").get<double>()};
            v.velocity = {vj.at("vx").get<double>(), vj.at("vy").get<double>()};
            v.heading = {vj.value("hx", 0.0), vj.value("hy", 1.0)};
            v.length = vj.at("len").get<double>();
            v.width = vj.at("wid").get<double>();
            v.roof_height = vj.value("roof", 1.5);
            v.type = vj.value("type", "car");
            f.vehicles.push_back(v);
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

// Corrected frames reuse the frames schema with a status field per point,
// so the detect stage can read either raw or corrected logs.
inline void write_corrected_jsonl(std::ostream& os, std::span<const CorrectedFrame> frames) {
    os << json{{"schema", kFramesSchema}}.dump() << "\n";
    for (const auto& f : frames) {
        json points = json::array();
        for (const auto& cp : f.points) {
            const char* status = cp.status == CorrectionStatus::kNormal ? "normal"
                                 : cp.status == CorrectionStatus::kCorrected ? "corrected"
                                                                             : "uncorrectable";
            points.push_back({{"x", cp.point.x},
                              {"y", cp.point.y},
                              {"vd", cp.point.doppler},
                              {"veh", cp.provenance.vehicle_id},
                              {"path", cp.provenance.path == PathType::kGhost ? "ghost" : "direct"},
                              {"seg", {cp.provenance.roof_segment, cp.provenance.path_segment}},
                              {"facet", cp.provenance.facet},
                              {"status", status},
                              {"raw", {cp.raw.x, cp.raw.y}}});
        }
        os << json{{"frame", f.index}, {"t", f.timestamp}, {"points", std::move(points)}}.dump()
           << "\n";
    }
}

struct TrackFrameLog {
    int frame = 0;
    std::vector<TrackOutput> tracks;
};

inline void write_tracks_jsonl(std::ostream& os, std::span<const TrackFrameLog> frames) {
    os << json{{"schema", kTracksSchema}}.dump() << "\n";
    for (const auto& f : frames) {
        json tracks = json::array();
        for (const auto& t : f.tracks) {
            tracks.push_back({{"id", t.id},
                              {"x", t.position.x},
                              {"y", t.position.y},
                              {"vx", t.velocity.x},
                              {"vy", t.velocity.y},
                              {"status", t.updated_this_frame ? "confirmed" : "coasting"}});
        }
        os << json{{"frame", f.frame}, {"tracks", std::move(tracks)}}.dump() << "\n";
    }
}

inline void write_candidates_jsonl(std::ostream& os,
                                   std::span<const CandidateDumpRecord> records) {
    os << json{{"schema", kCandidatesSchema}}.dump() << "\n";
    for (const auto& r : records) {
        json cands = json::array();
        for (size_t k = 0; k < r.candidates.size(); ++k) {
            const auto& c = r.candidates[k];
            cands.push_back({{"i", c.roof_index},
                             {"j", c.path_index},
                             {"l1", c.l1},
                             {"l2", c.l2},
                             {"x", c.position.x},
                             {"y", c.position.y},
                             {"sel_signal", static_cast<int>(k) == r.signal_choice},
                             {"sel_dist", static_cast<int>(k) == r.dist_choice}});
        }
        json rec{{"frame", r.frame_index},
                 {"ghost", {r.ghost.x, r.ghost.y}},
                 {"veh", r.provenance.vehicle_id},
                 {"true_seg", {r.provenance.roof_segment, r.provenance.path_segment}},
                 {"candidates", std::move(cands)}};
        if (r.final_position) rec["final"] = {r.final_position->x, r.final_position->y};
        else rec["final"] = nullptr;
        os << rec.dump() << "\n";
    }
}

// ---------------------------------------------------------------------------
// Metrics CSV and model dump
// ---------------------------------------------------------------------------

struct MetricsRow {
    std::string scenario;
    std::string variant;
    long frames = 0;
    MetricsReport report;
    double mean_lag = 0.0;
    int never_confirmed = 0;
    double processing_fps = 0.0;  // wall-clock measurement; varies run to run
};

inline void write_metrics_csv(std::ostream& os, std::span<const MetricsRow> rows) {
    os << "# schema=" << kMetricsSchema << "\n";
    os << "scenario,variant,frames,tp,fp,fn,precision,recall,f1,mean_lag_m,never_confirmed,"
          "processing_fps\n";
    os << std::setprecision(6) << std::fixed;
    for (const auto& r : rows) {
        os << r.scenario << ',' << r.variant << ',' << r.frames << ',' << r.report.counts.tp << ','
           << r.report.counts.fp << ',' << r.report.counts.fn << ',' << r.report.precision << ','
           << r.report.recall << ',' << r.report.f1 << ',' << r.mean_lag << ','
           << r.never_confirmed << ',' << r.processing_fps << "\n";
    }
}

inline std::string dump_model_text(const SegmentedTunnelModel& model) {
    std::ostringstream os;
    const auto& cs = model.cross_section();
    const auto& p = model.params();
    const auto budget = model.error_budget();
    os << "# schema=tunradar.model.v1\n";
    os << "cross_section: r_tunnel=" << cs.r_tunnel << " h_center=" << cs.h_center
       << " w_road=" << cs.w_road << "\n";
    os << "centerline:";
    for (double c : model.centerline().poly.coefficients()) os << ' ' << c;
    os << " (residual_rms=" << model.centerline().fit_residual_rms << ")\n";
    os << "params: N=" << p.sector_count << " theta_max_deg=" << p.sector_angle * 180.0 / kPi
       << " dphi_max_deg=" << p.tangent_threshold * 180.0 / kPi << " l_max=" << p.max_segment_length
       << "\n";
    os << "error_budget: E_c=" << budget.cross_section_bound << " E_p=" << budget.path_bound
       << " total=" << budget.total() << "\n";
    os << "lanes: left=" << model.lane_boundaries().left << " right=" << model.lane_boundaries().right
       << "\n";
    os << "roof_segments: " << model.roof_segments().size() << "\n";
    for (const auto& rs : model.roof_segments()) {
        os << "  i=" << rs.index << " chord=(" << rs.chord_lo.x << ',' << rs.chord_lo.y << ")->("
           << rs.chord_hi.x << ',' << rs.chord_hi.y << ") theta=" << rs.sector_angle << "\n";
    }
    os << "path_segments: " << model.path_segments().size();
    if (model.extent_warning()) os << "  # warning: extent beyond fitted calibration range";
    os << "\n";
    for (const auto& ps : model.path_segments()) {
        os << "  j=" << ps.index << " y=[" << ps.y_start << ',' << ps.y_end << "] m=" << ps.m
           << " b=" << ps.b << " len=" << ps.length << "\n";
    }
    return os.str();
}

}  // namespace tunradar
