#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support/oracles.hpp"
#include "support/scenarios.hpp"
#include "tunradar/io.hpp"
#include "tunradar/pipeline.hpp"
#include "tunradar/random.hpp"

using namespace tunradar;
using namespace tunradar::testing;

TEST_CASE("match_frame basics") {
    const MatchConfig cfg;

    SUBCASE("a detection exactly on a truth is a TP") {
        const std::vector<Vec2> det{{1.0, 100.0}};
        const std::vector<Vec2> truth{{1.0, 100.0}};
        const auto r = match_frame(det, truth, cfg);
        CHECK(r.tp == 1);
        CHECK(r.fp == 0);
        CHECK(r.fn == 0);
    }

    SUBCASE("2 m lateral miss fails the 1.5 m threshold: FP plus FN") {
        const std::vector<Vec2> det{{3.0, 100.0}};
        const std::vector<Vec2> truth{{1.0, 100.0}};
        const auto r = match_frame(det, truth, cfg);
        CHECK(r.tp == 0);
        CHECK(r.fp == 1);
        CHECK(r.fn == 1);
    }

    SUBCASE("longitudinal tolerance is the looser 5 m") {
        const std::vector<Vec2> det{{1.0, 104.0}};
        const std::vector<Vec2> truth{{1.0, 100.0}};
        const auto r = match_frame(det, truth, cfg);
        CHECK(r.tp == 1);
    }

    SUBCASE("unmatched entries count as FP / FN") {
        const std::vector<Vec2> det{{1.0, 100.0}, {0.0, 200.0}};
        const std::vector<Vec2> truth{{1.0, 100.0}, {0.0, 250.0}, {1.0, 300.0}};
        const auto r = match_frame(det, truth, cfg);
        CHECK(r.tp == 1);
        CHECK(r.fp == 1);
        CHECK(r.fn == 2);
    }
}

TEST_CASE("match_frame assignment is optimal against the permutation oracle") {
    const MatchConfig cfg{1e9, 1e9};  // thresholds wide open: pure assignment
    Rng rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 8;
        std::vector<Vec2> det, truth;
        for (int k = 0; k < n; ++k) {
            det.push_back({rng.uniform(-5, 5), rng.uniform(50, 350)});
            truth.push_back({rng.uniform(-5, 5), rng.uniform(50, 350)});
        }
        std::vector<double> cost(static_cast<size_t>(n) * n);
        for (int d = 0; d < n; ++d)
            for (int t = 0; t < n; ++t)
                cost[static_cast<size_t>(d) * n + t] = distance(det[static_cast<size_t>(d)],
                                                                truth[static_cast<size_t>(t)]);
        const double oracle = brute_force_min_assignment_cost(cost, n, n);

        // reconstruct the total matched distance through the library path
        const auto assign = solve_assignment(cost, n, n);
        double total = 0.0;
        for (int d = 0; d < n; ++d) total += cost[static_cast<size_t>(d) * n + assign[static_cast<size_t>(d)]];
        CHECK(total == doctest::Approx(oracle).epsilon(1e-9));
        CHECK(match_frame(det, truth, cfg).tp == n);
    }
}

TEST_CASE("metrics formulas and degenerate cases") {
    MetricsCounts c;
    c.tp = 9;
    c.fp = 1;
    c.fn = 2;
    const auto m = compute_metrics(c);
    CHECK(m.precision == doctest::Approx(0.9));
    CHECK(m.recall == doctest::Approx(9.0 / 11.0));
    CHECK(m.f1 == doctest::Approx(2.0 * 0.9 * (9.0 / 11.0) / (0.9 + 9.0 / 11.0)));
    CHECK(m.f1 == doctest::Approx(0.857).epsilon(1e-3));

    const auto zero = compute_metrics({0, 0, 0});
    CHECK(zero.precision == 0.0);
    CHECK(zero.recall == 0.0);
    CHECK(zero.f1 == 0.0);

    const auto perfect = compute_metrics({10, 0, 0});
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);
}

TEST_CASE("metrics are invariant under detection/truth reordering") {
    Rng rng(9);
    const MatchConfig cfg;
    std::vector<Vec2> det, truth;
    for (int k = 0; k < 10; ++k) {
        det.push_back({rng.uniform(-3, 3), rng.uniform(50, 350)});
        truth.push_back({rng.uniform(-3, 3), rng.uniform(50, 350)});
    }
    const auto base = match_frame(det, truth, cfg);
    std::reverse(det.begin(), det.end());
    std::reverse(truth.begin(), truth.end());
    const auto flipped = match_frame(det, truth, cfg);
    CHECK(base.tp == flipped.tp);
    CHECK(base.fp == flipped.fp);
    CHECK(base.fn == flipped.fn);
}

TEST_CASE("spatial lag") {
    SUBCASE("confirmation 10 m past the region boundary") {
        const LagInput in{1, 50.0, 60.0};
        const auto rep = spatial_lag(std::span{&in, 1});
        REQUIRE(rep.per_vehicle.size() == 1);
        CHECK(rep.per_vehicle[0].second == doctest::Approx(10.0));
        CHECK(rep.mean_lag == doctest::Approx(10.0));
    }
    SUBCASE("confirmation at the boundary is zero lag") {
        const LagInput in{1, 50.0, 50.0};
        CHECK(spatial_lag(std::span{&in, 1}).mean_lag == doctest::Approx(0.0));
    }
    SUBCASE("never-confirmed vehicles are excluded from the mean") {
        const std::vector<LagInput> ins{{1, 50.0, 58.0}, {2, 350.0, std::nullopt}};
        const auto rep = spatial_lag(ins);
        CHECK(rep.per_vehicle.size() == 1);
        CHECK(rep.mean_lag == doctest::Approx(8.0));
        CHECK(rep.never_confirmed == 1);
    }
}

TEST_CASE("lag is smaller when sensing direction matches travel direction") {
    // paired scenarios: same car driving away from vs toward the radar
    const auto model = straight_tunnel();
    PipelineConfig cfg;

    ScenarioConfig away;
    away.name = "away";
    away.duration = 10.0;
    away.seed = 11;
    away.vehicles.push_back(car_script(1, 1.0, 52.0, 20.0, 0.0, 10.0));

    ScenarioConfig toward;
    toward.name = "toward";
    toward.duration = 10.0;
    toward.seed = 11;
    {
        VehicleScript s = car_script(1, 1.0, 348.0, 20.0, 0.0, 10.0);
        s.waypoints = {{0.0, 348.0, {}}, {10.0, 148.0, {}}};  // driving toward the radar
        toward.vehicles.push_back(s);
    }

    const auto res_away =
        run_pipeline(model, away.radar, simulate_scenario(model, away), PipelineVariant::kFull, cfg);
    const auto res_toward = run_pipeline(model, toward.radar, simulate_scenario(model, toward),
                                         PipelineVariant::kFull, cfg);
    REQUIRE_FALSE(res_away.lag.per_vehicle.empty());
    REQUIRE_FALSE(res_toward.lag.per_vehicle.empty());
    CHECK(res_away.lag.mean_lag < res_toward.lag.mean_lag);
}

TEST_CASE("tunnel and scenario configs parse, model builds") {
    const json tunnel_json = {
        {"schema", kTunnelSchema},
        {"cross_section", {{"r_tunnel", 5.5}, {"h_center", 1.6}, {"w_road", 4.0}}},
        {"centerline", {{"coefficients", {0.0, 0.0, 0.0, 0.0}}}},
        {"extent", {0.0, 360.0}},
        {"l_max", 100.0},
        {"resolution_limit", 2.0},
    };
    const auto tc = parse_tunnel_config(tunnel_json);
    const auto model = build_model(tc);
    CHECK(model.params().sector_count == 12);
    CHECK(model.lane_boundaries().left == doctest::Approx(-2.0));

    const json scenario_json = {
        {"schema", kScenarioSchema},
        {"name", "demo"},
        {"tunnel", tunnel_json},
        {"duration", 2.0},
        {"seed", 42},
        {"radar",
         {{"position", {0.0, 0.0, 5.1}},
          {"range_gate", {50.0, 350.0}},
          {"noise", {{"sigma_range", 0.3}, {"sigma_azimuth_deg", 0.2}, {"dropout", 0.2}}}}},
        {"vehicles",
         {{{"id", 1},
           {"type", "car"},
           {"lane_offset", 1.0},
           {"waypoints", {{{"t", 0.0}, {"y", 60.0}}, {{"t", 2.0}, {"y", 100.0}}}}}}},
    };
    const auto sf = parse_scenario_config(scenario_json, ".");
    CHECK(sf.scenario.name == "demo");
    CHECK(sf.scenario.vehicles.size() == 1);
    CHECK(sf.scenario.radar.noise.dropout == doctest::Approx(0.2));

    CHECK_THROWS_AS(parse_tunnel_config(json{{"schema", "bogus"}}), ConfigError);
}

TEST_CASE("frame and truth logs round-trip byte-identically") {
    const auto model = straight_tunnel();
    auto scenario = cars_scenario();
    scenario.duration = 1.5;
    const auto sim = simulate_scenario(model, scenario);

    std::ostringstream frames_a, truth_a;
    write_frames_jsonl(frames_a, sim.frames);
    write_truth_jsonl(truth_a, sim.truth);

    std::istringstream frames_in(frames_a.str());
    const auto frames_back = read_frames_jsonl(frames_in);
    std::ostringstream frames_b;
    write_frames_jsonl(frames_b, frames_back);
    CHECK(frames_a.str() == frames_b.str());

    std::istringstream truth_in(truth_a.str());
    const auto truth_back = read_truth_jsonl(truth_in);
    std::ostringstream truth_b;
    write_truth_jsonl(truth_b, truth_back);
    CHECK(truth_a.str() == truth_b.str());

    REQUIRE(frames_back.size() == sim.frames.size());
    for (size_t k = 0; k < frames_back.size(); ++k) {
        REQUIRE(frames_back[k].points.size() == sim.frames[k].points.size());
        for (size_t p = 0; p < frames_back[k].points.size(); ++p) {
            CHECK(frames_back[k].points[p].point.x == sim.frames[k].points[p].point.x);
            CHECK(frames_back[k].points[p].point.doppler == sim.frames[k].points[p].point.doppler);
        }
    }
}

TEST_CASE("pipeline artifacts are bit-identical across reruns with a fixed seed") {
    const auto model = straight_tunnel();
    auto scenario = cars_scenario();
    scenario.duration = 3.0;

    PipelineConfig cfg;
    cfg.keep_artifacts = true;
    cfg.collect_candidates = true;

    const auto run = [&]() {
        const auto sim = simulate_scenario(model, scenario);
        auto res = run_pipeline(model, scenario.radar, sim, PipelineVariant::kFull, cfg);
        std::ostringstream frames, tracks, cands;
        write_frames_jsonl(frames, sim.frames);
        std::vector<TrackFrameLog> logs;
        for (size_t k = 0; k < res.tracks_per_frame.size(); ++k)
            logs.push_back({static_cast<int>(k), res.tracks_per_frame[k]});
        write_tracks_jsonl(tracks, logs);
        write_candidates_jsonl(cands, res.candidate_dumps);
        return std::tuple{frames.str(), tracks.str(), cands.str(), res.metrics.counts.tp,
                          res.metrics.counts.fp, res.metrics.counts.fn};
    };

    const auto a = run();
    const auto b = run();
    CHECK(std::get<0>(a) == std::get<0>(b));
    CHECK(std::get<1>(a) == std::get<1>(b));
    CHECK(std::get<2>(a) == std::get<2>(b));
    CHECK(std::get<3>(a) == std::get<3>(b));
    CHECK(std::get<4>(a) == std::get<4>(b));
    CHECK(std::get<5>(a) == std::get<5>(b));
}

TEST_CASE("noiseless single-car run detects the car in nearly every frame") {
    const auto model = straight_tunnel();
    ScenarioConfig scenario;
    scenario.name = "single";
    scenario.duration = 8.0;
    scenario.seed = 21;
    scenario.radar.noise = {0.0, 0.0, 0.0};
    scenario.vehicles.push_back(car_script(1, 1.0, 60.0, 20.0, 0.0, 8.0));

    const auto sim = simulate_scenario(model, scenario);
    const auto res =
        run_pipeline(model, scenario.radar, sim, PipelineVariant::kFull, PipelineConfig{});
    // tracker needs 3 frames to confirm; after that every frame matches
    CHECK(res.metrics.recall > 0.9);
    CHECK(res.metrics.precision > 0.95);
    CHECK(res.metrics.f1 > 0.92);
}

TEST_CASE("ghost_removal equals dropping the out-of-lane points") {
    const auto model = straight_tunnel();
    auto scenario = cars_scenario();
    scenario.duration = 2.0;
    const auto sim = simulate_scenario(model, scenario);

    PipelineConfig cfg;
    cfg.keep_artifacts = true;
    const auto res = run_pipeline(model, scenario.radar, sim, PipelineVariant::kGhostRemoval, cfg);
    REQUIRE(res.corrected_frames.size() == sim.frames.size());
    for (size_t k = 0; k < sim.frames.size(); ++k) {
        size_t kept = 0;
        for (const auto& sp : sim.frames[k].points) {
            bool ghost = true;
            try {
                ghost = model.classify(sp.point).label == PointLabel::kGhost;
            } catch (const OutOfExtentError&) {
            }
            if (!ghost) ++kept;
        }
        CHECK(res.corrected_frames[k].points.size() == kept);
        for (const auto& cp : res.corrected_frames[k].points) {
            CHECK(model.classify(cp.point).label == PointLabel::kNormal);
        }
    }
}

TEST_CASE("metrics CSV has the documented stable header") {
    MetricsRow row;
    row.scenario = "cars";
    row.variant = "full";
    row.frames = 80;
    row.report = compute_metrics({70, 4, 6});
    row.mean_lag = 9.5;
    row.processing_fps = 123.4;
    std::ostringstream os;
    write_metrics_csv(os, std::span{&row, 1});
    std::istringstream is(os.str());
    std::string line0, line1, line2;
    std::getline(is, line0);
    std::getline(is, line1);
    std::getline(is, line2);
    CHECK(line0 == "# schema=tunradar.metrics.v1");
    CHECK(line1 ==
          "scenario,variant,frames,tp,fp,fn,precision,recall,f1,mean_lag_m,never_confirmed,"
          "processing_fps");
    CHECK(line2.substr(0, 10) == "cars,full,");
}

TEST_CASE("model dump text includes the derived budget") {
    const auto model = straight_tunnel();
    const auto text = dump_model_text(model);
    CHECK(text.find("tunradar.model.v1") != std::string::npos);
    CHECK(text.find("error_budget") != std::string::npos);
    CHECK(text.find("roof_segments: 12") != std::string::npos);
}

TEST_CASE("noiseless suite: fusion is never worse than either criterion alone") {
    const auto model = straight_tunnel();
    for (auto sc : standard_suite()) {
        sc.radar.noise = {0.0, 0.0, 0.0};
        const auto sim = simulate_scenario(model, sc);
        const auto f1 = [&](PipelineVariant v) {
            return run_pipeline(model, sc.radar, sim, v, PipelineConfig{}).metrics.f1;
        };
        const double full = f1(PipelineVariant::kFull);
        CHECK(full >= f1(PipelineVariant::kLeastPathLoss) - 1e-12);
        CHECK(full >= f1(PipelineVariant::kLeastDistance) - 1e-12);
    }
}
