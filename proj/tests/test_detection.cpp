#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <set>

#include "support/oracles.hpp"
#include "tunradar/detection.hpp"
#include "tunradar/hungarian.hpp"
#include "tunradar/random.hpp"

using namespace tunradar;
using namespace tunradar::testing;

TEST_CASE("weighted point distance: values and metric axioms") {
    const ClusterConfig cfg;
    const RadarPoint p{0.0, 0.0, 0.0};
    CHECK(weighted_point_distance(p, p, cfg) == 0.0);

    const RadarPoint q{1.0, 2.0, 1.0};
    CHECK(weighted_point_distance(p, q, cfg) == doctest::Approx(std::sqrt(7.0)).epsilon(1e-12));

    Rng rng(1);
    for (int k = 0; k < 500; ++k) {
        const RadarPoint a{rng.uniform(-10, 10), rng.uniform(0, 350), rng.uniform(-30, 30)};
        const RadarPoint b{rng.uniform(-10, 10), rng.uniform(0, 350), rng.uniform(-30, 30)};
        const RadarPoint c{rng.uniform(-10, 10), rng.uniform(0, 350), rng.uniform(-30, 30)};
        const double ab = weighted_point_distance(a, b, cfg);
        const double ba = weighted_point_distance(b, a, cfg);
        const double ac = weighted_point_distance(a, c, cfg);
        const double cb = weighted_point_distance(c, b, cfg);
        CHECK(ab >= 0.0);
        CHECK(ab == ba);
        CHECK(ab <= ac + cb + 1e-12);  // triangle inequality
    }
}

TEST_CASE("clustering splits by position and by Doppler") {
    const ClusterConfig cfg;

    SUBCASE("two points 10 m apart, same Doppler, split") {
        const std::vector<RadarPoint> pts{{0.0, 100.0, -10.0}, {0.0, 110.0, -10.0}};
        // weighted distance sqrt(0.5)*10 > 4
        CHECK(weighted_point_distance(pts[0], pts[1], cfg) > cfg.d_clu);
        const auto clusters = cluster_frame(pts, cfg);
        CHECK(clusters.size() == 2);
    }

    SUBCASE("co-located points with a 3 m/s Doppler gap split") {
        const std::vector<RadarPoint> pts{{1.0, 100.0, -10.0}, {1.0, 100.0, -7.0}};
        CHECK(weighted_point_distance(pts[0], pts[1], cfg) == doctest::Approx(6.0));
        const auto clusters = cluster_frame(pts, cfg);
        CHECK(clusters.size() == 2);
    }

    SUBCASE("nearby points with matched Doppler merge; centroid is the mean") {
        const std::vector<RadarPoint> pts{
            {1.0, 100.0, -10.0}, {1.4, 101.5, -10.2}, {0.6, 99.0, -9.8}};
        const auto clusters = cluster_frame(pts, cfg);
        REQUIRE(clusters.size() == 1);
        CHECK(clusters[0].centroid.x == doctest::Approx(1.0));
        CHECK(clusters[0].centroid.y == doctest::Approx(100.1666666667));
        CHECK(clusters[0].mean_doppler == doctest::Approx(-10.0));
    }

    SUBCASE("empty input, empty output") { CHECK(cluster_frame({}, cfg).empty()); }
}

TEST_CASE("clustering equals the brute-force neighborhood-graph oracle") {
    const ClusterConfig cfg;
    Rng rng(99);
    for (int frame = 0; frame < 100; ++frame) {
        const int n = rng.uniform_int(0, 60);
        std::vector<RadarPoint> pts;
        pts.reserve(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) {
            // mix of tight clumps and scatter
            if (k % 3 == 0 || pts.empty()) {
                pts.push_back({rng.uniform(-8, 8), rng.uniform(50, 350), rng.uniform(-25, 25)});
            } else {
                const auto& base = pts[static_cast<size_t>(rng.uniform_int(0, k - 1))];
                pts.push_back({base.x + rng.gaussian(0, 1.0), base.y + rng.gaussian(0, 1.5),
                               base.doppler + rng.gaussian(0, 0.4)});
            }
        }
        const auto clusters = cluster_frame(pts, cfg);
        const auto oracle = brute_force_cluster_labels(pts, cfg);

        // same partition: member sets must match exactly
        std::vector<int> impl_label(pts.size(), -1);
        for (size_t c = 0; c < clusters.size(); ++c)
            for (int idx : clusters[c].members) impl_label[static_cast<size_t>(idx)] = static_cast<int>(c);
        for (size_t a = 0; a < pts.size(); ++a) {
            for (size_t b = 0; b < pts.size(); ++b) {
                CHECK((impl_label[a] == impl_label[b]) == (oracle[a] == oracle[b]));
            }
        }
    }
}

TEST_CASE("hungarian assignment matches the brute-force permutation oracle") {
    Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = rng.uniform_int(6, 8);
        std::vector<double> cost(static_cast<size_t>(n) * n);
        for (auto& c : cost) c = rng.uniform(0.0, 100.0);
        const auto assign = solve_assignment(cost, n, n);
        double total = 0.0;
        std::set<int> used;
        for (int r = 0; r < n; ++r) {
            REQUIRE(assign[static_cast<size_t>(r)] >= 0);
            used.insert(assign[static_cast<size_t>(r)]);
            total += cost[static_cast<size_t>(r) * n + assign[static_cast<size_t>(r)]];
        }
        CHECK(static_cast<int>(used.size()) == n);  // one-to-one
        CHECK(total == doctest::Approx(brute_force_min_assignment_cost(cost, n, n)).epsilon(1e-9));
    }
}

TEST_CASE("hungarian handles rectangular and trivial inputs") {
    CHECK(solve_assignment({}, 0, 0).empty());

    const std::vector<double> one{3.0};
    const auto single = solve_assignment(one, 1, 1);
    CHECK(single == std::vector<int>{0});

    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const int rows = rng.uniform_int(2, 6);
        const int cols = rng.uniform_int(2, 6);
        std::vector<double> cost(static_cast<size_t>(rows) * cols);
        for (auto& c : cost) c = rng.uniform(0.0, 50.0);
        const auto assign = solve_assignment(cost, rows, cols);
        double total = 0.0;
        int assigned = 0;
        std::set<int> used;
        for (int r = 0; r < rows; ++r) {
            const int c = assign[static_cast<size_t>(r)];
            if (c < 0) continue;
            CHECK(used.insert(c).second);
            total += cost[static_cast<size_t>(r) * cols + c];
            ++assigned;
        }
        CHECK(assigned == std::min(rows, cols));
        CHECK(total ==
              doctest::Approx(brute_force_min_assignment_cost(cost, rows, cols)).epsilon(1e-9));
    }
}

TEST_CASE("kalman update: zero measurement noise pins the state to the detection") {
    TrackerConfig cfg;
    cfg.sigma_lateral = 1e-6;
    cfg.sigma_longitudinal = 1e-6;
    auto state = KalmanState::from_detection({1.0, 100.0}, cfg, 0);
    state.predict(cfg);
    state.update({1.3, 102.0}, cfg);
    CHECK(state.position().x == doctest::Approx(1.3).epsilon(1e-6));
    CHECK(state.position().y == doctest::Approx(102.0).epsilon(1e-6));
}

TEST_CASE("kalman covariance stays symmetric PSD over 10000 random cycles") {
    TrackerConfig cfg;
    Rng rng(55);
    auto state = KalmanState::from_detection({0.0, 100.0}, cfg, 0);
    for (int k = 0; k < 10000; ++k) {
        state.predict(cfg);
        if (rng.bernoulli(0.8)) {
            state.update({state.position().x + rng.gaussian(0, 0.6),
                          state.position().y + rng.gaussian(0, 1.2)},
                         cfg);
        }
        const Eigen::Matrix4d& p = state.p;
        CHECK((p - p.transpose()).norm() < 1e-12);
        if (k % 100 == 0) {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(p);
            CHECK(es.eigenvalues().minCoeff() > -1e-9);
        }
    }
}

TEST_CASE("kalman tracks a constant-velocity target") {
    TrackerConfig cfg;
    auto state = KalmanState::from_detection({0.0, 50.0}, cfg, 0);
    for (int k = 1; k <= 40; ++k) {
        state.predict(cfg);
        state.update({0.0, 50.0 + 2.0 * k * cfg.dt}, cfg);
    }
    CHECK(state.velocity().y == doctest::Approx(2.0).epsilon(0.05));
    CHECK(state.position().y == doctest::Approx(58.0).epsilon(0.01));
}

TEST_CASE("track lifecycle: confirmation on the third hit, death on the fifth miss") {
    Tracker tracker;
    const Vec2 start{1.0, 100.0};

    // frame 0: birth (hit 1) - tentative, no output
    CHECK(tracker.step(0, std::vector<Vec2>{start}).empty());
    // frame 1: hit 2 - still nothing
    CHECK(tracker.step(1, std::vector<Vec2>{{1.0, 102.0}}).empty());
    // frame 2: hit 3 - confirmed now
    const auto out = tracker.step(2, std::vector<Vec2>{{1.0, 104.0}});
    REQUIRE(out.size() == 1);
    CHECK(out[0].id == 1);

    // five consecutive misses kill it; the fourth still outputs (coasting)
    for (int k = 0; k < 4; ++k) {
        const auto coasting = tracker.step(3 + k, {});
        CHECK(coasting.size() == 1);
    }
    const auto dead = tracker.step(7, {});
    CHECK(dead.empty());
    REQUIRE(tracker.finished_tracks().size() == 1);
    CHECK(tracker.finished_tracks()[0].id == 1);

    // a new detection starts a new track with a fresh id
    tracker.step(8, std::vector<Vec2>{{0.0, 60.0}});
    tracker.step(9, std::vector<Vec2>{{0.0, 62.0}});
    const auto out2 = tracker.step(10, std::vector<Vec2>{{0.0, 64.0}});
    REQUIRE(out2.size() == 1);
    CHECK(out2[0].id == 2);  // ids are never reused
}

TEST_CASE("a missed frame resets the consecutive-hit requirement") {
    Tracker tracker;
    tracker.step(0, std::vector<Vec2>{{0.0, 100.0}});
    tracker.step(1, std::vector<Vec2>{{0.0, 102.0}});
    CHECK(tracker.step(2, {}).empty());  // miss before the third hit
    CHECK(tracker.step(3, std::vector<Vec2>{{0.0, 106.0}}).empty());
    CHECK(tracker.step(4, std::vector<Vec2>{{0.0, 108.0}}).empty());
    // three consecutive again
    CHECK(tracker.step(5, std::vector<Vec2>{{0.0, 110.0}}).size() == 1);
}

TEST_CASE("gated association: distant detections start new tracks instead of matching") {
    Tracker tracker;
    tracker.step(0, std::vector<Vec2>{{0.0, 100.0}});
    tracker.step(1, std::vector<Vec2>{{0.0, 102.0}});
    tracker.step(2, std::vector<Vec2>{{0.0, 104.0}});
    REQUIRE(tracker.live_tracks().size() == 1);
    // a detection 40 m away is outside the 5 m gate
    tracker.step(3, std::vector<Vec2>{{0.0, 146.0}});
    CHECK(tracker.live_tracks().size() == 2);
}
