// Shared scenario definitions for the integration and acceptance tests:
// a straight and a curved tunnel with the published cross-section, plus the
// four scripted traffic scenarios (cars, trucks, congestion, occlusion).
#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "tunradar/multipath_sim.hpp"
#include "tunradar/tunnel_model.hpp"

namespace tunradar::testing {

inline CrossSectionSpec paper_cross_section() { return {5.5, 1.6, 4.0}; }

// The wider profile of the public test tunnel.
inline CrossSectionSpec public_cross_section() { return {5.6, 2.0, 4.4}; }

inline SegmentedTunnelModel straight_tunnel() {
    CenterlineSpec c;
    c.poly = Polynomial({0.0, 0.0});
    return SegmentedTunnelModel::build_optimized(paper_cross_section(), c, 2.0, 100.0,
                                                 {0.0, 360.0});
}

inline SegmentedTunnelModel curved_tunnel() {
    CenterlineSpec c;
    c.poly = Polynomial({0.3, 0.01, -2e-4, 6e-7});
    return SegmentedTunnelModel::build_optimized(paper_cross_section(), c, 2.0, 100.0,
                                                 {0.0, 360.0});
}

// Public-tunnel setup: wider curved bore, radar high on the wall side.
inline SegmentedTunnelModel public_tunnel() {
    CenterlineSpec c;
    c.poly = Polynomial({0.3, 0.01, -2e-4, 6e-7});
    return SegmentedTunnelModel::build_optimized(public_cross_section(), c, 2.0, 100.0,
                                                 {0.0, 360.0});
}

inline VehicleScript car_script(int id, double lane, double y0, double speed, double t0,
                                double t1) {
    VehicleScript s;
    s.spec = {id, "car", 4.5, 1.8, 1.5};
    s.lane_offset = lane;
    s.waypoints = {{t0, y0, {}}, {t1, y0 + speed * (t1 - t0), {}}};
    return s;
}

inline VehicleScript truck_script(int id, double lane, double y0, double speed, double t0,
                                  double t1, double roof = 3.2, double length = 10.0,
                                  double width = 2.5) {
    VehicleScript s;
    s.spec = {id, "truck", length, width, roof};
    s.lane_offset = lane;
    s.waypoints = {{t0, y0, {}}, {t1, y0 + speed * (t1 - t0), {}}};
    return s;
}

// Two cars in opposite lanes. lane_spread widens the lateral placement:
// the comparison suite uses edge-hugging offsets that exercise positions
// where single-criterion selection is known to struggle.
inline ScenarioConfig cars_scenario(uint64_t seed = 101, double lane_spread = 1.0) {
    ScenarioConfig sc;
    sc.name = "cars";
    sc.duration = 12.0;
    sc.seed = seed;
    sc.vehicles.push_back(car_script(1, -1.5 * lane_spread, 55.0, 16.0, 0.0, 12.0));
    sc.vehicles.push_back(car_script(2, 1.0, 80.0, 14.0, 0.0, 12.0));
    return sc;
}

// Two trucks and a car spread across the road width.
inline ScenarioConfig trucks_scenario(uint64_t seed = 102, double lane_spread = 1.0) {
    ScenarioConfig sc;
    sc.name = "trucks";
    sc.duration = 12.0;
    sc.seed = seed;
    sc.vehicles.push_back(truck_script(1, 0.8, 60.0, 13.0, 0.0, 12.0));
    sc.vehicles.push_back(truck_script(2, -1.2, 95.0, 15.0, 0.0, 12.0));
    sc.vehicles.push_back(car_script(3, 1.5 * lane_spread, 130.0, 17.0, 0.0, 12.0));
    return sc;
}

// Two slow cars nose to tail (bumper gap under 2 m, below 10 km/h).
inline ScenarioConfig congestion_scenario(uint64_t seed = 103) {
    ScenarioConfig sc;
    sc.name = "congestion";
    sc.duration = 10.0;
    sc.seed = seed;
    sc.vehicles.push_back(car_script(1, 1.0, 75.0, 2.2, 0.0, 10.0));
    sc.vehicles.push_back(car_script(2, 1.0, 81.2, 2.4, 0.0, 10.0));
    return sc;
}

// Wall-mounted radar; a box van in the right lane hides a car in the left
// lane for the whole run (the overtaking geometry keeps the shadow on it).
inline ScenarioConfig occlusion_scenario(uint64_t seed = 104) {
    ScenarioConfig sc;
    sc.name = "occlusion";
    sc.duration = 12.0;
    sc.seed = seed;
    sc.radar.position = {3.0, 0.0, 5.1};
    sc.vehicles.push_back(truck_script(1, 1.0, 63.0, 14.5, 0.0, 12.0, 2.7, 8.0, 2.4));
    sc.vehicles.push_back(car_script(2, -1.0, 90.0, 20.0, 0.0, 12.0));
    return sc;
}

// Baseline-comparison suite: edge-lane traffic on both tunnel families.
inline std::vector<ScenarioConfig> standard_suite() {
    return {cars_scenario(), trucks_scenario(), congestion_scenario(), occlusion_scenario()};
}

// The same traffic with the radar mounted high on the tunnel wall, as in
// the public-tunnel deployment.
inline std::vector<ScenarioConfig> wall_mounted_suite() {
    auto suite = standard_suite();
    for (auto& sc : suite) sc.radar.position = {3.2, 0.0, 5.1};
    return suite;
}

// Mixed-traffic suite for the relocation statistic: regular lane-centered
// driving, car-dominated like real tunnel traffic.
inline std::vector<ScenarioConfig> mixed_traffic_suite() {
    auto second_cars = cars_scenario(205, 2.0 / 3.0);
    second_cars.vehicles[0].waypoints = {{0.0, 95.0, {}}, {12.0, 257.0, {}}};
    second_cars.vehicles[1].waypoints = {{0.0, 62.0, {}}, {12.0, 230.0, {}}};
    std::vector<ScenarioConfig> suite = {cars_scenario(201, 2.0 / 3.0), second_cars,
                                         congestion_scenario(203),
                                         trucks_scenario(202, 2.0 / 3.0)};
    for (auto& sc : suite) sc.duration = std::min(sc.duration, 8.0);
    return suite;
}

}  // namespace tunradar::testing
