// Shared point / frame / ground-truth carriers used across the simulator,
// correction, and detection stages.
#pragma once

#include <string>
#include <vector>

#include "tunradar/geometry.hpp"

namespace tunradar {

// One radar detection in top view: lateral x, longitudinal y (boresight), Doppler.
struct RadarPoint {
    double x = 0.0;
    double y = 0.0;
    double doppler = 0.0;

    Vec2 position() const { return {x, y}; }
};

enum class PathType { kDirect, kGhost };

// Where a simulated point came from. Every simulator point carries this;
// points read back from logs keep it so closed-loop tests can use it.
struct Provenance {
    int vehicle_id = -1;
    PathType path = PathType::kDirect;
    int roof_segment = 0;  // 1-based, 0 = n/a
    int path_segment = 0;  // 1-based, 0 = n/a
    int facet = 0;
};

struct SimPoint {
    RadarPoint point;
    Provenance provenance;
};

struct SimFrame {
    int index = 0;
    double timestamp = 0.0;
    std::vector<SimPoint> points;
};

struct TruthVehicle {
    int id = 0;
    Vec2 position;       // footprint center, top view
    Vec2 velocity;       // m/s
    Vec2 heading;        // unit travel direction
    double length = 0.0;
    double width = 0.0;
    double roof_height = 0.0;
    std::string type;
};

struct TruthFrame {
    int index = 0;
    double timestamp = 0.0;
    std::vector<TruthVehicle> vehicles;
};

enum class CorrectionStatus { kNormal, kCorrected, kUncorrectable };

struct CorrectedPoint {
    RadarPoint point;           // final position (Doppler carried over)
    RadarPoint raw;             // as detected
    Provenance provenance;      // carried through from the input
    CorrectionStatus status = CorrectionStatus::kNormal;
    int roof_segment = 0;       // selected reflection segment, 0 = n/a
    int path_segment = 0;
};

struct CorrectedFrame {
    int index = 0;
    double timestamp = 0.0;
    std::vector<CorrectedPoint> points;
};

}  // namespace tunradar
