// Vehicle detection on corrected frames: Doppler-weighted DBSCAN clustering
// followed by constant-velocity Kalman tracking with global-nearest-neighbor
// association and 3-hit / 5-miss track lifecycle rules.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "tunradar/hungarian.hpp"
#include "tunradar/tunnel_model.hpp"
#include "tunradar/types.hpp"

namespace tunradar {

// ---------------------------------------------------------------------------
// Clustering
// ---------------------------------------------------------------------------

struct ClusterConfig {
    double w1 = 1.0;   // lateral weight
    double w2 = 0.5;   // longitudinal weight
    double w3 = 4.0;   // Doppler weight
    double d_clu = 4.0;
    int min_cluster_size = 1;
};

// Doppler-augmented point distance: splits clusters of closely driving
// vehicles whose positions alone would merge.
inline double weighted_point_distance(const RadarPoint& a, const RadarPoint& b,
                                      const ClusterConfig& cfg) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dv = a.doppler - b.doppler;
    return std::sqrt(cfg.w1 * dx * dx + cfg.w2 * dy * dy + cfg.w3 * dv * dv);
}

struct Cluster {
    std::vector<int> members;  // indices into the input span
    Vec2 centroid;
    double mean_doppler = 0.0;
};

// Classic DBSCAN under the weighted distance. min_cluster_size acts as
// minPts (neighborhood count including the point itself); with the default
// of 1 every point is a core point and no point is discarded as noise.
inline std::vector<Cluster> cluster_frame(std::span<const RadarPoint> points,
                                          const ClusterConfig& cfg) {
    const int n = static_cast<int>(points.size());
    std::vector<Cluster> clusters;
    if (n == 0) return clusters;

    constexpr int kUnvisited = -2, kNoise = -1;
    std::vector<int> label(static_cast<size_t>(n), kUnvisited);

    const auto neighbors = [&](int idx) {
        std::vector<int> out;
        for (int k = 0; k < n; ++k) {
            if (weighted_point_distance(points[static_cast<size_t>(idx)],
                                        points[static_cast<size_t>(k)], cfg) <= cfg.d_clu)
                out.push_back(k);
        }
        return out;
    };

    int cluster_id = 0;
    for (int idx = 0; idx < n; ++idx) {
        if (label[static_cast<size_t>(idx)] != kUnvisited) continue;
        auto seeds = neighbors(idx);
        if (static_cast<int>(seeds.size()) < cfg.min_cluster_size) {
            label[static_cast<size_t>(idx)] = kNoise;
            continue;
        }
        const int id = cluster_id++;
        label[static_cast<size_t>(idx)] = id;
        std::deque<int> queue(seeds.begin(), seeds.end());
        while (!queue.empty()) {
            const int q = queue.front();
            queue.pop_front();
            if (label[static_cast<size_t>(q)] == kNoise) label[static_cast<size_t>(q)] = id;
            if (label[static_cast<size_t>(q)] != kUnvisited) continue;
            label[static_cast<size_t>(q)] = id;
            auto qn = neighbors(q);
            if (static_cast<int>(qn.size()) >= cfg.min_cluster_size)
                queue.insert(queue.end(), qn.begin(), qn.end());
        }
    }

    clusters.resize(static_cast<size_t>(cluster_id));
    for (int idx = 0; idx < n; ++idx) {
        const int id = label[static_cast<size_t>(idx)];
        if (id < 0) continue;  // noise (only possible with min_cluster_size > 1)
        clusters[static_cast<size_t>(id)].members.push_back(idx);
    }
    for (auto& c : clusters) {
        Vec2 sum;
        double vd = 0.0;
        for (int idx : c.members) {
            sum += points[static_cast<size_t>(idx)].position();
            vd += points[static_cast<size_t>(idx)].doppler;
        }
        const double count = static_cast<double>(c.members.size());
        c.centroid = sum / count;
        c.mean_doppler = vd / count;
    }
    return clusters;
}

// ---------------------------------------------------------------------------
// Kalman filter (constant velocity, position measurements)
// ---------------------------------------------------------------------------

struct TrackerConfig {
    double dt = 0.1;                      // radar frame interval
    double process_noise_intensity = 1.0;  // white-acceleration q [m^2/s^3]
    double sigma_lateral = 0.5;           // measurement noise
    double sigma_longitudinal = 1.0;
    double association_gate = 5.0;        // Euclidean gate on predicted position
    int confirm_hits = 3;
    int delete_misses = 5;
    double initial_velocity_sigma = 15.0;

    void validate() const {
        if (!(dt > 0.0)) throw ConfigError("tracker: dt must be > 0");
        if (!(sigma_lateral > 0.0 && sigma_longitudinal > 0.0))
            throw ConfigError("tracker: measurement noise must be > 0");
        if (!(process_noise_intensity > 0.0)) throw ConfigError("tracker: process noise must be > 0");
    }
};

// State vector (x, y, vx, vy); covariance kept symmetric PSD by a Joseph
// form update plus explicit symmetrization.
struct KalmanState {
    Eigen::Vector4d x = Eigen::Vector4d::Zero();
    Eigen::Matrix4d p = Eigen::Matrix4d::Identity();
    int last_update_frame = 0;

    static KalmanState from_detection(const Vec2& z, const TrackerConfig& cfg, int frame) {
        KalmanState s;
        s.x << z.x, z.y, 0.0, 0.0;
        s.p.setZero();
        s.p(0, 0) = cfg.sigma_lateral * cfg.sigma_lateral;
        s.p(1, 1) = cfg.sigma_longitudinal * cfg.sigma_longitudinal;
        s.p(2, 2) = s.p(3, 3) = cfg.initial_velocity_sigma * cfg.initial_velocity_sigma;
        s.last_update_frame = frame;
        return s;
    }

    Vec2 position() const { return {x(0), x(1)}; }
    Vec2 velocity() const { return {x(2), x(3)}; }

    void predict(const TrackerConfig& cfg) {
        const double dt = cfg.dt;
        Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
        f(0, 2) = dt;
        f(1, 3) = dt;
        const double q = cfg.process_noise_intensity;
        const double dt2 = dt * dt, dt3 = dt2 * dt, dt4 = dt3 * dt;
        Eigen::Matrix4d qm = Eigen::Matrix4d::Zero();
        qm(0, 0) = qm(1, 1) = q * dt4 / 4.0;
        qm(2, 2) = qm(3, 3) = q * dt2;
        qm(0, 2) = qm(2, 0) = q * dt3 / 2.0;
        qm(1, 3) = qm(3, 1) = q * dt3 / 2.0;
        x = f * x;
        p = f * p * f.transpose() + qm;
        p = 0.5 * (p + p.transpose());
    }

    void update(const Vec2& z, const TrackerConfig& cfg) {
        Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
        h(0, 0) = 1.0;
        h(1, 1) = 1.0;
        Eigen::Matrix2d r = Eigen::Matrix2d::Zero();
        r(0, 0) = cfg.sigma_lateral * cfg.sigma_lateral;
        r(1, 1) = cfg.sigma_longitudinal * cfg.sigma_longitudinal;

        const Eigen::Vector2d innovation = Eigen::Vector2d(z.x, z.y) - h * x;
        const Eigen::Matrix2d s = h * p * h.transpose() + r;
        const Eigen::Matrix<double, 4, 2> k = p * h.transpose() * s.inverse();
        x = x + k * innovation;
        const Eigen::Matrix4d ikh = Eigen::Matrix4d::Identity() - k * h;
        p = ikh * p * ikh.transpose() + k * r * k.transpose();
        p = 0.5 * (p + p.transpose());
    }
};

// ---------------------------------------------------------------------------
// Tracking
// ---------------------------------------------------------------------------

enum class TrackStatus { kTentative, kConfirmed, kDead };

struct Track {
    int id = 0;
    KalmanState state;
    TrackStatus status = TrackStatus::kTentative;
    int hit_streak = 0;
    int miss_streak = 0;
    int born_frame = 0;
    int confirmed_frame = -1;
    Vec2 first_confirmed_position;
    std::vector<std::pair<int, Vec2>> history;  // (frame, position) after each step
};

struct TrackOutput {
    int id = 0;
    Vec2 position;
    Vec2 velocity;
    bool updated_this_frame = false;
};

class Tracker {
public:
    explicit Tracker(TrackerConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    const TrackerConfig& config() const { return cfg_; }
    const std::vector<Track>& live_tracks() const { return tracks_; }
    const std::vector<Track>& finished_tracks() const { return graveyard_; }

    // One tracking cycle: predict, associate (optimal assignment under a
    // Euclidean gate), update, manage lifecycle. Returns confirmed tracks.
    std::vector<TrackOutput> step(int frame_index, std::span<const Vec2> detections) {
        for (auto& t : tracks_) t.state.predict(cfg_);

        const int n_tracks = static_cast<int>(tracks_.size());
        const int n_dets = static_cast<int>(detections.size());
        std::vector<int> track_to_det(static_cast<size_t>(n_tracks), -1);
        std::vector<char> det_used(static_cast<size_t>(n_dets), false);

        if (n_tracks > 0 && n_dets > 0) {
            std::vector<double> cost(static_cast<size_t>(n_tracks) * n_dets, 0.0);
            for (int r = 0; r < n_tracks; ++r) {
                for (int c = 0; c < n_dets; ++c) {
                    cost[static_cast<size_t>(r) * n_dets + c] =
                        distance(tracks_[static_cast<size_t>(r)].state.position(),
                                 detections[static_cast<size_t>(c)]);
                }
            }
            auto assign = solve_assignment(cost, n_tracks, n_dets);
            for (int r = 0; r < n_tracks; ++r) {
                const int c = assign[static_cast<size_t>(r)];
                if (c >= 0 && cost[static_cast<size_t>(r) * n_dets + c] <= cfg_.association_gate) {
                    track_to_det[static_cast<size_t>(r)] = c;
                    det_used[static_cast<size_t>(c)] = true;
                }
            }
        }

        for (int r = 0; r < n_tracks; ++r) {
            Track& t = tracks_[static_cast<size_t>(r)];
            const int c = track_to_det[static_cast<size_t>(r)];
            if (c >= 0) {
                t.state.update(detections[static_cast<size_t>(c)], cfg_);
                t.state.last_update_frame = frame_index;
                t.hit_streak += 1;
                t.miss_streak = 0;
                if (t.status == TrackStatus::kTentative && t.hit_streak >= cfg_.confirm_hits) {
                    t.status = TrackStatus::kConfirmed;
                    t.confirmed_frame = frame_index;
                    t.first_confirmed_position = t.state.position();
                }
            } else {
                t.miss_streak += 1;
                t.hit_streak = 0;
                if (t.miss_streak >= cfg_.delete_misses) t.status = TrackStatus::kDead;
            }
            t.history.emplace_back(frame_index, t.state.position());
        }

        for (int c = 0; c < n_dets; ++c) {
            if (det_used[static_cast<size_t>(c)]) continue;
            Track t;
            t.id = next_id_++;
            t.state = KalmanState::from_detection(detections[static_cast<size_t>(c)], cfg_, frame_index);
            t.status = TrackStatus::kTentative;
            t.hit_streak = 1;
            t.born_frame = frame_index;
            t.history.emplace_back(frame_index, t.state.position());
            tracks_.push_back(std::move(t));
        }

        std::vector<TrackOutput> out;
        for (auto& t : tracks_) {
            if (t.status != TrackStatus::kConfirmed) continue;
            out.push_back({t.id, t.state.position(), t.state.velocity(),
                           t.state.last_update_frame == frame_index});
        }

        // retire dead tracks
        for (auto it = tracks_.begin(); it != tracks_.end();) {
            if (it->status == TrackStatus::kDead) {
                graveyard_.push_back(std::move(*it));
                it = tracks_.erase(it);
            } else {
                ++it;
            }
        }
        return out;
    }

private:
    TrackerConfig cfg_;
    std::vector<Track> tracks_;
    std::vector<Track> graveyard_;
    int next_id_ = 1;
};

}  // namespace tunradar
