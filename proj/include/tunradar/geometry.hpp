// Small 2D/3D vector types and the geometric primitives the rest of the
// library is built on. Everything here is value-semantic and allocation-free.
#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

namespace tunradar {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }
inline Vec2 normalized(const Vec2& v) { const double n = norm(v); return {v.x / n, v.y / n}; }

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec2 top_view() const { return {x, y}; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
inline Vec3 normalized(const Vec3& v) { const double n = norm(v); return {v.x / n, v.y / n, v.z / n}; }

// Plane through `point` with unit `normal`.
struct Plane3 {
    Vec3 point;
    Vec3 normal;

    double signed_distance(const Vec3& p) const { return dot(p - point, normal); }
};

// Exact specular image of a point: involutive, distance-preserving.
inline Vec3 mirror_point_across_plane(const Vec3& p, const Plane3& plane) {
    const double d = plane.signed_distance(p);
    return p - 2.0 * d * plane.normal;
}

// Mirror of a direction/velocity vector (linear part of the reflection).
inline Vec3 mirror_vector_across_plane(const Vec3& v, const Vec3& unit_normal) {
    return v - 2.0 * dot(v, unit_normal) * unit_normal;
}

struct SegmentPlaneHit {
    Vec3 point;
    double t;  // parameter along a->b, in [0,1] when the segment crosses
};

// Intersection of segment a->b with a plane; nullopt when parallel or outside [0,1].
inline std::optional<SegmentPlaneHit> intersect_segment_plane(const Vec3& a, const Vec3& b,
                                                              const Plane3& plane) {
    const Vec3 ab = b - a;
    const double denom = dot(ab, plane.normal);
    if (std::abs(denom) < 1e-15) return std::nullopt;
    const double t = dot(plane.point - a, plane.normal) / denom;
    if (t < 0.0 || t > 1.0) return std::nullopt;
    return SegmentPlaneHit{a + t * ab, t};
}

inline bool segments_intersect_2d(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
    const auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
        const double v = cross(b - a, c - a);
        if (v > 1e-12) return 1;
        if (v < -1e-12) return -1;
        return 0;
    };
    const int o1 = orient(p1, p2, q1);
    const int o2 = orient(p1, p2, q2);
    const int o3 = orient(q1, q2, p1);
    const int o4 = orient(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;

    const auto on_segment = [](const Vec2& a, const Vec2& b, const Vec2& c) {
        return std::min(a.x, b.x) - 1e-12 <= c.x && c.x <= std::max(a.x, b.x) + 1e-12 &&
               std::min(a.y, b.y) - 1e-12 <= c.y && c.y <= std::max(a.y, b.y) + 1e-12;
    };
    if (o1 == 0 && on_segment(p1, p2, q1)) return true;
    if (o2 == 0 && on_segment(p1, p2, q2)) return true;
    if (o3 == 0 && on_segment(q1, q2, p1)) return true;
    if (o4 == 0 && on_segment(q1, q2, p2)) return true;
    return false;
}

// Point-in-convex-polygon (vertices in consistent winding order).
inline bool point_in_convex_polygon(const Vec2& p, const Vec2* verts, int n) {
    int sign = 0;
    for (int i = 0; i < n; ++i) {
        const Vec2& a = verts[i];
        const Vec2& b = verts[(i + 1) % n];
        const double c = cross(b - a, p - a);
        if (std::abs(c) < 1e-12) continue;
        const int s = c > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return true;
}

// Does segment a->b touch the convex quad (any containment or edge crossing)?
inline bool segment_intersects_convex_quad(const Vec2& a, const Vec2& b,
                                           const std::array<Vec2, 4>& quad) {
    if (point_in_convex_polygon(a, quad.data(), 4)) return true;
    if (point_in_convex_polygon(b, quad.data(), 4)) return true;
    for (int i = 0; i < 4; ++i) {
        if (segments_intersect_2d(a, b, quad[i], quad[(i + 1) % 4])) return true;
    }
    return false;
}

// Dense polynomial a0 + a1 u + a2 u^2 + ... with derivative evaluation.
class Polynomial {
public:
    Polynomial() : coeffs_{0.0} {}
    explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.empty()) coeffs_.push_back(0.0);
    }

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<double>& coefficients() const { return coeffs_; }

    double operator()(double u) const {
        double acc = 0.0;
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * u + *it;
        return acc;
    }

    double derivative(double u) const {
        double acc = 0.0;
        for (int k = degree(); k >= 1; --k) acc = acc * u + k * coeffs_[static_cast<size_t>(k)];
        return acc;
    }

    double second_derivative(double u) const {
        double acc = 0.0;
        for (int k = degree(); k >= 2; --k)
            acc = acc * u + static_cast<double>(k) * (k - 1) * coeffs_[static_cast<size_t>(k)];
        return acc;
    }

private:
    std::vector<double> coeffs_;
};

}  // namespace tunradar
