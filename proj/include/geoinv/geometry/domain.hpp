#pragma once

#include "geoinv/core.hpp"

#include <optional>
#include <vector>

namespace geoinv::geometry {

struct Disk {
    Vec2 center{0.0, 0.0};
    double radius = 1.0;

    bool contains(const Vec2& p) const { return (p - center).norm() < radius; }
};

/// The outer boundary of Omega: a disk or a convex polygon (counter-clockwise vertices).
class OuterBoundary {
public:
    static OuterBoundary disk(Vec2 center, double radius);
    static OuterBoundary polygon(std::vector<Vec2> vertices);
    static OuterBoundary unit_disk() { return disk({0.0, 0.0}, 1.0); }

    bool is_disk() const { return polygon_.empty(); }
    /// Disk center or polygon vertex centroid; the reference point for boundary angles.
    const Vec2& center() const { return center_; }
    double radius() const { return radius_; }
    const std::vector<Vec2>& vertices() const { return polygon_; }

    /// Distance from an interior point `origin` to the boundary along direction `theta`.
    double ray_distance(const Vec2& origin, double theta) const;
    /// Boundary point seen from center() at polar angle `theta`.
    Vec2 point_at_angle(double theta) const;
    /// Polar angle of `p` about center(), in [0, 2*pi).
    double angle_of(const Vec2& p) const;
    /// Distance from an interior point to the boundary.
    double distance_to_boundary(const Vec2& p) const;
    bool contains(const Vec2& p) const;

    double area() const;
    double perimeter() const;

private:
    Vec2 center_{0.0, 0.0};
    double radius_ = 1.0;
    std::vector<Vec2> polygon_;
};

/// Observation arc, as an angular interval [start, end] about the outer boundary center.
struct AngularRange {
    double start = 0.0;
    double end = kTwoPi;

    static AngularRange full() { return {}; }
    bool is_full() const { return end - start >= kTwoPi - 1e-12; }
    bool contains(double theta) const;
    double length() const { return is_full() ? kTwoPi : end - start; }
};

/// Omega, the safety region D* and the observation arc gamma.
struct Domain {
    OuterBoundary outer = OuterBoundary::unit_disk();
    std::optional<Disk> safety = Disk{{0.0, 0.0}, 0.75};
    double clearance = 0.05;
    AngularRange gamma = AngularRange::full();

    /// Throws InvalidInput when D* does not sit inside Omega with the required clearance.
    void validate() const;
};

}  // namespace geoinv::geometry
