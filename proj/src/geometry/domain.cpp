#include "geoinv/geometry/domain.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace geoinv::geometry {

OuterBoundary OuterBoundary::disk(Vec2 center, double radius)
{
    if (!(radius > 0.0)) throw InvalidInput("outer disk radius must be positive");
    OuterBoundary b;
    b.center_ = center;
    b.radius_ = radius;
    return b;
}

OuterBoundary OuterBoundary::polygon(std::vector<Vec2> vertices)
{
    if (vertices.size() < 3) throw InvalidInput("polygon needs at least 3 vertices");
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = vertices[i];
        const Vec2& b = vertices[(i + 1) % n];
        const Vec2& c = vertices[(i + 2) % n];
        if (cross(b - a, c - b) <= 0.0)
            throw InvalidInput("polygon must be strictly convex and counter-clockwise");
    }
    OuterBoundary out;
    out.polygon_ = std::move(vertices);
    Vec2 c = Vec2::Zero();
    for (const auto& v : out.polygon_) c += v;
    out.center_ = c / static_cast<double>(n);
    out.radius_ = 0.0;
    for (const auto& v : out.polygon_) out.radius_ = std::max(out.radius_, (v - out.center_).norm());
    return out;
}

double OuterBoundary::ray_distance(const Vec2& origin, double theta) const
{
    const Vec2 d(std::cos(theta), std::sin(theta));
    if (is_disk()) {
        // |origin + t d - center| = radius, t > 0
        const Vec2 q = origin - center_;
        const double bq = q.dot(d);
        const double disc = bq * bq - (q.squaredNorm() - radius_ * radius_);
        return -bq + std::sqrt(std::max(disc, 0.0));
    }
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = polygon_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = polygon_[i];
        const Vec2 e = polygon_[(i + 1) % n] - a;
        const double den = cross(d, e);
        if (std::abs(den) < 1e-300) continue;
        const Vec2 w = a - origin;
        const double t = cross(w, e) / den;
        const double s = cross(w, d) / den;
        if (t > 0.0 && s >= -1e-14 && s <= 1.0 + 1e-14) best = std::min(best, t);
    }
    return best;
}

Vec2 OuterBoundary::point_at_angle(double theta) const
{
    if (is_disk()) return center_ + radius_ * Vec2(std::cos(theta), std::sin(theta));
    return center_ + ray_distance(center_, theta) * Vec2(std::cos(theta), std::sin(theta));
}

double OuterBoundary::angle_of(const Vec2& p) const
{
    return wrap_angle(std::atan2(p.y() - center_.y(), p.x() - center_.x()));
}

double OuterBoundary::distance_to_boundary(const Vec2& p) const
{
    if (is_disk()) return radius_ - (p - center_).norm();
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = polygon_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = polygon_[i];
        const Vec2 e = polygon_[(i + 1) % n] - a;
        // signed distance to the supporting line, positive inside
        best = std::min(best, cross(e, p - a) / e.norm());
    }
    return best;
}

bool OuterBoundary::contains(const Vec2& p) const { return distance_to_boundary(p) > 0.0; }

double OuterBoundary::area() const
{
    if (is_disk()) return kPi * radius_ * radius_;
    double a = 0.0;
    const std::size_t n = polygon_.size();
    for (std::size_t i = 0; i < n; ++i) a += cross(polygon_[i], polygon_[(i + 1) % n]);
    return 0.5 * a;
}

double OuterBoundary::perimeter() const
{
    if (is_disk()) return kTwoPi * radius_;
    double p = 0.0;
    const std::size_t n = polygon_.size();
    for (std::size_t i = 0; i < n; ++i) p += (polygon_[(i + 1) % n] - polygon_[i]).norm();
    return p;
}

bool AngularRange::contains(double theta) const
{
    if (is_full()) return true;
    const double t = wrap_angle(theta - start);
    return t <= end - start;
}

void Domain::validate() const
{
    if (!(clearance >= 0.0)) throw InvalidInput("clearance must be non-negative");
    if (!(gamma.end > gamma.start)) throw InvalidInput("gamma: end angle must exceed start angle");
    if (safety) {
        if (!(safety->radius > 0.0)) throw InvalidInput("safety region radius must be positive");
        const double room = outer.distance_to_boundary(safety->center) - safety->radius;
        if (room < clearance) {
            std::ostringstream msg;
            msg << "safety region D* is too close to the outer boundary (gap " << room
                << " < clearance " << clearance << ")";
            throw InvalidInput(msg.str());
        }
    }
}

}  // namespace geoinv::geometry
