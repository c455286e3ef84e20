#pragma once

#include "geoinv/fem/solver.hpp"

#include <iosfwd>

namespace geoinv::observation {

using fem::Vector;

/// Variationally recovered normal derivatives (dy/dn, dz/dn) on one boundary
/// part, with n the outward normal of Omega \ closure(D).
struct BoundaryTrace {
    /// Ordered node chain along the part (closed chains do not repeat the first node).
    std::vector<int> nodes;
    bool closed = false;
    std::vector<Vec2> points;
    /// Arc-length parameter of each node, starting at 0.
    std::vector<double> arc;
    Vector alpha;
    Vector beta;
    /// Lumped lengths (half the adjacent edge lengths); they sum to the part length.
    Vector weights;

    std::size_t size() const { return nodes.size(); }
    std::size_t num_edges() const { return closed ? nodes.size() : nodes.size() - 1; }
    double edge_length(std::size_t e) const;
    double length() const { return weights.sum(); }
    /// Integral of the product of two nodal P1 functions along the part (consistent mass).
    double inner(const Vector& f, const Vector& g) const;
};

/// Consistent-flux recovery on GAMMA: solves the boundary mass system of the
/// whole outer loop against the residual of the discrete equations, then
/// restricts to the GAMMA chain. Throws InvalidInput when GAMMA is empty.
BoundaryTrace normal_trace(const fem::FieldPair& solution, const geometry::TriangleMesh& mesh);

/// The same recovery on the obstacle loop.
BoundaryTrace obstacle_trace(const fem::FieldPair& solution, const geometry::TriangleMesh& mesh);

/// `onto` with alpha, beta replaced by the piecewise-linear interpolant of
/// `source` at the nearest point of its polyline. Lets traces from two meshes
/// of the same boundary be compared.
BoundaryTrace resample(const BoundaryTrace& source, const BoundaryTrace& onto);

/// Internal observation region: a disk, or an annulus when inner_radius > 0.
struct Omega {
    Vec2 center{0.0, 0.0};
    double radius = 0.0;
    double inner_radius = 0.0;

    Omega() = default;
    Omega(const geometry::Disk& d) : center(d.center), radius(d.radius) {}  // NOLINT: disks are the common case
    Omega(Vec2 c, double r, double r_in = 0.0) : center(c), radius(r), inner_radius(r_in) {}

    bool is_annulus() const { return inner_radius > 0.0; }
    bool contains(const Vec2& p) const
    {
        const double d = (p - center).norm();
        return d < radius && d > inner_radius;
    }
    double area() const { return kPi * (radius * radius - inner_radius * inner_radius); }
};

/// y sampled (P1 interpolation) on a grid of omega.
struct InternalTrace {
    std::vector<Vec2> points;
    Vector values;
    /// Equal quadrature weights summing to the area of omega.
    Vector weights;

    std::size_t size() const { return points.size(); }
};

/// Sample points of a `resolution` x `resolution` grid over the bounding box of omega, kept inside omega.
std::vector<Vec2> omega_grid(const Omega& omega, int resolution);

/// Located sample point: triangle and barycentric weights.
struct PointLocation {
    std::size_t triangle;
    std::array<double, 3> weights;
};
/// Throws InvalidInput naming the point when it is outside the mesh.
PointLocation locate(const geometry::TriangleMesh& mesh, const Vec2& p);

/// Throws InvalidInput when omega is not compactly inside Omega \ closure(D*).
/// For an annulus, D* must sit either inside the hole or outside the outer circle.
void check_omega(const Omega& omega, const geometry::Domain& domain);

InternalTrace internal_trace(const fem::FieldPair& solution, const geometry::TriangleMesh& mesh,
                             const Omega& omega, int resolution, const geometry::Domain& domain);

enum class DistanceMode { L2, HminusSurrogate };

/// L2: weighted l2 of (alpha, beta) differences. HminusSurrogate: L2 of the
/// arc-length antiderivative of the difference (a smoothing proxy, not the true norm).
double trace_distance(const BoundaryTrace& t0, const BoundaryTrace& t1, DistanceMode mode);
/// Internal traces: the surrogate integrates along the sample order.
double trace_distance(const InternalTrace& t0, const InternalTrace& t1, DistanceMode mode);

/// "arc_param,alpha,beta,weight"
void write_trace_csv(std::ostream& os, const BoundaryTrace& trace);
/// "x,y,value"
void write_trace_csv(std::ostream& os, const InternalTrace& trace);

}  // namespace geoinv::observation
