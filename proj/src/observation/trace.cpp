#include "geoinv/observation/trace.hpp"

#include "geoinv/io/csv.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <limits>
#include <ostream>

namespace geoinv::observation {

using geometry::BoundaryTag;
using geometry::TriangleMesh;

double BoundaryTrace::edge_length(std::size_t e) const
{
    return (points[(e + 1) % points.size()] - points[e]).norm();
}

double BoundaryTrace::inner(const Vector& f, const Vector& g) const
{
    if (f.size() != static_cast<Eigen::Index>(size()) || g.size() != f.size())
        throw InvalidInput("trace inner product: length mismatch");
    double s = 0.0;
    for (std::size_t e = 0; e < num_edges(); ++e) {
        const auto i = static_cast<Eigen::Index>(e), j = static_cast<Eigen::Index>((e + 1) % size());
        s += edge_length(e) / 6.0 * (2.0 * f[i] * g[i] + f[i] * g[j] + f[j] * g[i] + 2.0 * f[j] * g[j]);
    }
    return s;
}

namespace {

/// Nodal fluxes of both fields on a closed boundary loop.
struct LoopFlux {
    std::vector<int> nodes;
    Vector gy, gz;
};

LoopFlux loop_flux(const fem::FieldPair& sol, const TriangleMesh& mesh, std::initializer_list<BoundaryTag> tags)
{
    const auto [nodes, closed] = mesh.chain(tags);
    if (nodes.empty()) throw InvalidInput("boundary part is empty");
    if (!closed) throw InvalidInput("flux recovery needs a closed loop");

    const fem::SparseMatrix A = fem::coupled_operator(mesh, sol.coeffs, sol.transport.get());
    const Vector x = sol.interleaved();
    const Vector residual = A * x - (sol.load.size() ? sol.load : Vector::Zero(x.size()));

    const auto n = static_cast<Eigen::Index>(nodes.size());
    Vector ry(n), rz(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        ry[k] = residual[fem::dof(nodes[static_cast<std::size_t>(k)], 0)];
        rz[k] = residual[fem::dof(nodes[static_cast<std::size_t>(k)], 1)];
    }
    Eigen::SimplicialLDLT<fem::SparseMatrix> mass(fem::boundary_mass(mesh, nodes, true));
    if (mass.info() != Eigen::Success) throw NumericalError("boundary mass factorization failed");
    return {nodes, mass.solve(ry), mass.solve(rz)};
}

BoundaryTrace make_trace(const TriangleMesh& mesh, const LoopFlux& flux, const std::vector<int>& part, bool closed)
{
    std::vector<int> pos(mesh.num_vertices(), -1);
    for (std::size_t k = 0; k < flux.nodes.size(); ++k) pos[flux.nodes[k]] = static_cast<int>(k);

    BoundaryTrace t;
    t.nodes = part;
    t.closed = closed;
    const auto n = static_cast<Eigen::Index>(part.size());
    t.alpha.resize(n);
    t.beta.resize(n);
    t.weights = Vector::Zero(n);
    for (std::size_t k = 0; k < part.size(); ++k) {
        t.points.push_back(mesh.vertices[part[k]]);
        t.alpha[static_cast<Eigen::Index>(k)] = flux.gy[pos[part[k]]];
        t.beta[static_cast<Eigen::Index>(k)] = flux.gz[pos[part[k]]];
    }
    t.arc.assign(part.size(), 0.0);
    for (std::size_t e = 0; e < t.num_edges(); ++e) {
        const double len = t.edge_length(e);
        if (e + 1 < part.size()) t.arc[e + 1] = t.arc[e] + len;
        t.weights[static_cast<Eigen::Index>(e)] += 0.5 * len;
        t.weights[static_cast<Eigen::Index>((e + 1) % part.size())] += 0.5 * len;
    }
    return t;
}

}  // namespace

BoundaryTrace normal_trace(const fem::FieldPair& solution, const TriangleMesh& mesh)
{
    const auto [gamma, closed] = mesh.chain({BoundaryTag::Gamma});
    if (gamma.size() < 2) throw InvalidInput("normal_trace: observation arc is empty");
    const LoopFlux flux = loop_flux(solution, mesh, {BoundaryTag::Outer, BoundaryTag::Gamma});
    return make_trace(mesh, flux, gamma, closed);
}

BoundaryTrace obstacle_trace(const fem::FieldPair& solution, const TriangleMesh& mesh)
{
    const LoopFlux flux = loop_flux(solution, mesh, {BoundaryTag::Obstacle});
    return make_trace(mesh, flux, flux.nodes, true);
}

std::vector<Vec2> omega_grid(const Omega& omega, int resolution)
{
    if (resolution < 1) throw InvalidInput("omega_grid: resolution must be positive");
    std::vector<Vec2> pts;
    const double step = 2.0 * omega.radius / resolution;
    for (int i = 0; i < resolution; ++i)
        for (int j = 0; j < resolution; ++j) {
            const Vec2 p = omega.center + Vec2(-omega.radius + (i + 0.5) * step, -omega.radius + (j + 0.5) * step);
            if (omega.contains(p)) pts.push_back(p);
        }
    return pts;
}

PointLocation locate(const TriangleMesh& mesh, const Vec2& p)
{
    constexpr double tol = 1e-12;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Vec2 &a = mesh.vertices[tri[0]], &b = mesh.vertices[tri[1]], &c = mesh.vertices[tri[2]];
        if (p.x() < std::min({a.x(), b.x(), c.x()}) - tol || p.x() > std::max({a.x(), b.x(), c.x()}) + tol ||
            p.y() < std::min({a.y(), b.y(), c.y()}) - tol || p.y() > std::max({a.y(), b.y(), c.y()}) + tol)
            continue;
        const double area = cross(b - a, c - a);
        const double l1 = cross(c - b, p - b) / area;
        const double l2 = cross(a - c, p - c) / area;
        const double l3 = 1.0 - l1 - l2;
        if (l1 >= -tol && l2 >= -tol && l3 >= -tol) return {t, {l1, l2, l3}};
    }
    throw InvalidInput("sample point (" + io::format_double(p.x()) + ", " + io::format_double(p.y()) +
                       ") is outside the mesh");
}

void check_omega(const Omega& omega, const geometry::Domain& domain)
{
    if (!(omega.radius > 0.0)) throw InvalidInput("omega radius must be positive");
    if (!(omega.inner_radius >= 0.0 && omega.inner_radius < omega.radius))
        throw InvalidInput("omega inner radius must lie in [0, radius)");
    if (domain.outer.distance_to_boundary(omega.center) <= omega.radius || !domain.outer.contains(omega.center))
        throw InvalidInput("omega must lie compactly inside Omega");
    if (!domain.safety) return;
    const double d = (omega.center - domain.safety->center).norm();
    const bool outside = d - omega.radius > domain.safety->radius;
    const bool in_hole = omega.is_annulus() && d + domain.safety->radius < omega.inner_radius;
    if (!outside && !in_hole) throw InvalidInput("omega must stay outside the closure of D*");
}

InternalTrace internal_trace(const fem::FieldPair& solution, const TriangleMesh& mesh, const Omega& omega,
                             int resolution, const geometry::Domain& domain)
{
    check_omega(omega, domain);
    InternalTrace t;
    t.points = omega_grid(omega, resolution);
    const auto n = static_cast<Eigen::Index>(t.points.size());
    t.values.resize(n);
    if (n == 0) throw InvalidInput("omega grid has no samples; raise the resolution");
    t.weights = Vector::Constant(n, omega.area() / static_cast<double>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto loc = locate(mesh, t.points[static_cast<std::size_t>(k)]);
        const auto& tri = mesh.triangles[loc.triangle];
        t.values[k] = loc.weights[0] * solution.y[tri[0]] + loc.weights[1] * solution.y[tri[1]] +
                      loc.weights[2] * solution.y[tri[2]];
    }
    return t;
}

namespace {

/// Trapezoid antiderivative along the node sequence with the given spacings.
Vector antiderivative(const Vector& f, const std::vector<double>& spacing)
{
    Vector F = Vector::Zero(f.size());
    for (Eigen::Index k = 1; k < f.size(); ++k)
        F[k] = F[k - 1] + 0.5 * spacing[static_cast<std::size_t>(k - 1)] * (f[k - 1] + f[k]);
    return F;
}

double weighted_norm(const Vector& w, const Vector& a, const Vector& b)
{
    return std::sqrt((w.array() * (a.array().square() + b.array().square())).sum());
}

}  // namespace

BoundaryTrace resample(const BoundaryTrace& source, const BoundaryTrace& onto)
{
    if (source.num_edges() == 0) throw InvalidInput("resample: source trace has no edges");
    BoundaryTrace out = onto;
    for (std::size_t k = 0; k < onto.size(); ++k) {
        const Vec2& p = onto.points[k];
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        double arg_t = 0.0;
        for (std::size_t e = 0; e < source.num_edges(); ++e) {
            const Vec2& a = source.points[e];
            const Vec2& b = source.points[(e + 1) % source.size()];
            const Vec2 d = b - a;
            const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
            const double dist = (p - (a + t * d)).norm();
            if (dist < best) {
                best = dist;
                arg = e;
                arg_t = t;
            }
        }
        const auto i = static_cast<Eigen::Index>(arg);
        const auto j = static_cast<Eigen::Index>((arg + 1) % source.size());
        const auto kk = static_cast<Eigen::Index>(k);
        out.alpha[kk] = (1.0 - arg_t) * source.alpha[i] + arg_t * source.alpha[j];
        out.beta[kk] = (1.0 - arg_t) * source.beta[i] + arg_t * source.beta[j];
    }
    return out;
}

double trace_distance(const BoundaryTrace& t0, const BoundaryTrace& t1, DistanceMode mode)
{
    if (t0.nodes.size() != t1.nodes.size() || t0.closed != t1.closed)
        throw InvalidInput("trace_distance: traces live on different supports");
    for (std::size_t k = 0; k < t0.points.size(); ++k)
        if ((t0.points[k] - t1.points[k]).norm() > 1e-12)
            throw InvalidInput("trace_distance: traces live on different supports");
    const Vector da = t1.alpha - t0.alpha, db = t1.beta - t0.beta;
    if (mode == DistanceMode::L2) return weighted_norm(t0.weights, da, db);
    std::vector<double> spacing(t0.size() - 1);
    for (std::size_t e = 0; e + 1 < t0.size(); ++e) spacing[e] = t0.edge_length(e);
    return weighted_norm(t0.weights, antiderivative(da, spacing), antiderivative(db, spacing));
}

double trace_distance(const InternalTrace& t0, const InternalTrace& t1, DistanceMode mode)
{
    if (t0.points.size() != t1.points.size()) throw InvalidInput("trace_distance: traces live on different supports");
    for (std::size_t k = 0; k < t0.points.size(); ++k)
        if ((t0.points[k] - t1.points[k]).norm() > 1e-12)
            throw InvalidInput("trace_distance: traces live on different supports");
    const Vector d = t1.values - t0.values;
    const Vector zero = Vector::Zero(d.size());
    if (mode == DistanceMode::L2) return weighted_norm(t0.weights, d, zero);
    std::vector<double> spacing(t0.size() > 0 ? t0.size() - 1 : 0);
    for (std::size_t k = 0; k < spacing.size(); ++k) spacing[k] = (t0.points[k + 1] - t0.points[k]).norm();
    return weighted_norm(t0.weights, antiderivative(d, spacing), zero);
}

void write_trace_csv(std::ostream& os, const BoundaryTrace& t)
{
    io::CsvWriter csv(os, {"arc_param", "alpha", "beta", "weight"});
    for (std::size_t k = 0; k < t.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        csv.row(t.arc[k], t.alpha[i], t.beta[i], t.weights[i]);
    }
}

void write_trace_csv(std::ostream& os, const InternalTrace& t)
{
    io::CsvWriter csv(os, {"x", "y", "value"});
    for (std::size_t k = 0; k < t.size(); ++k) csv.row(t.points[k].x(), t.points[k].y(), t.values[static_cast<Eigen::Index>(k)]);
}

}  // namespace geoinv::observation
