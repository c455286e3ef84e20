#include "geoinv/shape_gradient/sensitivity.hpp"

#include "geoinv/io/csv.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace geoinv::shape_gradient {

using geometry::TriangleMesh;

NormalWeight normal_component(const geometry::DeformationField& mu)
{
    return [mu](const Vec2& x, const Vec2& n) { return mu(x).dot(n); };
}

NormalWeight radial_mode(const Vec2& center, std::size_t index)
{
    return [center, index](const Vec2& x, const Vec2& n) {
        const Vec2 d = x - center;
        const double r = d.norm();
        return geometry::trig_basis(index, std::atan2(d.y(), d.x())) * d.dot(n) / r;
    };
}

namespace {

Vec2 edge_normal(const Vec2& a, const Vec2& b)
{
    const Vec2 d = b - a;
    return Vec2(d.y(), -d.x()) / d.norm();
}

double flux_norm(const BoundaryTrace& t) { return std::sqrt(t.inner(t.alpha, t.alpha) + t.inner(t.beta, t.beta)); }

void require_same_loop(const BoundaryTrace& a, const BoundaryTrace& b)
{
    if (a.nodes != b.nodes) throw InvalidInput("obstacle traces come from different boundary loops");
}

}  // namespace

double obstacle_flux_integral(const TriangleMesh& mesh, const BoundaryTrace& fwd, const BoundaryTrace& adj,
                              const NormalWeight& weight)
{
    require_same_loop(fwd, adj);
    static const double gx[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
    static const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    double total = 0.0;
    for (std::size_t e = 0; e < fwd.num_edges(); ++e) {
        const auto i = static_cast<Eigen::Index>(e);
        const auto j = static_cast<Eigen::Index>((e + 1) % fwd.size());
        const Vec2& a = mesh.vertices[fwd.nodes[static_cast<std::size_t>(i)]];
        const Vec2& b = mesh.vertices[fwd.nodes[static_cast<std::size_t>(j)]];
        const Vec2 n = edge_normal(a, b);
        const double len = (b - a).norm();
        for (int q = 0; q < 3; ++q) {
            const double s = gx[q];
            const Vec2 x = (1.0 - s) * a + s * b;
            auto lerp = [s, i, j](const Vector& v) { return (1.0 - s) * v[i] + s * v[j]; };
            const double prod = lerp(fwd.alpha) * lerp(adj.alpha) + lerp(fwd.beta) * lerp(adj.beta);
            total += gw[q] * len * weight(x, n) * prod;
        }
    }
    return total;
}

FieldPair solve_shape_derivative(const TriangleMesh& mesh, const fem::CoefficientSet& coeffs, const FieldPair& forward,
                                 const geometry::DeformationField& mu)
{
    const BoundaryTrace g = observation::obstacle_trace(forward, mesh);
    Vector bv = Vector::Zero(static_cast<Eigen::Index>(2 * mesh.num_vertices()));
    const std::size_t n = g.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2& prev = g.points[(k + n - 1) % n];
        const Vec2& here = g.points[k];
        const Vec2& next = g.points[(k + 1) % n];
        const Vec2 normal = (edge_normal(prev, here) + edge_normal(here, next)).normalized();
        const double speed = mu(here).dot(normal);
        const auto kk = static_cast<Eigen::Index>(k);
        bv[fem::dof(g.nodes[k], 0)] = -speed * g.alpha[kk];
        bv[fem::dof(g.nodes[k], 1)] = -speed * g.beta[kk];
    }
    return fem::solve_dirichlet(mesh, coeffs, bv, Vector::Zero(bv.size()));
}

std::vector<TestPair> gamma_test_pairs(const geometry::Domain& domain, std::size_t modes, Channels channels)
{
    std::vector<TestPair> out;
    const geometry::OuterBoundary outer = domain.outer;
    const geometry::AngularRange gamma = domain.gamma;
    auto param = [outer, gamma](const Vec2& x) {
        const double th = outer.angle_of(x);
        if (gamma.is_full()) return th;
        return kTwoPi * wrap_angle(th - gamma.start) / gamma.length();
    };
    auto zero = [](const Vec2&) { return 0.0; };
    for (std::size_t k = 0; k < modes; ++k) {
        auto mode = [param, k](const Vec2& x) { return geometry::trig_basis(k, param(x)); };
        if (channels != Channels::Beta) out.push_back({"eta:" + basis_label(k), mode, zero});
        if (channels != Channels::Alpha) out.push_back({"theta:" + basis_label(k), zero, mode});
    }
    return out;
}

double gamma_projection(const BoundaryTrace& trace, const TestPair& test)
{
    Vector eta(static_cast<Eigen::Index>(trace.size())), theta(eta.size());
    for (std::size_t k = 0; k < trace.size(); ++k) {
        eta[static_cast<Eigen::Index>(k)] = test.eta(trace.points[k]);
        theta[static_cast<Eigen::Index>(k)] = test.theta(trace.points[k]);
    }
    return trace.inner(trace.alpha, eta) + trace.inner(trace.beta, theta);
}

namespace {

Vector gamma_boundary_values(const TriangleMesh& mesh, const TestPair& test)
{
    Vector bv = Vector::Zero(static_cast<Eigen::Index>(2 * mesh.num_vertices()));
    const auto gamma = mesh.tagged_mask({geometry::BoundaryTag::Gamma});
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        if (!gamma[v]) continue;
        bv[fem::dof(static_cast<int>(v), 0)] = test.eta(mesh.vertices[v]);
        bv[fem::dof(static_cast<int>(v), 1)] = test.theta(mesh.vertices[v]);
    }
    return bv;
}

}  // namespace

std::vector<IdentityRow> adjoint_identity_check(const TriangleMesh& mesh, const fem::CoefficientSet& coeffs,
                                                const fem::BoundaryData& data, const geometry::DeformationField& mu,
                                                const TestPair& test, const std::vector<double>& sigma_grid)
{
    const fem::CoupledSolver solver(mesh, coeffs);
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(2 * mesh.num_vertices()));
    const FieldPair forward = solver.solve(fem::outer_dirichlet_values(mesh, data), zero);
    const FieldPair adjoint = solver.solve_adjoint(gamma_boundary_values(mesh, test), zero);
    const double rhs = -obstacle_flux_integral(mesh, observation::obstacle_trace(forward, mesh),
                                               observation::obstacle_trace(adjoint, mesh), normal_component(mu));
    const double p0 = gamma_projection(observation::normal_trace(forward, mesh), test);

    std::vector<IdentityRow> rows;
    for (double sigma : sigma_grid) {
        double lhs = 0.0;
        if (sigma != 0.0) {
            const TriangleMesh deformed = geometry::apply_deformation(mesh, mu, sigma);
            const FieldPair fs = fem::solve_forward(deformed, coeffs, data);
            lhs = gamma_projection(observation::normal_trace(fs, deformed), test) - p0;
        }
        rows.push_back({sigma, lhs, sigma * rhs, lhs - sigma * rhs});
    }
    return rows;
}

std::string basis_label(std::size_t index)
{
    if (index == 0) return "1";
    const std::size_t m = (index + 1) / 2;
    const std::string arg = m == 1 ? "t" : std::to_string(m) + "t";
    return (index % 2 == 1 ? "cos(" : "sin(") + arg + ")";
}

SensitivityMatrix sensitivity_matrix(const TriangleMesh& mesh, const fem::CoefficientSet& coeffs,
                                     const FieldPair& forward, const geometry::ObstacleShape& obstacle, std::size_t p,
                                     const std::vector<TestPair>& tests)
{
    if (p == 0) throw InvalidInput("sensitivity_matrix: basis is empty");
    if (tests.empty()) throw InvalidInput("sensitivity_matrix: no test functions");
    SensitivityMatrix k;
    k.obstacle = obstacle;
    k.entries.resize(static_cast<Eigen::Index>(tests.size()), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i) k.basis_labels.push_back(basis_label(i));

    const BoundaryTrace fwd = observation::obstacle_trace(forward, mesh);
    const fem::CoupledSolver solver(mesh, coeffs);
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(2 * mesh.num_vertices()));
    for (std::size_t j = 0; j < tests.size(); ++j) {
        k.testfn_labels.push_back(tests[j].label);
        const FieldPair adj = solver.solve_adjoint(gamma_boundary_values(mesh, tests[j]), zero);
        const BoundaryTrace at = observation::obstacle_trace(adj, mesh);
        k.scale = std::max(k.scale, flux_norm(fwd) * flux_norm(at));
        for (std::size_t i = 0; i < p; ++i)
            k.entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                obstacle_flux_integral(mesh, fwd, at, radial_mode(obstacle.center(), i));
    }
    return k;
}

std::vector<InternalTest> omega_test_functions(const observation::Omega& omega, std::size_t count)
{
    std::vector<InternalTest> out;
    for (int degree = 0; out.size() < count; ++degree)
        for (int py = 0; py <= degree && out.size() < count; ++py) {
            const int px = degree - py;
            std::string label = "u^" + std::to_string(px) + " v^" + std::to_string(py);
            out.push_back({label, [omega, px, py](const Vec2& x) {
                               const Vec2 s = (x - omega.center) / omega.radius;
                               return std::pow(s.x(), px) * std::pow(s.y(), py);
                           }});
        }
    return out;
}

SensitivityMatrix internal_sensitivity_matrix(const TriangleMesh& mesh, const fem::CoefficientSet& coeffs,
                                              const FieldPair& forward, const geometry::ObstacleShape& obstacle,
                                              std::size_t p, const std::vector<Vec2>& points, const Vector& weights,
                                              const std::vector<InternalTest>& tests)
{
    if (p == 0) throw InvalidInput("internal_sensitivity_matrix: basis is empty");
    if (tests.empty()) throw InvalidInput("internal_sensitivity_matrix: no test functions");
    if (points.size() != static_cast<std::size_t>(weights.size()))
        throw InvalidInput("internal_sensitivity_matrix: points and weights differ in length");
    SensitivityMatrix k;
    k.obstacle = obstacle;
    k.entries.resize(static_cast<Eigen::Index>(tests.size()), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i) k.basis_labels.push_back(basis_label(i));

    std::vector<observation::PointLocation> loc;
    for (const auto& x : points) loc.push_back(observation::locate(mesh, x));

    const BoundaryTrace fwd = observation::obstacle_trace(forward, mesh);
    const fem::CoupledSolver solver(mesh, coeffs);
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(2 * mesh.num_vertices()));
    for (std::size_t j = 0; j < tests.size(); ++j) {
        k.testfn_labels.push_back(tests[j].label);
        Vector load = zero;
        for (std::size_t q = 0; q < points.size(); ++q) {
            const double c = weights[static_cast<Eigen::Index>(q)] * tests[j].rho(points[q]);
            const auto& tri = mesh.triangles[loc[q].triangle];
            for (int a = 0; a < 3; ++a) load[fem::dof(tri[a], 0)] += c * loc[q].weights[a];
        }
        const FieldPair adj = solver.solve_adjoint(zero, load);
        const BoundaryTrace at = observation::obstacle_trace(adj, mesh);
        k.scale = std::max(k.scale, flux_norm(fwd) * flux_norm(at));
        for (std::size_t i = 0; i < p; ++i)
            k.entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                -obstacle_flux_integral(mesh, fwd, at, radial_mode(obstacle.center(), i));
    }
    return k;
}

void write_sensitivity_csv(std::ostream& os, const SensitivityMatrix& k)
{
    io::CsvWriter csv(os, {"i", "j", "value"});
    for (Eigen::Index j = 0; j < k.entries.rows(); ++j)
        for (Eigen::Index i = 0; i < k.entries.cols(); ++i) csv.row(i + 1, j + 1, k.entries(j, i));
}

void write_identity_csv(std::ostream& os, const std::vector<IdentityRow>& rows)
{
    io::CsvWriter csv(os, {"sigma", "lhs", "rhs_scaled", "remainder"});
    for (const auto& r : rows) csv.row(r.sigma, r.lhs, r.rhs_scaled, r.remainder);
}

}  // namespace geoinv::shape_gradient
