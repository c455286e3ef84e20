#include "geoinv/fem/assembly.hpp"

#include <array>

namespace geoinv::fem {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct ElementData {
    double area;
    std::array<Vec2, 3> grad;
};

ElementData element(const geometry::TriangleMesh& mesh, std::size_t t)
{
    const auto& tri = mesh.triangles[t];
    ElementData e{mesh.signed_area(t), {}};
    for (int k = 0; k < 3; ++k) {
        const Vec2 edge = mesh.vertices[tri[(k + 2) % 3]] - mesh.vertices[tri[(k + 1) % 3]];
        e.grad[k] = Vec2(-edge.y(), edge.x()) / (2.0 * e.area);
    }
    return e;
}

// local stiffness and mass, transported when requested
void local_matrices(const geometry::TriangleMesh& mesh, std::size_t t, const geometry::TransportData* td,
                    double kloc[3][3], double mloc[3][3])
{
    const ElementData e = element(mesh, t);
    const Mat2 S = td ? td->stiffness_tensor(t) : Mat2::Identity();
    const double jac = td ? td->jacobian[t] : 1.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            kloc[a][b] = e.area * e.grad[a].dot(S * e.grad[b]);
            // midpoint rule is exact for the quadratic integrand
            mloc[a][b] = jac * e.area * (a == b ? 2.0 : 1.0) / 12.0;
        }
}

SparseMatrix from_triplets(Eigen::Index n, const Triplets& trip)
{
    SparseMatrix m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

}  // namespace

SparseMatrix stiffness_matrix(const geometry::TriangleMesh& mesh, const geometry::TransportData* transport)
{
    Triplets trip;
    trip.reserve(9 * mesh.num_triangles());
    double k[3][3], m[3][3];
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        local_matrices(mesh, t, transport, k, m);
        const auto& tri = mesh.triangles[t];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) trip.emplace_back(tri[a], tri[b], k[a][b]);
    }
    return from_triplets(static_cast<Eigen::Index>(mesh.num_vertices()), trip);
}

SparseMatrix mass_matrix(const geometry::TriangleMesh& mesh, const geometry::TransportData* transport)
{
    Triplets trip;
    trip.reserve(9 * mesh.num_triangles());
    double k[3][3], m[3][3];
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        local_matrices(mesh, t, transport, k, m);
        const auto& tri = mesh.triangles[t];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) trip.emplace_back(tri[a], tri[b], m[a][b]);
    }
    return from_triplets(static_cast<Eigen::Index>(mesh.num_vertices()), trip);
}

SparseMatrix coupled_operator(const geometry::TriangleMesh& mesh, const CoefficientSet& c,
                              const geometry::TransportData* transport)
{
    Triplets trip;
    trip.reserve(36 * mesh.num_triangles());
    double k[3][3], m[3][3];
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        local_matrices(mesh, t, transport, k, m);
        const auto& tri = mesh.triangles[t];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                const int i = tri[a], j = tri[b];
                trip.emplace_back(dof(i, 0), dof(j, 0), k[a][b] + c.a * m[a][b]);
                trip.emplace_back(dof(i, 0), dof(j, 1), c.b * m[a][b]);
                trip.emplace_back(dof(i, 1), dof(j, 0), c.A * m[a][b]);
                trip.emplace_back(dof(i, 1), dof(j, 1), k[a][b] + c.B * m[a][b]);
            }
    }
    return from_triplets(static_cast<Eigen::Index>(2 * mesh.num_vertices()), trip);
}

Vector source_load(const geometry::TriangleMesh& mesh, const Sources& sources)
{
    Vector load = Vector::Zero(static_cast<Eigen::Index>(2 * mesh.num_vertices()));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double w = mesh.signed_area(t) / 3.0;
        for (int q = 0; q < 3; ++q) {
            // midpoint of the edge opposite vertex q; the two endpoint hats equal 1/2 there
            const Vec2 x = 0.5 * (mesh.vertices[tri[(q + 1) % 3]] + mesh.vertices[tri[(q + 2) % 3]]);
            const double f = sources.f ? sources.f(x) : 0.0;
            const double g = sources.g ? sources.g(x) : 0.0;
            for (int a : {(q + 1) % 3, (q + 2) % 3}) {
                load[dof(tri[a], 0)] += w * 0.5 * f;
                load[dof(tri[a], 1)] += w * 0.5 * g;
            }
        }
    }
    return load;
}

SparseMatrix boundary_mass(const geometry::TriangleMesh& mesh, const std::vector<int>& nodes, bool closed)
{
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Triplets trip;
    const std::size_t edges = closed ? nodes.size() : nodes.size() - 1;
    for (std::size_t e = 0; e < edges; ++e) {
        const auto i = static_cast<Eigen::Index>(e);
        const auto j = static_cast<Eigen::Index>((e + 1) % nodes.size());
        const double len = (mesh.vertices[nodes[e]] - mesh.vertices[nodes[(e + 1) % nodes.size()]]).norm();
        trip.emplace_back(i, i, len / 3.0);
        trip.emplace_back(j, j, len / 3.0);
        trip.emplace_back(i, j, len / 6.0);
        trip.emplace_back(j, i, len / 6.0);
    }
    return from_triplets(n, trip);
}

DiscreteSystem reduce(const SparseMatrix& full, const Vector& load, const Vector& full_values,
                      const std::vector<char>& constrained)
{
    DiscreteSystem sys;
    const std::size_t n = constrained.size();
    sys.slot.assign(n, -1);
    for (std::size_t v = 0; v < n; ++v)
        if (!constrained[v]) {
            sys.slot[v] = static_cast<int>(sys.interior_nodes.size());
            sys.interior_nodes.push_back(static_cast<int>(v));
        }
    const auto ni = static_cast<Eigen::Index>(2 * sys.interior_nodes.size());
    sys.rhs = Vector::Zero(ni);
    Triplets trip;
    trip.reserve(static_cast<std::size_t>(full.nonZeros()));
    for (Eigen::Index col = 0; col < full.outerSize(); ++col) {
        const int cnode = static_cast<int>(col / 2);
        const int cslot = sys.slot[cnode];
        for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
            const int rnode = static_cast<int>(it.row() / 2);
            const int rslot = sys.slot[rnode];
            if (rslot < 0) continue;
            const Eigen::Index r = 2 * rslot + it.row() % 2;
            if (cslot >= 0)
                trip.emplace_back(r, 2 * cslot + col % 2, it.value());
            else
                sys.rhs[r] -= it.value() * full_values[col];
        }
    }
    for (std::size_t s = 0; s < sys.interior_nodes.size(); ++s) {
        const int v = sys.interior_nodes[s];
        sys.rhs[2 * static_cast<Eigen::Index>(s)] += load[dof(v, 0)];
        sys.rhs[2 * static_cast<Eigen::Index>(s) + 1] += load[dof(v, 1)];
    }
    sys.matrix = from_triplets(ni, trip);
    return sys;
}

}  // namespace geoinv::fem
