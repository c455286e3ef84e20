#include "geoinv/fem/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "geoinv/io/csv.hpp"

#include <ostream>

namespace geoinv::fem {

using geometry::BoundaryTag;
using geometry::TriangleMesh;

Vector FieldPair::interleaved() const
{
    Vector x(2 * y.size());
    for (Eigen::Index v = 0; v < y.size(); ++v) {
        x[2 * v] = y[v];
        x[2 * v + 1] = z[v];
    }
    return x;
}

struct CoupledSolver::Impl {
    DiscreteSystem pattern;
    SparseMatrix reduced;
    SparseMatrix reduced_t;
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    bool direct = true;
};

CoupledSolver::CoupledSolver(const TriangleMesh& mesh, const CoefficientSet& coeffs,
                             std::shared_ptr<const geometry::TransportData> transport, const SolverOptions& options)
    : mesh_(&mesh), coeffs_(coeffs), transport_(std::move(transport)), options_(options),
      full_(coupled_operator(mesh, coeffs, transport_.get())), constrained_(mesh.boundary_mask()),
      impl_(std::make_unique<Impl>())
{
    const Vector zero = Vector::Zero(full_.rows());
    impl_->pattern = reduce(full_, zero, zero, constrained_);
    impl_->reduced = impl_->pattern.matrix;
    impl_->direct = impl_->pattern.size() <= options_.direct_limit;
    if (impl_->direct) {
        impl_->lu.compute(impl_->reduced);
        if (impl_->lu.info() != Eigen::Success)
            throw NumericalError("sparse LU factorization failed: " + impl_->lu.lastErrorMessage());
    } else {
        impl_->reduced_t = impl_->reduced.transpose();
    }
}

CoupledSolver::~CoupledSolver() = default;
CoupledSolver::CoupledSolver(CoupledSolver&&) noexcept = default;

FieldPair CoupledSolver::solve(const Vector& boundary_values, const Vector& load) const
{
    return run(boundary_values, load, false);
}

FieldPair CoupledSolver::solve_adjoint(const Vector& boundary_values, const Vector& load) const
{
    return run(boundary_values, load, true);
}

FieldPair CoupledSolver::run(const Vector& boundary_values, const Vector& load, bool transposed) const
{
    const auto n2 = full_.rows();
    if (boundary_values.size() != n2 || load.size() != n2) throw InvalidInput("solver: vector length mismatch");
    const SparseMatrix full_t = transposed ? SparseMatrix(full_.transpose()) : SparseMatrix();
    const DiscreteSystem sys = reduce(transposed ? full_t : full_, load, boundary_values, constrained_);

    Vector x;
    if (impl_->direct) {
        x = transposed ? Vector(impl_->lu.transpose().solve(sys.rhs)) : Vector(impl_->lu.solve(sys.rhs));
    } else {
        Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> krylov;
        krylov.setTolerance(0.1 * options_.relative_tolerance);
        krylov.setMaxIterations(options_.max_iterations);
        krylov.compute(transposed ? impl_->reduced_t : impl_->reduced);
        x = krylov.solve(sys.rhs);
        if (krylov.info() != Eigen::Success)
            throw NumericalError("BiCGSTAB did not converge: " + std::to_string(krylov.iterations()) +
                                 " iterations, estimated error " + std::to_string(krylov.error()));
    }
    const double bnorm = sys.rhs.norm();
    if (bnorm > 0.0) {
        const double res = (sys.matrix * x - sys.rhs).norm() / bnorm;
        if (!(res <= options_.relative_tolerance))
            throw NumericalError("linear solve residual " + std::to_string(res) + " above tolerance");
    }

    FieldPair out;
    const auto n = static_cast<Eigen::Index>(mesh_->num_vertices());
    out.y.resize(n);
    out.z.resize(n);
    for (Eigen::Index v = 0; v < n; ++v) {
        const int s = sys.slot[static_cast<std::size_t>(v)];
        out.y[v] = s < 0 ? boundary_values[2 * v] : x[2 * s];
        out.z[v] = s < 0 ? boundary_values[2 * v + 1] : x[2 * s + 1];
    }
    out.coeffs = transposed ? coeffs_.adjoint() : coeffs_;
    out.load = load;
    out.transport = transport_;
    return out;
}

FieldPair solve_dirichlet(const TriangleMesh& mesh, const CoefficientSet& coeffs, const Vector& boundary_values,
                          const Vector& load, std::shared_ptr<const geometry::TransportData> transport,
                          const SolverOptions& options)
{
    return CoupledSolver(mesh, coeffs, std::move(transport), options).solve(boundary_values, load);
}

Vector outer_dirichlet_values(const TriangleMesh& mesh, const BoundaryData& data)
{
    Vector values = Vector::Zero(static_cast<Eigen::Index>(2 * mesh.num_vertices()));
    const auto outer = mesh.tagged_mask({BoundaryTag::Outer, BoundaryTag::Gamma});
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        if (!outer[v]) continue;
        values[dof(static_cast<int>(v), 0)] = data.phi(mesh.vertices[v]);
        values[dof(static_cast<int>(v), 1)] = data.psi(mesh.vertices[v]);
    }
    return values;
}

FieldPair solve_forward(const TriangleMesh& mesh, const CoefficientSet& coeffs, const BoundaryData& data,
                        const std::optional<Sources>& sources, const SolverOptions& options)
{
    const Vector load = sources ? source_load(mesh, *sources)
                                : Vector::Zero(static_cast<Eigen::Index>(2 * mesh.num_vertices()));
    return solve_dirichlet(mesh, coeffs, outer_dirichlet_values(mesh, data), load, nullptr, options);
}

namespace {

Vector gamma_values(const TriangleMesh& mesh, const ScalarField& eta_bar, const ScalarField& theta_bar)
{
    Vector values = Vector::Zero(static_cast<Eigen::Index>(2 * mesh.num_vertices()));
    const auto gamma = mesh.tagged_mask({BoundaryTag::Gamma});
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        if (!gamma[v]) continue;
        values[dof(static_cast<int>(v), 0)] = eta_bar(mesh.vertices[v]);
        values[dof(static_cast<int>(v), 1)] = theta_bar(mesh.vertices[v]);
    }
    return values;
}

}  // namespace

FieldPair solve_adjoint(const TriangleMesh& mesh, const CoefficientSet& coeffs, const ScalarField& eta_bar,
                        const ScalarField& theta_bar, const SolverOptions& options)
{
    const Vector load = Vector::Zero(static_cast<Eigen::Index>(2 * mesh.num_vertices()));
    return solve_dirichlet(mesh, coeffs.adjoint(), gamma_values(mesh, eta_bar, theta_bar), load, nullptr, options);
}

PullbackSolution solve_pullback(const TriangleMesh& reference, const geometry::DeformationField& mu, double sigma,
                                const CoefficientSet& coeffs, const BoundaryData& data,
                                const geometry::Domain& domain, const SolverOptions& options)
{
    auto td = std::make_shared<const geometry::TransportData>(geometry::transport_data(mu, sigma, reference));
    const Vector bv = outer_dirichlet_values(reference, data);
    const auto n2 = bv.size();

    PullbackSolution out;
    out.lifted = solve_dirichlet(reference, coeffs, bv, Vector::Zero(n2), td, options);

    // discrete lifting: zero on nodes of closure(D*), harmonic elsewhere
    const std::size_t n = reference.num_vertices();
    std::vector<char> fixed = reference.boundary_mask();
    Vector lift = bv;
    if (domain.safety) {
        for (std::size_t v = 0; v < n; ++v)
            if ((reference.vertices[v] - domain.safety->center).norm() <= domain.safety->radius) {
                fixed[v] = 1;
                lift[2 * static_cast<Eigen::Index>(v)] = lift[2 * static_cast<Eigen::Index>(v) + 1] = 0.0;
            }
    }
    const SparseMatrix lap = coupled_operator(reference, CoefficientSet::laplace());
    const DiscreteSystem sys = reduce(lap, Vector::Zero(n2), lift, fixed);
    if (sys.size() > 0) {
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(sys.matrix);
        if (ldlt.info() != Eigen::Success) throw NumericalError("lifting factorization failed");
        const Vector x = ldlt.solve(sys.rhs);
        for (std::size_t s = 0; s < sys.interior_nodes.size(); ++s) {
            const Eigen::Index v = sys.interior_nodes[s];
            lift[2 * v] = x[2 * static_cast<Eigen::Index>(s)];
            lift[2 * v + 1] = x[2 * static_cast<Eigen::Index>(s) + 1];
        }
    }
    out.lift_phi.resize(static_cast<Eigen::Index>(n));
    out.lift_psi.resize(static_cast<Eigen::Index>(n));
    for (std::size_t v = 0; v < n; ++v) {
        out.lift_phi[static_cast<Eigen::Index>(v)] = lift[2 * static_cast<Eigen::Index>(v)];
        out.lift_psi[static_cast<Eigen::Index>(v)] = lift[2 * static_cast<Eigen::Index>(v) + 1];
    }
    out.u = out.lifted;
    out.u.y -= out.lift_phi;
    out.u.z -= out.lift_psi;
    return out;
}

double poincare_constant(const TriangleMesh& mesh, const PoincareOptions& options)
{
    if (!mesh.edges_with({BoundaryTag::Obstacle}).empty())
        throw InvalidInput("poincare_constant: mesh must cover Omega without an obstacle");
    const SparseMatrix K = stiffness_matrix(mesh);
    const SparseMatrix M = mass_matrix(mesh);
    const auto boundary = mesh.boundary_mask();
    std::vector<int> slot(mesh.num_vertices(), -1);
    int ni = 0;
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
        if (!boundary[v]) slot[v] = ni++;
    if (ni == 0) throw InvalidInput("poincare_constant: mesh has no interior nodes");

    auto restrict = [&](const SparseMatrix& A) {
        std::vector<Eigen::Triplet<double>> trip;
        for (Eigen::Index c = 0; c < A.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(A, c); it; ++it)
                if (slot[it.row()] >= 0 && slot[it.col()] >= 0) trip.emplace_back(slot[it.row()], slot[it.col()], it.value());
        SparseMatrix R(ni, ni);
        R.setFromTriplets(trip.begin(), trip.end());
        return R;
    };
    const SparseMatrix Ki = restrict(K), Mi = restrict(M);
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(Ki);
    if (ldlt.info() != Eigen::Success) throw NumericalError("poincare_constant: stiffness factorization failed");

    Vector x = Vector::Ones(ni);
    double lambda = 0.0;
    for (int it = 0; it < options.max_iterations; ++it) {
        x = ldlt.solve(Vector(Mi * x));
        x /= std::sqrt(x.dot(Mi * x));
        const double next = x.dot(Ki * x);
        if (it > 0 && std::abs(next - lambda) <= options.tolerance * next) return 1.0 / next;
        lambda = next;
    }
    throw NumericalError("poincare_constant: inverse iteration did not converge in " +
                         std::to_string(options.max_iterations) + " steps");
}

void write_solution_csv(std::ostream& os, const TriangleMesh& mesh, const FieldPair& fields)
{
    io::CsvWriter csv(os, {"node_id", "x", "y", "value_y", "value_z"});
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
        csv.row(v, mesh.vertices[v].x(), mesh.vertices[v].y(), fields.y[static_cast<Eigen::Index>(v)],
                fields.z[static_cast<Eigen::Index>(v)]);
}

void write_quantities_csv(std::ostream& os, const std::vector<std::pair<std::string, double>>& rows)
{
    io::CsvWriter csv(os, {"quantity", "value"});
    for (const auto& [k, v] : rows) csv.row(k, v);
}

}  // namespace geoinv::fem
