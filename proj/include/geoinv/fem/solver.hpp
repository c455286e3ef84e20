#pragma once

#include "geoinv/fem/assembly.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <utility>

namespace geoinv::fem {

/// Nodal fields (y, z) on a mesh, together with what produced them so that
/// boundary fluxes can be recovered consistently.
struct FieldPair {
    Vector y;
    Vector z;
    CoefficientSet coeffs;
    /// Full (2n) source load; zero for homogeneous problems.
    Vector load;
    /// Transport used in the assembly, null for the plain operator.
    std::shared_ptr<const geometry::TransportData> transport;

    /// Interleaved (2n) vector [y0, z0, y1, z1, ...].
    Vector interleaved() const;
};

struct SolverOptions {
    /// Above this many unknowns the Krylov path replaces the direct factorization.
    std::size_t direct_limit = 200000;
    double relative_tolerance = 1e-10;
    int max_iterations = 5000;
};

/// Factorizes the reduced coupled operator once (every boundary node
/// constrained) and serves forward and adjoint solves from it. The adjoint
/// operator is the transpose, so both share one factorization.
class CoupledSolver {
public:
    CoupledSolver(const geometry::TriangleMesh& mesh, const CoefficientSet& coeffs,
                  std::shared_ptr<const geometry::TransportData> transport = nullptr,
                  const SolverOptions& options = {});
    ~CoupledSolver();
    CoupledSolver(CoupledSolver&&) noexcept;

    /// Operator with the given coefficients; `boundary_values` and `load` are 2n.
    FieldPair solve(const Vector& boundary_values, const Vector& load) const;
    /// Transposed operator (coupling b and A swapped).
    FieldPair solve_adjoint(const Vector& boundary_values, const Vector& load) const;

    const SparseMatrix& full_operator() const { return full_; }
    const geometry::TriangleMesh& mesh() const { return *mesh_; }
    const CoefficientSet& coeffs() const { return coeffs_; }

private:
    struct Impl;
    FieldPair run(const Vector& boundary_values, const Vector& load, bool transposed) const;

    const geometry::TriangleMesh* mesh_;
    CoefficientSet coeffs_;
    std::shared_ptr<const geometry::TransportData> transport_;
    SolverOptions options_;
    SparseMatrix full_;
    std::vector<char> constrained_;
    std::unique_ptr<Impl> impl_;
};

/// General Dirichlet solve: values of constrained nodes are taken from
/// `boundary_values` (2n, interleaved); every node on a boundary edge is constrained.
FieldPair solve_dirichlet(const geometry::TriangleMesh& mesh, const CoefficientSet& coeffs,
                          const Vector& boundary_values, const Vector& load,
                          std::shared_ptr<const geometry::TransportData> transport = nullptr,
                          const SolverOptions& options = {});

/// (phi, psi) on OUTER and GAMMA nodes, zero on the obstacle.
Vector outer_dirichlet_values(const geometry::TriangleMesh& mesh, const BoundaryData& data);

FieldPair solve_forward(const geometry::TriangleMesh& mesh, const CoefficientSet& coeffs, const BoundaryData& data,
                        const std::optional<Sources>& sources = std::nullopt, const SolverOptions& options = {});

/// Adjoint system: coupling transposed, data (eta_bar, theta_bar) on GAMMA nodes,
/// zero on the rest of the outer boundary and on the obstacle.
FieldPair solve_adjoint(const geometry::TriangleMesh& mesh, const CoefficientSet& coeffs, const ScalarField& eta_bar,
                        const ScalarField& theta_bar, const SolverOptions& options = {});

struct PullbackSolution {
    /// (u0, v0) = lifted minus lifting.
    FieldPair u;
    /// (y0, z0) = (u0 + phi0, v0 + psi0), nodal on the reference mesh.
    FieldPair lifted;
    /// Discrete lifting: boundary data, zero at nodes in closure(D*), harmonic elsewhere.
    Vector lift_phi;
    Vector lift_psi;
};

/// Solves the transported system on the reference mesh.
PullbackSolution solve_pullback(const geometry::TriangleMesh& reference, const geometry::DeformationField& mu,
                                double sigma, const CoefficientSet& coeffs, const BoundaryData& data,
                                const geometry::Domain& domain, const SolverOptions& options = {});

struct PoincareOptions {
    double tolerance = 1e-10;
    int max_iterations = 1000;
};

/// mu1 = 1 / lambda1 of the Dirichlet Laplacian on an obstacle-free mesh, by
/// inverse power iteration on the (K, M) pair.
double poincare_constant(const geometry::TriangleMesh& mesh, const PoincareOptions& options = {});

/// "node_id,x,y,value_y,value_z"
void write_solution_csv(std::ostream& os, const geometry::TriangleMesh& mesh, const FieldPair& fields);
/// "quantity,value"
void write_quantities_csv(std::ostream& os, const std::vector<std::pair<std::string, double>>& rows);

}  // namespace geoinv::fem
