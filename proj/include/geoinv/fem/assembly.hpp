#pragma once

#include "geoinv/fem/coefficients.hpp"
#include "geoinv/geometry/deformation.hpp"

#include <Eigen/SparseCore>

namespace geoinv::fem {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// Interleaved degree of freedom: node v carries y at 2v and z at 2v+1.
inline int dof(int node, int field) { return 2 * node + field; }

/// Scalar P1 stiffness matrix (optionally transported: Jac M^T M in place of I).
SparseMatrix stiffness_matrix(const geometry::TriangleMesh& mesh, const geometry::TransportData* transport = nullptr);
/// Scalar P1 mass matrix by the 3-point edge-midpoint rule (optionally scaled by Jac).
SparseMatrix mass_matrix(const geometry::TriangleMesh& mesh, const geometry::TransportData* transport = nullptr);

/// Coupled operator [[K + aM, bM], [AM, K + BM]] over all 2n interleaved DOFs.
SparseMatrix coupled_operator(const geometry::TriangleMesh& mesh, const CoefficientSet& coeffs,
                              const geometry::TransportData* transport = nullptr);

/// Load vector of (F, G) by the 3-point edge-midpoint rule.
Vector source_load(const geometry::TriangleMesh& mesh, const Sources& sources);

/// Consistent P1 mass matrix of a boundary loop or chain (local indices follow `nodes`).
SparseMatrix boundary_mass(const geometry::TriangleMesh& mesh, const std::vector<int>& nodes, bool closed);

/// Reduced system over the interior DOFs after Dirichlet elimination.
struct DiscreteSystem {
    SparseMatrix matrix;
    Vector rhs;
    /// Node of each reduced slot (two DOFs per slot).
    std::vector<int> interior_nodes;
    /// Reduced slot of each node, or -1 for constrained nodes.
    std::vector<int> slot;
    int mass_quadrature_points = 3;

    std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
};

/// Eliminates the DOFs of every node with constrained[v] != 0 using the
/// values in `full_values` (length 2n).
DiscreteSystem reduce(const SparseMatrix& full, const Vector& load, const Vector& full_values,
                      const std::vector<char>& constrained);

}  // namespace geoinv::fem
