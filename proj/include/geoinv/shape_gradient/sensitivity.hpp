#pragma once

#include "geoinv/observation/trace.hpp"

#include <iosfwd>
#include <string>

namespace geoinv::shape_gradient {

using fem::FieldPair;
using fem::Vector;
using observation::BoundaryTrace;

/// Weight w(x, n) multiplying the flux product on the obstacle, e.g. mu(x).n.
using NormalWeight = std::function<double(const Vec2& x, const Vec2& n)>;

/// mu(x).n for a deformation field.
NormalWeight normal_component(const geometry::DeformationField& mu);
/// f_index(theta) e_r.n: the normal speed of the radial basis perturbation
/// r(theta) -> r(theta) + f_index(theta) about `center`.
NormalWeight radial_mode(const Vec2& center, std::size_t index);

/// Integral over the obstacle of w(x, n) (dy/dn dEta/dn + dz/dn dTheta/dn), with
/// the nodal fluxes interpolated linearly along each edge and 3-point Gauss per
/// edge. The single routine behind both the identity check and K.
double obstacle_flux_integral(const geometry::TriangleMesh& mesh, const BoundaryTrace& forward,
                              const BoundaryTrace& adjoint, const NormalWeight& weight);

/// Linearized system with zero data on the outer boundary and
/// (-(mu.n) dy/dn, -(mu.n) dz/dn) on the obstacle; n at a node is the mean of
/// the adjacent edge normals.
FieldPair solve_shape_derivative(const geometry::TriangleMesh& mesh, const fem::CoefficientSet& coeffs,
                                 const FieldPair& forward, const geometry::DeformationField& mu);

/// One test pair on gamma.
struct TestPair {
    std::string label;
    fem::ScalarField eta;
    fem::ScalarField theta;
};

enum class Channels { Both, Alpha, Beta };

/// Trigonometric modes in the rescaled gamma angle t = 2 pi (theta - start) / |gamma|,
/// paired as (mode, 0) and (0, mode).
std::vector<TestPair> gamma_test_pairs(const geometry::Domain& domain, std::size_t modes, Channels channels);

struct IdentityRow {
    double sigma;
    double lhs;
    double rhs_scaled;
    double remainder;
};

/// LHS(sigma) from full re-solves on apply_deformation(mesh, mu, sigma);
/// RHS = -integral over the obstacle of (mu.n)(flux products) with the adjoint pair.
std::vector<IdentityRow> adjoint_identity_check(const geometry::TriangleMesh& mesh, const fem::CoefficientSet& coeffs,
                                                const fem::BoundaryData& data, const geometry::DeformationField& mu,
                                                const TestPair& test, const std::vector<double>& sigma_grid);

/// Gamma projection P(t) = integral over gamma of alpha eta_bar + beta theta_bar
/// (consistent boundary mass).
double gamma_projection(const BoundaryTrace& trace, const TestPair& test);

/// Rows are test functions, columns basis modes: K(j, i) pairs mode i with test j.
/// This is the transpose of the subscript order K_ij used in the literature.
struct SensitivityMatrix {
    Eigen::MatrixXd entries;
    std::vector<std::string> basis_labels;
    std::vector<std::string> testfn_labels;
    geometry::ObstacleShape obstacle;
    /// max over tests of |forward flux| |adjoint flux| in L2 of the obstacle
    /// boundary; bounds the entries up to the basis sup norm, so it is the
    /// reference for numerical rank.
    double scale = 0.0;
};

std::string basis_label(std::size_t index);

/// Boundary-observation K for radial modes 0..p-1 about the obstacle center.
/// The adjoints share one factorization of the forward operator.
SensitivityMatrix sensitivity_matrix(const geometry::TriangleMesh& mesh, const fem::CoefficientSet& coeffs,
                                     const FieldPair& forward, const geometry::ObstacleShape& obstacle,
                                     std::size_t p, const std::vector<TestPair>& tests);

/// Internal-observation test function on omega, applied to y through the
/// sample weights of an InternalTrace.
struct InternalTest {
    std::string label;
    fem::ScalarField rho;
};

/// Low-degree polynomials in the scaled omega coordinates: 1, u, v, u^2, uv, v^2, ...
std::vector<InternalTest> omega_test_functions(const observation::Omega& omega, std::size_t count);

/// Internal-observation K: each adjoint is driven by the discrete functional
/// sum_p w_p rho_j(x_p) y(x_p) and has zero boundary data. Entries are the
/// negated obstacle integral so that K lambda = r has the same form as the
/// boundary case.
SensitivityMatrix internal_sensitivity_matrix(const geometry::TriangleMesh& mesh, const fem::CoefficientSet& coeffs,
                                              const FieldPair& forward, const geometry::ObstacleShape& obstacle,
                                              std::size_t p, const std::vector<Vec2>& points, const Vector& weights,
                                              const std::vector<InternalTest>& tests);

/// "i,j,value" with i the basis index and j the test index (both 1-based).
void write_sensitivity_csv(std::ostream& os, const SensitivityMatrix& k);
/// "sigma,lhs,rhs_scaled,remainder"
void write_identity_csv(std::ostream& os, const std::vector<IdentityRow>& rows);

}  // namespace geoinv::shape_gradient
