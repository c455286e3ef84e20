#pragma once

#include "geoinv/geometry/domain.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace geoinv::fem {

/// Constant coefficients of -Lap y + a y + b z = 0, -Lap z + A y + B z = 0.
struct CoefficientSet {
    double a = 0.0;
    double b = 0.0;
    double A = 0.0;
    double B = 0.0;
    std::optional<double> lambda_margin;

    Mat2 matrix() const { return (Mat2() << a, b, A, B).finished(); }
    Mat2 symmetrized() const;
    /// Coefficients of the adjoint system: the coupling is transposed (b and A swap).
    CoefficientSet adjoint() const { return {a, A, b, B, lambda_margin}; }

    static CoefficientSet laplace() { return {}; }
};

struct AdmissibilityVerdict {
    bool admissible = false;
    /// max(0, -min eigenvalue of the symmetrized coefficient matrix).
    double lambda_star = 0.0;
    /// Certified margin: midpoint of (lambda_star, 1/mu1) when admissible.
    double lambda = 0.0;
    double inverse_mu1 = 0.0;
};

AdmissibilityVerdict check_admissibility(const CoefficientSet& coeffs, double mu1);

/// c0 + sum_k (cos_k cos(k t) + sin_k sin(k t)), k starting at 1.
struct TrigSeries {
    double constant = 0.0;
    std::vector<double> cos;
    std::vector<double> sin;

    double operator()(double theta) const;
    bool is_zero() const;
};

using ScalarField = std::function<double(const Vec2&)>;

/// Dirichlet data (phi, psi) on the outer boundary, as functions of the point.
struct BoundaryData {
    ScalarField phi = [](const Vec2&) { return 0.0; };
    ScalarField psi = [](const Vec2&) { return 0.0; };

    static BoundaryData zero() { return {}; }
    static BoundaryData constant(double phi, double psi);
    /// Series in the polar angle about the outer boundary center.
    static BoundaryData from_series(const geometry::OuterBoundary& outer, TrigSeries phi, TrigSeries psi);
};

/// Volumetric sources (F, G) for manufactured-solution runs.
struct Sources {
    ScalarField f;
    ScalarField g;
};

}  // namespace geoinv::fem
