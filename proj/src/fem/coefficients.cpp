#include "geoinv/fem/coefficients.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <utility>

namespace geoinv::fem {

Mat2 CoefficientSet::symmetrized() const
{
    const double off = 0.5 * (b + A);
    return (Mat2() << a, off, off, B).finished();
}

AdmissibilityVerdict check_admissibility(const CoefficientSet& coeffs, double mu1)
{
    if (!(mu1 > 0.0)) throw InvalidInput("check_admissibility: mu1 must be positive");
    AdmissibilityVerdict v;
    const double min_eig = Eigen::SelfAdjointEigenSolver<Mat2>(coeffs.symmetrized()).eigenvalues()(0);
    v.lambda_star = std::max(0.0, -min_eig);
    v.inverse_mu1 = 1.0 / mu1;
    v.admissible = v.lambda_star < v.inverse_mu1;
    v.lambda = v.admissible ? 0.5 * (v.lambda_star + v.inverse_mu1) : v.lambda_star;
    return v;
}

double TrigSeries::operator()(double theta) const
{
    double s = constant;
    for (std::size_t k = 0; k < cos.size(); ++k) s += cos[k] * std::cos(static_cast<double>(k + 1) * theta);
    for (std::size_t k = 0; k < sin.size(); ++k) s += sin[k] * std::sin(static_cast<double>(k + 1) * theta);
    return s;
}

bool TrigSeries::is_zero() const
{
    auto zero = [](double c) { return c == 0.0; };
    return constant == 0.0 && std::all_of(cos.begin(), cos.end(), zero) && std::all_of(sin.begin(), sin.end(), zero);
}

BoundaryData BoundaryData::constant(double phi, double psi)
{
    return {[phi](const Vec2&) { return phi; }, [psi](const Vec2&) { return psi; }};
}

BoundaryData BoundaryData::from_series(const geometry::OuterBoundary& outer, TrigSeries phi, TrigSeries psi)
{
    const Vec2 c = outer.center();
    auto angle = [c](const Vec2& x) { return std::atan2(x.y() - c.y(), x.x() - c.x()); };
    return {[phi = std::move(phi), angle](const Vec2& x) { return phi(angle(x)); },
            [psi = std::move(psi), angle](const Vec2& x) { return psi(angle(x)); }};
}

}  // namespace geoinv::fem
