#pragma once

#include "geoinv/geometry/mesh.hpp"

#include <functional>

namespace geoinv::geometry {

/// C^2 radial cutoff about `center`: 1 for |x - center| <= r_in, 0 for
/// |x - center| >= r_out, quintic smoothstep in between.
struct SmoothCutoff {
    Vec2 center{0.0, 0.0};
    double r_in = 0.45;
    double r_out = 0.7;

    double value(const Vec2& x) const;
    Vec2 gradient(const Vec2& x) const;
};

/// Vector field mu supported in the closed disk D*; m_sigma = I + sigma mu.
class DeformationField {
public:
    using Evaluator = std::function<Vec2(const Vec2&)>;
    using JacobianFn = std::function<Mat2(const Vec2&)>;

    static constexpr double kFiniteDifferenceStep = 1e-6;

    DeformationField() = default;
    /// `jacobian` may be empty, in which case mu' is taken by central differences.
    DeformationField(Evaluator evaluator, Disk support, double lipschitz_bound, JacobianFn jacobian = {});

    static DeformationField zero(const Disk& support);

    Vec2 operator()(const Vec2& x) const { return evaluator_(x); }
    /// Analytic mu' when available, otherwise central differences.
    Mat2 jacobian(const Vec2& x) const;
    Mat2 jacobian_fd(const Vec2& x) const;
    bool has_analytic_jacobian() const { return static_cast<bool>(jacobian_); }

    const Disk& support() const { return support_; }
    double lipschitz_bound() const { return lipschitz_bound_; }

    /// Throws InvalidInput unless mu vanishes on a ring of samples just outside D*.
    void check_support() const;

private:
    Evaluator evaluator_ = [](const Vec2&) { return Vec2::Zero().eval(); };
    JacobianFn jacobian_;
    Disk support_{};
    double lipschitz_bound_ = 0.0;
};

/// Sampled bound max(sup|mu|, sup|mu'|_2) over a polar grid of the support disk,
/// skipping |x - support.center| < rho_min (the interior of the obstacle).
double sampled_lipschitz_bound(const DeformationField::Evaluator& mu, const DeformationField::JacobianFn& jac,
                               const Disk& support, double rho_min = 0.0);

// Closed-form fields, each raw(x) * chi(x) with analytic Jacobian. The bound is
// sampled outside `rho_min` about the cutoff center.
DeformationField translation_field(const Vec2& shift, const SmoothCutoff& chi, const Disk& support);
DeformationField dilation_field(const Vec2& origin, double rate, const SmoothCutoff& chi, const Disk& support);
DeformationField rotation_field(const Vec2& origin, double rate, const SmoothCutoff& chi, const Disk& support);
/// (x - o)/|x - o| * profile(theta) * chi(x): moves the star curve about o by
/// profile(theta) along the ray. `rho_min` excludes the singular center.
DeformationField radial_profile_field(const Vec2& origin, std::function<double(double)> profile,
                                      std::function<double(double)> profile_derivative, const SmoothCutoff& chi,
                                      const Disk& support, double rho_min);
DeformationField radial_unit_field(const Vec2& origin, double amplitude, const SmoothCutoff& chi,
                                   const Disk& support, double rho_min);

/// x -> x + sigma mu(x) on every vertex; vertices outside D* are copied unchanged.
/// Throws InvalidInput if |sigma| * bound >= 1 and NumericalError("mesh tangled")
/// if a triangle inverts.
TriangleMesh apply_deformation(const TriangleMesh& mesh, const DeformationField& mu, double sigma);

/// Solves x = y + sigma mu(y) for y by fixed-point iteration.
Vec2 inverse_map(const DeformationField& mu, double sigma, const Vec2& x, double tol = 1e-14, int max_iter = 500);

/// Per-triangle Jac(m) and M = ((m')^T)^{-1} at the barycenters of a reference mesh.
struct TransportData {
    std::vector<double> jacobian;
    std::vector<Mat2> m_matrix;

    static TransportData identity(std::size_t num_triangles);
    /// Jac * M^T M, the transported stiffness tensor.
    Mat2 stiffness_tensor(std::size_t t) const;
};

TransportData transport_data(const DeformationField& mu, double sigma, const TriangleMesh& mesh,
                             bool force_finite_differences = false);

}  // namespace geoinv::geometry
