#include "geoinv/geometry/deformation.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <utility>

namespace geoinv::geometry {

namespace {

double smoothstep5(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
double smoothstep5_derivative(double t) { return 30.0 * t * t * (1.0 - t) * (1.0 - t); }

void check_cutoff(const SmoothCutoff& chi, const Disk& support)
{
    if (!(chi.r_in >= 0.0 && chi.r_in < chi.r_out))
        throw InvalidInput("cutoff radii must satisfy 0 <= r_in < r_out");
    if ((chi.center - support.center).norm() + chi.r_out > support.radius + 1e-12)
        throw InvalidInput("cutoff band leaves the support disk");
}

}  // namespace

double SmoothCutoff::value(const Vec2& x) const
{
    const double rho = (x - center).norm();
    if (rho <= r_in) return 1.0;
    if (rho >= r_out) return 0.0;
    return 1.0 - smoothstep5((rho - r_in) / (r_out - r_in));
}

Vec2 SmoothCutoff::gradient(const Vec2& x) const
{
    const Vec2 d = x - center;
    const double rho = d.norm();
    if (rho <= r_in || rho >= r_out) return Vec2::Zero();
    const double w = r_out - r_in;
    return -smoothstep5_derivative((rho - r_in) / w) / w * d / rho;
}

DeformationField::DeformationField(Evaluator evaluator, Disk support, double lipschitz_bound, JacobianFn jacobian)
    : evaluator_(std::move(evaluator)), jacobian_(std::move(jacobian)), support_(support),
      lipschitz_bound_(lipschitz_bound)
{
    if (!evaluator_) throw InvalidInput("deformation field needs an evaluator");
    if (!(lipschitz_bound_ >= 0.0)) throw InvalidInput("lipschitz bound must be nonnegative");
}

DeformationField DeformationField::zero(const Disk& support)
{
    return {[](const Vec2&) { return Vec2::Zero().eval(); }, support, 0.0,
            [](const Vec2&) { return Mat2::Zero().eval(); }};
}

Mat2 DeformationField::jacobian(const Vec2& x) const
{
    return jacobian_ ? jacobian_(x) : jacobian_fd(x);
}

Mat2 DeformationField::jacobian_fd(const Vec2& x) const
{
    const double h = kFiniteDifferenceStep;
    Mat2 j;
    for (int c = 0; c < 2; ++c) {
        Vec2 e = Vec2::Zero();
        e[c] = h;
        j.col(c) = (evaluator_(x + e) - evaluator_(x - e)) / (2.0 * h);
    }
    return j;
}

void DeformationField::check_support() const
{
    for (int k = 0; k < 720; ++k) {
        const double t = kTwoPi * k / 720.0;
        for (double s : {1.0 + 1e-9, 1.05, 1.5}) {
            const Vec2 x = support_.center + s * support_.radius * Vec2(std::cos(t), std::sin(t));
            if (evaluator_(x).norm() != 0.0) throw InvalidInput("deformation field does not vanish outside D*");
        }
    }
}

double sampled_lipschitz_bound(const DeformationField::Evaluator& mu, const DeformationField::JacobianFn& jac,
                               const Disk& support, double rho_min)
{
    double bound = 0.0;
    const int nr = 160, nt = 256;
    for (int i = 0; i <= nr; ++i) {
        const double rho = rho_min + (support.radius - rho_min) * i / nr;
        if (rho <= 0.0) {
            bound = std::max({bound, mu(support.center).norm(), jac(support.center).norm()});
            continue;
        }
        for (int k = 0; k < nt; ++k) {
            const double t = kTwoPi * k / nt;
            const Vec2 x = support.center + rho * Vec2(std::cos(t), std::sin(t));
            // operator 2-norm of the Jacobian
            const Mat2 j = jac(x);
            const double op = Eigen::JacobiSVD<Mat2>(j).singularValues()(0);
            bound = std::max({bound, mu(x).norm(), op});
        }
    }
    return bound;
}

namespace {

DeformationField from_raw(std::function<Vec2(const Vec2&)> raw, std::function<Mat2(const Vec2&)> raw_jac,
                          const SmoothCutoff& chi, const Disk& support, double rho_min)
{
    check_cutoff(chi, support);
    auto mu = [raw, chi](const Vec2& x) -> Vec2 {
        const double c = chi.value(x);
        return c == 0.0 ? Vec2::Zero().eval() : (raw(x) * c).eval();
    };
    auto jac = [raw, raw_jac, chi](const Vec2& x) -> Mat2 {
        const double c = chi.value(x);
        const Vec2 g = chi.gradient(x);
        if (c == 0.0 && g.isZero()) return Mat2::Zero();
        return raw_jac(x) * c + raw(x) * g.transpose();
    };
    const double bound = sampled_lipschitz_bound(mu, jac, support, rho_min);
    return {mu, support, bound, jac};
}

}  // namespace

DeformationField translation_field(const Vec2& shift, const SmoothCutoff& chi, const Disk& support)
{
    return from_raw([shift](const Vec2&) { return shift; }, [](const Vec2&) { return Mat2::Zero().eval(); }, chi,
                    support, 0.0);
}

DeformationField dilation_field(const Vec2& origin, double rate, const SmoothCutoff& chi, const Disk& support)
{
    return from_raw([origin, rate](const Vec2& x) { return (rate * (x - origin)).eval(); },
                    [rate](const Vec2&) { return (rate * Mat2::Identity()).eval(); }, chi, support, 0.0);
}

DeformationField rotation_field(const Vec2& origin, double rate, const SmoothCutoff& chi, const Disk& support)
{
    Mat2 r;
    r << 0.0, -rate, rate, 0.0;
    return from_raw([origin, r](const Vec2& x) { return (r * (x - origin)).eval(); },
                    [r](const Vec2&) { return r; }, chi, support, 0.0);
}

DeformationField radial_profile_field(const Vec2& origin, std::function<double(double)> profile,
                                      std::function<double(double)> profile_derivative, const SmoothCutoff& chi,
                                      const Disk& support, double rho_min)
{
    auto raw = [origin, profile](const Vec2& x) -> Vec2 {
        const Vec2 d = x - origin;
        const double rho = d.norm();
        if (rho == 0.0) return Vec2::Zero();
        return profile(std::atan2(d.y(), d.x())) * d / rho;
    };
    auto raw_jac = [origin, profile, profile_derivative](const Vec2& x) -> Mat2 {
        const Vec2 d = x - origin;
        const double rho = d.norm();
        if (rho == 0.0) return Mat2::Zero();
        const double t = std::atan2(d.y(), d.x());
        const Vec2 er = d / rho;
        const Vec2 et(-er.y(), er.x());
        // f(t) e_r: d/dx = f'(t) e_r grad(t)^T + f(t) (I - e_r e_r^T)/rho, grad t = e_t/rho
        return (profile_derivative(t) * er * et.transpose() + profile(t) * et * et.transpose()) / rho;
    };
    return from_raw(raw, raw_jac, chi, support, rho_min);
}

DeformationField radial_unit_field(const Vec2& origin, double amplitude, const SmoothCutoff& chi,
                                   const Disk& support, double rho_min)
{
    return radial_profile_field(
        origin, [amplitude](double) { return amplitude; }, [](double) { return 0.0; }, chi, support, rho_min);
}

TriangleMesh apply_deformation(const TriangleMesh& mesh, const DeformationField& mu, double sigma)
{
    if (!(std::abs(sigma) * mu.lipschitz_bound() < 1.0))
        throw InvalidInput("apply_deformation: |sigma| * lipschitz bound must be below 1");
    TriangleMesh out = mesh;
    if (sigma == 0.0) return out;
    const Disk& s = mu.support();
    for (auto& v : out.vertices) {
        if ((v - s.center).norm() > s.radius) continue;
        v = v + sigma * mu(v);
    }
    for (std::size_t t = 0; t < out.num_triangles(); ++t)
        if (!(out.signed_area(t) > 0.0)) throw NumericalError("mesh tangled");
    out.mesh_size = out.max_edge_length();
    return out;
}

Vec2 inverse_map(const DeformationField& mu, double sigma, const Vec2& x, double tol, int max_iter)
{
    Vec2 y = x;
    for (int it = 0; it < max_iter; ++it) {
        const Vec2 next = x - sigma * mu(y);
        const double step = (next - y).norm();
        y = next;
        if (step <= tol * std::max(1.0, x.norm())) return y;
    }
    throw NumericalError("inverse_map: fixed-point iteration did not converge");
}

TransportData TransportData::identity(std::size_t num_triangles)
{
    return {std::vector<double>(num_triangles, 1.0), std::vector<Mat2>(num_triangles, Mat2::Identity())};
}

Mat2 TransportData::stiffness_tensor(std::size_t t) const
{
    return jacobian[t] * m_matrix[t].transpose() * m_matrix[t];
}

TransportData transport_data(const DeformationField& mu, double sigma, const TriangleMesh& mesh,
                             bool force_finite_differences)
{
    if (!(std::abs(sigma) * mu.lipschitz_bound() < 1.0))
        throw InvalidInput("transport_data: |sigma| * lipschitz bound must be below 1");
    TransportData td = TransportData::identity(mesh.num_triangles());
    if (sigma == 0.0) return td;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const Vec2 b = mesh.barycenter(t);
        const Mat2 dmu = force_finite_differences ? mu.jacobian_fd(b) : mu.jacobian(b);
        if (dmu.isZero(0.0)) continue;
        const Mat2 mprime = Mat2::Identity() + sigma * dmu;
        const double det = mprime.determinant();
        if (!(det > 0.0)) throw NumericalError("orientation reversal");
        td.jacobian[t] = det;
        td.m_matrix[t] = mprime.transpose().inverse();
    }
    return td;
}

}  // namespace geoinv::geometry
