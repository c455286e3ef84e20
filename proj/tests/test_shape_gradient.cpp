#include "geoinv/shape_gradient/sensitivity.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace geoinv;
using namespace geoinv::geometry;
using namespace geoinv::fem;
using namespace geoinv::shape_gradient;

namespace {

const Domain kDomain{};
const CoefficientSet kCoupled{1, 2, -1, 0.5};

TriangleMesh annulus(double h) { return build_mesh(kDomain, ObstacleShape::circle({0, 0}, 0.3), h); }

DeformationField radial_unit(double amplitude = 1.0)
{
    return radial_unit_field({0, 0}, amplitude, SmoothCutoff{}, *kDomain.safety, 0.25);
}

DeformationField mode_field(const Vec2& center, std::function<double(double)> f, std::function<double(double)> df)
{
    return radial_profile_field(center, std::move(f), std::move(df), SmoothCutoff{}, *kDomain.safety, 0.2);
}

DeformationField mode_field(const Vec2& center, std::size_t i)
{
    return mode_field(
        center, [i](double t) { return trig_basis(i, t); }, [i](double t) { return trig_basis_derivative(i, t); });
}

BoundaryData generic_data()
{
    BoundaryData d;
    d.phi = [](const Vec2& x) { return 1.0 + 0.5 * x.x(); };
    d.psi = [](const Vec2& x) { return 0.5 - 0.3 * x.x() * x.y(); };
    return d;
}

double slope(double s0, double s1, double r0, double r1) { return std::log(r1 / r0) / std::log(s1 / s0); }

}  // namespace

TEST_CASE("identity check: sigma = 0 row is zero")
{
    const auto m = annulus(0.1);
    const auto rows = adjoint_identity_check(m, kCoupled, BoundaryData::constant(1, 0.5), radial_unit(),
                                             gamma_test_pairs(kDomain, 1, Channels::Alpha)[0], {0.0});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].lhs == 0.0);
    CHECK(rows[0].remainder == 0.0);
}

TEST_CASE("identity remainder is second order and matches at sigma = 0.01")
{
    const auto m = annulus(0.03);
    const std::vector<double> grid{0.04, 0.02, 0.01, 0.005};
    for (const auto& c : {CoefficientSet::laplace(), kCoupled})
        for (const auto& test : gamma_test_pairs(kDomain, 1, Channels::Both)) {
            const auto rows = adjoint_identity_check(m, c, BoundaryData::constant(1, 0.5), radial_unit(), test, grid);
            // least-squares slope of log|remainder| against log sigma
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (const auto& r : rows) {
                const double x = std::log(r.sigma), y = std::log(std::abs(r.remainder));
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            const double n = static_cast<double>(rows.size());
            const double k = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            const auto& mid = rows[2];
            const double gap = std::abs(mid.lhs / mid.rhs_scaled - 1.0);
            MESSAGE(test.label << ": slope " << k << ", gap at 0.01 " << gap);
            CHECK(k >= 1.7);
            CHECK(k <= 2.3);
            CHECK(gap <= 0.03);
        }
}

TEST_CASE("identity RHS matches the closed-form annulus derivative")
{
    // P(r0) = 2 pi / ln(1/r0) for phi = 1, eta = 1; dP/dr0 = 2 pi / (r0 ln(1/r0)^2)
    const auto m = annulus(0.03);
    const auto rows = adjoint_identity_check(m, CoefficientSet::laplace(), BoundaryData::constant(1, 0), radial_unit(),
                                             gamma_test_pairs(kDomain, 1, Channels::Alpha)[0], {0.01});
    const double l = std::log(1.0 / 0.3);
    const double exact = 2.0 * kPi / (0.3 * l * l);
    CHECK(std::abs(rows[0].rhs_scaled / 0.01 / exact - 1.0) <= 0.02);
}

TEST_CASE("K columns match finite differences")
{
    const ObstacleShape ob({0.05, -0.03}, 0.3, {0, 0.02, 0, 0.01});
    const auto m = build_mesh(kDomain, ob, 0.03);
    const auto data = generic_data();
    const auto fwd = solve_forward(m, kCoupled, data);
    const auto tests = gamma_test_pairs(kDomain, 3, Channels::Both);
    const std::size_t p = 5;
    const auto k = sensitivity_matrix(m, kCoupled, fwd, ob, p, tests);
    REQUIRE(k.entries.rows() == 6);
    REQUIRE(k.entries.cols() == 5);
    CHECK(k.basis_labels == std::vector<std::string>{"1", "cos(t)", "sin(t)", "cos(2t)", "sin(2t)"});
    CHECK(k.testfn_labels.front() == "eta:1");

    const auto t0 = observation::normal_trace(fwd, m);
    const double s = 1e-3;
    for (std::size_t i = 0; i < p; ++i) {
        const auto md = apply_deformation(m, mode_field(ob.center(), i), s);
        const auto ts = observation::normal_trace(solve_forward(md, kCoupled, data), md);
        Eigen::VectorXd fd(static_cast<Eigen::Index>(tests.size()));
        for (std::size_t j = 0; j < tests.size(); ++j)
            fd[static_cast<Eigen::Index>(j)] = -(gamma_projection(ts, tests[j]) - gamma_projection(t0, tests[j])) / s;
        const double rel = (fd - k.entries.col(static_cast<Eigen::Index>(i))).norm() / fd.norm();
        MESSAGE("column " << i << ": relative gap " << rel);
        CHECK(rel <= 0.05);
    }
}

TEST_CASE("annulus K11 equals the product of closed-form fluxes")
{
    const auto m = annulus(0.03);
    const auto fwd = solve_forward(m, CoefficientSet::laplace(), BoundaryData::constant(1, 0));
    const auto k = sensitivity_matrix(m, CoefficientSet::laplace(), fwd, ObstacleShape::circle({0, 0}, 0.3), 1,
                                      gamma_test_pairs(kDomain, 1, Channels::Alpha));
    const double flux = -1.0 / (0.3 * std::log(1.0 / 0.3));
    // e_r.n = -1 with n pointing into the obstacle
    const double exact = -2.0 * kPi * 0.3 * flux * flux;
    CHECK(std::abs(k.entries(0, 0) / exact - 1.0) <= 0.05);
}

TEST_CASE("zero forward solution gives K = 0 and p = 0 is rejected")
{
    const auto m = annulus(0.1);
    const auto fwd = solve_forward(m, kCoupled, BoundaryData::zero());
    const auto ob = ObstacleShape::circle({0, 0}, 0.3);
    const auto tests = gamma_test_pairs(kDomain, 2, Channels::Both);
    const auto k = sensitivity_matrix(m, kCoupled, fwd, ob, 3, tests);
    CHECK(k.entries.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK_THROWS_AS(sensitivity_matrix(m, kCoupled, fwd, ob, 0, tests), InvalidInput);
}

TEST_CASE("K is invariant under a joint rotation of obstacle and basis")
{
    // rotationally invariant data and tests; rotating the modes by phi mixes
    // cos(m t), sin(m t) with the matrix R below, so K(rotated) R = K(original)
    const double phi = 0.7;
    const auto tests = gamma_test_pairs(kDomain, 1, Channels::Both);
    const BoundaryData data = BoundaryData::constant(1, 0.5);
    const std::size_t p = 5;
    auto run = [&](double angle) {
        const Vec2 c(0.1 * std::cos(angle), 0.1 * std::sin(angle));
        const double a = 0.02;
        const ObstacleShape ob(c, 0.3, {0, 0, 0, a * std::cos(2 * angle), a * std::sin(2 * angle)});
        const auto m = build_mesh(kDomain, ob, 0.02);
        return sensitivity_matrix(m, kCoupled, solve_forward(m, kCoupled, data), ob, p, tests).entries;
    };
    const Eigen::MatrixXd k0 = run(0.0);
    const Eigen::MatrixXd k1 = run(phi);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(p, p);
    r(0, 0) = 1;
    for (std::size_t mm = 1; 2 * mm < p + 1; ++mm) {
        const double cm = std::cos(static_cast<double>(mm) * phi), sm = std::sin(static_cast<double>(mm) * phi);
        const auto ic = static_cast<Eigen::Index>(2 * mm - 1), is = ic + 1;
        // f_i(t - phi) expressed in the unrotated modes
        r(ic, ic) = cm;
        r(is, ic) = sm;
        r(ic, is) = -sm;
        r(is, is) = cm;
    }
    const double gap = (k1 * r - k0).norm() / k0.norm();
    MESSAGE("rotation gap " << gap);
    CHECK(gap <= 1e-3);
}

TEST_CASE("consistency chain between K and the identity RHS")
{
    const ObstacleShape ob({0.05, -0.03}, 0.3, {0, 0.02});
    const auto m = build_mesh(kDomain, ob, 0.05);
    const auto data = generic_data();
    const auto tests = gamma_test_pairs(kDomain, 2, Channels::Both);
    const std::vector<double> lambda{0.3, -0.2, 0.5, 0.1, -0.4};
    const auto k = sensitivity_matrix(m, kCoupled, solve_forward(m, kCoupled, data), ob, lambda.size(), tests);
    auto f = [&](double t) {
        double s = 0;
        for (std::size_t i = 0; i < lambda.size(); ++i) s += lambda[i] * trig_basis(i, t);
        return s;
    };
    auto df = [&](double t) {
        double s = 0;
        for (std::size_t i = 0; i < lambda.size(); ++i) s += lambda[i] * trig_basis_derivative(i, t);
        return s;
    };
    const auto mu = mode_field(ob.center(), f, df);
    const Eigen::Map<const Eigen::VectorXd> lam(lambda.data(), static_cast<Eigen::Index>(lambda.size()));
    const Eigen::VectorXd via_k = -k.entries * lam;
    for (std::size_t j = 0; j < tests.size(); ++j) {
        const double s = 1e-3;
        const auto rows = adjoint_identity_check(m, kCoupled, data, mu, tests[j], {s});
        const double rhs = rows[0].rhs_scaled / s;
        CHECK(std::abs(rhs - via_k[static_cast<Eigen::Index>(j)]) <= 1e-8 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("shape derivative: tangential field gives zero")
{
    const auto m = annulus(0.05);
    const auto fwd = solve_forward(m, kCoupled, BoundaryData::constant(1, 0.5));
    const auto mu = rotation_field({0, 0}, 1.0, SmoothCutoff{}, *kDomain.safety);
    const auto d = solve_shape_derivative(m, kCoupled, fwd, mu);
    CHECK(d.y.lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK(d.z.lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("shape derivative: linear in mu")
{
    const ObstacleShape ob({0.05, -0.03}, 0.3);
    const auto m = build_mesh(kDomain, ob, 0.05);
    const auto fwd = solve_forward(m, kCoupled, generic_data());
    const auto mu1 = mode_field(ob.center(), 1);
    const auto mu2 = rotation_field({0.1, 0}, 0.7, SmoothCutoff{}, *kDomain.safety);
    const DeformationField sum([&](const Vec2& x) { return Vec2(2.0 * mu1(x) - 3.0 * mu2(x)); }, *kDomain.safety,
                               2.0 * mu1.lipschitz_bound() + 3.0 * mu2.lipschitz_bound());
    const auto d1 = solve_shape_derivative(m, kCoupled, fwd, mu1);
    const auto d2 = solve_shape_derivative(m, kCoupled, fwd, mu2);
    const auto ds = solve_shape_derivative(m, kCoupled, fwd, sum);
    const double scale = std::max(1.0, ds.y.lpNorm<Eigen::Infinity>());
    CHECK((ds.y - (2.0 * d1.y - 3.0 * d2.y)).lpNorm<Eigen::Infinity>() <= 1e-10 * scale);
    CHECK((ds.z - (2.0 * d1.z - 3.0 * d2.z)).lpNorm<Eigen::Infinity>() <= 1e-10 * scale);
}

TEST_CASE("shape derivative: radial annulus against the r0-derivative")
{
    // y = ln(r/r0)/ln(1/r0); dy/dr0 = -1/(r0 L) + ln(r/r0)/(r0 L^2), L = ln(1/r0)
    const double r0 = 0.3, l = std::log(1.0 / r0);
    const auto m = annulus(0.05);
    const auto fwd = solve_forward(m, CoefficientSet::laplace(), BoundaryData::constant(1, 0));
    const auto d = solve_shape_derivative(m, CoefficientSet::laplace(), fwd, radial_unit());
    double num = 0, den = 0;
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
        const double r = m.vertices[v].norm();
        const double exact = -1.0 / (r0 * l) + std::log(r / r0) / (r0 * l * l);
        const double e = d.y[static_cast<Eigen::Index>(v)] - exact;
        num += e * e;
        den += exact * exact;
    }
    CHECK(std::sqrt(num / den) <= 0.03);
    // outer flux of y' is d/dr0 of 1/ln(1/r0)
    const auto t = observation::normal_trace(d, m);
    const double flux = 1.0 / (r0 * l * l);
    CHECK(std::abs(t.alpha.mean() / flux - 1.0) <= 0.03);
}

TEST_CASE("shape derivative: forward finite differences")
{
    const ObstacleShape ob({0.05, -0.03}, 0.3, {0, 0.02});
    const auto m = build_mesh(kDomain, ob, 0.03);
    const auto data = generic_data();
    const auto fwd = solve_forward(m, kCoupled, data);
    const auto mu = mode_field(ob.center(), 2);
    const auto td = observation::normal_trace(solve_shape_derivative(m, kCoupled, fwd, mu), m);
    const double s = 1e-3;
    const auto md = apply_deformation(m, mu, s);
    const auto ts = observation::normal_trace(solve_forward(md, kCoupled, data), md);
    const auto t0 = observation::normal_trace(fwd, m);
    const Eigen::VectorXd fa = (ts.alpha - t0.alpha) / s, fb = (ts.beta - t0.beta) / s;
    const double gap = std::sqrt(td.inner(td.alpha - fa, td.alpha - fa) + td.inner(td.beta - fb, td.beta - fb));
    const double ref = std::sqrt(td.inner(fa, fa) + td.inner(fb, fb));
    MESSAGE("relative gap " << gap / ref);
    CHECK(gap <= 0.05 * ref);
}

TEST_CASE("csv exports")
{
    SensitivityMatrix k{Eigen::MatrixXd::Identity(2, 2), {"1", "cos(t)"}, {"a", "b"}, ObstacleShape::circle({0, 0}, 0.3)};
    std::ostringstream os;
    write_sensitivity_csv(os, k);
    CHECK(os.str() == "i,j,value\n1,1,1\n2,1,0\n1,2,0\n2,2,1\n");
    std::ostringstream is;
    write_identity_csv(is, {{0.5, 1.0, 0.75, 0.25}});
    CHECK(is.str() == "sigma,lhs,rhs_scaled,remainder\n0.5,1,0.75,0.25\n");
}
