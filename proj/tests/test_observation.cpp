#include "geoinv/observation/trace.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace geoinv;
using namespace geoinv::geometry;
using namespace geoinv::fem;
using namespace geoinv::observation;

namespace {

TriangleMesh annulus(double h, std::size_t symmetry = 1)
{
    return build_mesh(Domain{}, ObstacleShape::circle({0, 0}, 0.3), h, symmetry);
}

}  // namespace

TEST_CASE("zero solution has zero traces")
{
    const auto m = annulus(0.1);
    const auto s = solve_forward(m, {1, 1, 1, 1}, BoundaryData::zero());
    const auto t = normal_trace(s, m);
    CHECK(t.alpha.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(t.beta.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(std::abs(t.length() - t.weights.sum()) <= 1e-10);
}

TEST_CASE("annulus outer flux")
{
    const auto m = annulus(0.05);
    const auto t = normal_trace(solve_forward(m, CoefficientSet::laplace(), BoundaryData::constant(1, 0)), m);
    const double exact = 1.0 / std::log(1.0 / 0.3);
    CHECK(exact == doctest::Approx(0.83058).epsilon(1e-5));
    double worst = 0.0;
    for (Eigen::Index k = 0; k < t.alpha.size(); ++k) worst = std::max(worst, std::abs(t.alpha[k] / exact - 1.0));
    MESSAGE("worst relative flux error " << worst);
    CHECK(worst <= 0.02);
    CHECK(t.closed);
    // lumped weights sum to the polygonal length of the circle
    double perimeter = 0.0;
    for (std::size_t e = 0; e < t.num_edges(); ++e) perimeter += t.edge_length(e);
    CHECK(std::abs(t.weights.sum() - perimeter) <= 1e-10);
}

TEST_CASE("linear field on the disk has flux n1")
{
    const auto m = build_mesh(Domain{}, std::nullopt, 0.05);
    BoundaryData data;
    data.phi = [](const Vec2& x) { return x.x(); };
    const auto t = normal_trace(solve_forward(m, CoefficientSet::laplace(), data), m);
    for (std::size_t k = 0; k < t.size(); ++k) {
        const Vec2 n = t.points[k].normalized();
        CHECK(std::abs(t.alpha[static_cast<Eigen::Index>(k)] - n.x()) <= 0.02);
    }
}

TEST_CASE("obstacle flux of the annulus")
{
    const auto m = annulus(0.05);
    const auto t = obstacle_trace(solve_forward(m, CoefficientSet::laplace(), BoundaryData::constant(1, 0)), m);
    // n points into the obstacle: dy/dn = -1/(r0 ln(1/r0))
    const double exact = -1.0 / (0.3 * std::log(1.0 / 0.3));
    CHECK(std::abs(t.alpha.mean() / exact - 1.0) <= 0.02);
}

TEST_CASE("flux converges for a manufactured solution")
{
    const oracle::Manufactured ms;
    const CoefficientSet c{ms.a, ms.b, ms.A, ms.B};
    const Sources src{[&](const Vec2& x) { return ms.f(x); }, [&](const Vec2& x) { return ms.g(x); }};
    std::vector<double> err;
    for (double h : {0.1, 0.05, 0.025}) {
        const auto m = annulus(h);
        const auto t = normal_trace(solve_forward(m, c, BoundaryData::zero(), src), m);
        // on |x| = 1: grad w = -2(1 - r0^2) x, so dy/dn = -2 (1 - r0^2) sin(pi x1) sin(pi x2)
        Eigen::VectorXd exact(t.alpha.size()), exact_z(t.alpha.size());
        for (std::size_t k = 0; k < t.size(); ++k) {
            const Vec2 x = t.points[k];
            exact[static_cast<Eigen::Index>(k)] = -2.0 * (1 - ms.r0 * ms.r0) * std::sin(kPi * x.x()) * std::sin(kPi * x.y());
            exact_z[static_cast<Eigen::Index>(k)] = -2.0 * (1 - ms.r0 * ms.r0) * x.x() * x.y();
        }
        const Eigen::VectorXd da = t.alpha - exact, db = t.beta - exact_z;
        err.push_back(std::sqrt((t.weights.array() * (da.array().square() + db.array().square())).sum()));
    }
    MESSAGE("flux errors " << err[0] << " " << err[1] << " " << err[2]);
    CHECK(oracle::observed_order(err[0], err[1]) >= 1.5);
    CHECK(oracle::observed_order(err[1], err[2]) >= 1.5);
}

TEST_CASE("internal trace of the annulus")
{
    Domain d;
    d.safety = Disk{{0, 0}, 0.5};
    const auto m = build_mesh(d, ObstacleShape::circle({0, 0}, 0.3), 0.03, 8);
    const auto s = solve_forward(m, CoefficientSet::laplace(), BoundaryData::constant(1, 0));
    const Disk omega{{0.7, 0.0}, 0.01};
    const auto t = internal_trace(s, m, omega, 6, d);
    REQUIRE(t.size() > 0);
    CHECK(std::abs(t.weights.sum() - kPi * 1e-4) <= 1e-15);
    for (std::size_t k = 0; k < t.size(); ++k)
        CHECK(std::abs(t.values[static_cast<Eigen::Index>(k)] / oracle::annulus_profile(t.points[k].norm(), 0.3, 1.0) - 1.0) <= 0.02);
    CHECK(std::abs(t.values.mean() / 0.70382 - 1.0) <= 0.02);

    const auto zero = internal_trace(solve_forward(m, CoefficientSet::laplace(), BoundaryData::zero()), m, omega, 6, d);
    CHECK(zero.values.lpNorm<Eigen::Infinity>() == 0.0);

    // a quarter turn is a symmetry of this mesh
    const auto turned = internal_trace(s, m, Disk{{0.0, 0.7}, 0.01}, 6, d);
    std::vector<double> a(t.values.data(), t.values.data() + t.size());
    std::vector<double> b(turned.values.data(), turned.values.data() + turned.size());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-10);

    CHECK_THROWS_AS(internal_trace(s, m, Disk{{0.45, 0}, 0.1}, 4, d), InvalidInput);
    CHECK_THROWS_AS(locate(m, Vec2(0.0, 0.0)), InvalidInput);
}

TEST_CASE("trace distances")
{
    const auto m = annulus(0.08);
    const auto base = normal_trace(solve_forward(m, CoefficientSet::laplace(), BoundaryData::constant(1, 0)), m);
    CHECK(trace_distance(base, base, DistanceMode::L2) == 0.0);
    CHECK(trace_distance(base, base, DistanceMode::HminusSurrogate) == 0.0);

    auto shifted = base;
    shifted.alpha.array() += 0.25;
    CHECK(std::abs(trace_distance(base, shifted, DistanceMode::L2) - 0.25 * std::sqrt(base.length())) <= 1e-10);

    // cos(k theta) versus a constant of the same L2 norm
    auto osc = base, flat = base;
    const double amp = 1.0;
    for (std::size_t k = 0; k < base.size(); ++k) {
        const double th = std::atan2(base.points[k].y(), base.points[k].x());
        osc.alpha[static_cast<Eigen::Index>(k)] += amp * std::cos(8.0 * th);
    }
    const double l2 = trace_distance(base, osc, DistanceMode::L2);
    flat.alpha.array() += l2 / std::sqrt(base.length());
    CHECK(trace_distance(base, flat, DistanceMode::L2) == doctest::Approx(l2));
    CHECK(trace_distance(base, osc, DistanceMode::HminusSurrogate) <=
          0.5 * trace_distance(base, flat, DistanceMode::HminusSurrogate));

    // metric checks on a small family
    auto third = base;
    third.beta.array() -= 0.1;
    for (auto mode : {DistanceMode::L2, DistanceMode::HminusSurrogate}) {
        CHECK(trace_distance(osc, flat, mode) == trace_distance(flat, osc, mode));
        CHECK(trace_distance(osc, third, mode) <= trace_distance(osc, flat, mode) + trace_distance(flat, third, mode) + 1e-12);
    }

    // linearity of the recovery
    BoundaryData d1 = BoundaryData::constant(1, 0), d2;
    d2.phi = [](const Vec2& x) { return x.y(); };
    d2.psi = [](const Vec2& x) { return x.x() * x.x(); };
    BoundaryData sum;
    sum.phi = [](const Vec2& x) { return 1.0 + 2.0 * x.y(); };
    sum.psi = [](const Vec2& x) { return 2.0 * x.x() * x.x(); };
    const CoefficientSet c{0.4, 1.0, -0.5, 0.2};
    const auto t1 = normal_trace(solve_forward(m, c, d1), m);
    const auto t2 = normal_trace(solve_forward(m, c, d2), m);
    const auto ts = normal_trace(solve_forward(m, c, sum), m);
    CHECK((ts.alpha - t1.alpha - 2.0 * t2.alpha).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((ts.beta - t1.beta - 2.0 * t2.beta).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("empty gamma is rejected")
{
    // a mesh without GAMMA edges
    auto m = annulus(0.2);
    for (auto& e : m.boundary_edges)
        if (e.tag == BoundaryTag::Gamma) e.tag = BoundaryTag::Outer;
    const auto s = solve_forward(m, CoefficientSet::laplace(), BoundaryData::constant(1, 0));
    CHECK_THROWS_AS(normal_trace(s, m), InvalidInput);
}
