#include "geoinv/stability/stability.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace geoinv;
using namespace geoinv::geometry;
using namespace geoinv::fem;
using namespace geoinv::stability;

namespace {

ObservationCurve synthetic(const std::function<double(double)>& d, const std::vector<double>& sigmas)
{
    ObservationCurve c;
    for (double s : sigmas) {
        c.sigma.push_back(s);
        c.distance.push_back(d(s));
        c.valid.push_back(true);
    }
    c.floor = 1e-12;
    return c;
}

SweepSetup laplace_annulus()
{
    SweepSetup s;
    s.problem.coeffs = CoefficientSet::laplace();
    s.problem.data = BoundaryData::constant(1, 0);
    return s;
}

SweepSetup internal_setup()
{
    SweepSetup s;
    s.mode = ObservationMode::Internal;
    s.problem.coeffs = {1, 2, -1, 0.5};
    s.problem.data = BoundaryData::constant(1, 0.5);
    s.problem.domain.safety = Disk{{0, 0}, 0.5};
    s.omega = observation::Omega({0.7, 0}, 0.1);
    return s;
}

SmoothCutoff cutoff_for(const SweepSetup& s)
{
    return s.problem.domain.safety->radius < 0.7 ? SmoothCutoff{{0, 0}, 0.35, 0.48} : SmoothCutoff{};
}

DeformationField radial(const SweepSetup& s)
{
    return radial_unit_field({0, 0}, 1.0, cutoff_for(s), *s.problem.domain.safety, 0.25);
}

DeformationField rotation(const SweepSetup& s)
{
    return rotation_field({0, 0}, 1.0, cutoff_for(s), *s.problem.domain.safety);
}

const ObstacleShape kCircle = ObstacleShape::circle({0, 0}, 0.3);

}  // namespace

TEST_CASE("fit_order on synthetic curves")
{
    const std::vector<double> grid{-0.04, -0.02, -0.01, -0.005, 0.005, 0.01, 0.02, 0.04};
    SUBCASE("pure power law")
    {
        const auto f = fit_order(synthetic([](double s) { return 3.0 * s * s; }, grid));
        CHECK(std::abs(f.k_raw - 2.0) <= 1e-2);
        CHECK(std::abs(f.c / 3.0 - 1.0) <= 1e-2);
        CHECK(f.k_int == 2);
        CHECK(f.residual <= 1e-12);
        CHECK(f.lower_bound_holds);
    }
    SUBCASE("dominant linear term")
    {
        const auto f = fit_order(
            synthetic([](double s) { return std::abs(2.0 * s + 5.0 * s * s * s); }, {0.005, 0.01, 0.02, 0.04, 0.05}));
        CHECK(f.k_raw >= 0.98);
        CHECK(f.k_raw <= 1.05);
    }
    SUBCASE("too few samples above the floor")
    {
        auto c = synthetic([](double s) { return std::abs(s); }, grid);
        c.floor = 0.002;  // only |sigma| = 0.04 clears 10x floor
        CHECK_THROWS_WITH_AS(fit_order(c), "regime unresolved", NumericalError);
    }
}

TEST_CASE("radial sweep on the annulus is first order")
{
    const auto s = laplace_annulus();
    const auto c = observation_curve(s, kCircle, radial(s), default_sigma_grid());
    CHECK(c.resolve_floor <= 1e-8);
    for (std::size_t i = 0; i < c.sigma.size(); ++i) {
        REQUIRE(c.valid[i]);
        if (c.sigma[i] == 0.0) CHECK(c.distance[i] <= c.floor);
    }
    // strictly increasing in |sigma| on each side
    for (std::size_t i = 0; i + 1 < c.sigma.size(); ++i) {
        if (c.sigma[i + 1] <= 0.0) CHECK(c.distance[i] > c.distance[i + 1]);
        if (c.sigma[i] >= 0.0) CHECK(c.distance[i] < c.distance[i + 1]);
    }
    const auto f = fit_order(c);
    MESSAGE("k_raw " << f.k_raw << ", residual " << f.residual);
    CHECK(f.k_raw >= 0.9);
    CHECK(f.k_raw <= 1.1);
    CHECK(f.residual <= 0.05);
    CHECK(f.lower_bound_holds);
    // C against the shape derivative: d/dr0 of 1/ln(1/r0) times the gamma length factor sqrt(2 pi)
    const double l = std::log(1.0 / 0.3);
    CHECK(std::abs(f.c / (std::sqrt(2.0 * kPi) / (0.3 * l * l)) - 1.0) <= 0.1);
}

TEST_CASE("rotation leaves the circular configuration unchanged")
{
    const auto s = laplace_annulus();
    const auto c = observation_curve(s, kCircle, rotation(s), default_sigma_grid());
    for (std::size_t i = 0; i < c.sigma.size(); ++i) {
        REQUIRE(c.valid[i]);
        CHECK(c.distance[i] <= 10.0 * c.floor);
    }
}

TEST_CASE("reflection symmetry of a translation sweep")
{
    // translating along x by -sigma is the mirror image of translating by +sigma
    const auto s = laplace_annulus();
    const auto mu = translation_field({1, 0}, SmoothCutoff{}, *s.problem.domain.safety);
    const auto c = observation_curve(s, kCircle, mu, {-0.02, 0.02, -0.01, 0.01});
    CHECK(std::abs(c.distance[0] - c.distance[1]) <= 2.0 * c.floor);
    CHECK(std::abs(c.distance[2] - c.distance[3]) <= 2.0 * c.floor);
}

TEST_CASE("oversized sigma is marked invalid")
{
    const auto s = laplace_annulus();
    const auto mu = radial(s);
    const auto c = observation_curve(s, kCircle, mu, {0.01, 1.0 / mu.lipschitz_bound()});
    CHECK(c.valid[0]);
    CHECK_FALSE(c.valid[1]);
    CHECK(std::isnan(c.distance[1]));
}

TEST_CASE("discrimination")
{
    const auto s = laplace_annulus();
    SUBCASE("same obstacle")
    {
        const auto r = discrimination_test(s, kCircle, kCircle);
        CHECK(r.distance <= r.floor);
        CHECK(r.verdict == Verdict::Indistinguishable);
    }
    SUBCASE("concentric radii 0.30 and 0.35")
    {
        const auto r = discrimination_test(s, kCircle, ObstacleShape::circle({0, 0}, 0.35));
        CHECK(r.verdict == Verdict::Distinguishable);
        CHECK(r.distance > 10.0 * r.floor);
        const double gap = 1.0 / std::log(1.0 / 0.35) - 1.0 / std::log(1.0 / 0.3);
        CHECK(gap == doctest::Approx(0.122).epsilon(0.01));
        CHECK(std::abs(r.distance / (gap * std::sqrt(2.0 * kPi)) - 1.0) <= 0.02);
        CHECK(r.hausdorff == doctest::Approx(0.05).epsilon(1e-3));
    }
    SUBCASE("zero data")
    {
        auto z = s;
        z.problem.data = BoundaryData::zero();
        const auto r = discrimination_test(z, kCircle, ObstacleShape::circle({0, 0}, 0.35));
        CHECK(r.distance == 0.0);
        CHECK(r.verdict == Verdict::Indistinguishable);
    }
}

TEST_CASE("internal observation: discrimination and order")
{
    const auto s = internal_setup();
    const auto r = discrimination_test(s, kCircle, ObstacleShape::circle({0, 0}, 0.35));
    CHECK(r.verdict == Verdict::Distinguishable);
    const auto c = observation_curve(s, kCircle, radial(s), default_sigma_grid());
    const auto f = fit_order(c);
    CHECK(f.k_raw >= 0.9);
    CHECK(f.k_raw <= 1.1);
    CHECK(f.residual <= 0.05);
    const auto t = observation_curve(s, kCircle, rotation(s), default_sigma_grid());
    for (double d : t.distance) CHECK(d <= 10.0 * t.floor);
}

TEST_CASE("third divided differences stay bounded")
{
    const auto s = laplace_annulus();
    const auto dd = divided_differences(s, kCircle, radial(s), {0.02, 0.01, 0.005});
    for (const auto& d : dd) {
        CHECK(std::isfinite(d.third));
        CHECK(d.third <= 2.0 * dd.front().third);
    }
}

TEST_CASE("one-dimensional counterexample")
{
    SUBCASE("reference parameters")
    {
        const auto r = one_dim_counterexample({});
        CHECK(std::abs(r.y0) <= 1e-8);
        CHECK(std::abs(r.z0) <= 1e-8);
        CHECK(std::abs(r.yx0) <= 1e-8);
        CHECK(std::abs(r.zx0 - 1.0) <= 1e-6);
        CHECK(r.residual_y <= 1e-4);
        CHECK(r.residual_z <= 1e-4);
        CHECK(r.y.lpNorm<Eigen::Infinity>() > 1e-3);  // nonzero despite y = y' = 0 at x = 0
    }
    SUBCASE("zero datum")
    {
        CounterexampleParams p;
        p.k = 0.0;
        const auto r = one_dim_counterexample(p);
        CHECK(r.y.lpNorm<Eigen::Infinity>() == 0.0);
        CHECK(r.z.lpNorm<Eigen::Infinity>() == 0.0);
        CHECK(r.zx0 == 0.0);
    }
    SUBCASE("parameter condition")
    {
        CounterexampleParams p;
        p.a = 2.0;
        CHECK_THROWS_AS(one_dim_counterexample(p), InvalidInput);
        p = {};
        p.length = 1.5;
        CHECK_THROWS_AS(one_dim_counterexample(p), InvalidInput);
    }
}

TEST_CASE("csv exports")
{
    ObservationCurve c;
    c.sigma = {0.0, 0.5};
    c.distance = {0.0, 0.25};
    c.valid = {true, false};
    std::ostringstream os;
    write_sweep_csv(os, c);
    CHECK(os.str() == "sigma,distance,valid\n0,0,1\n0.5,0.25,0\n");
    std::ostringstream fs;
    write_fit_csv(fs, {1.5, 2, 3.0, 0.25, 0.5, 4, true});
    CHECK(fs.str() == "k_raw,k_int,C,residual,floor\n1.5,2,3,0.25,0.5\n");
}
