#include "geoinv/reconstruction/reconstruct.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace geoinv;
using namespace geoinv::geometry;
using namespace geoinv::fem;
using namespace geoinv::reconstruction;
using shape_gradient::Channels;

namespace {

BoundaryTrace outer_trace(double h)
{
    const auto m = build_mesh(Domain{}, ObstacleShape::circle({0, 0}, 0.3), h);
    return observation::normal_trace(solve_forward(m, CoefficientSet::laplace(), BoundaryData::constant(1, 0)), m);
}

TestPair pair(fem::ScalarField eta, fem::ScalarField theta) { return {"t", std::move(eta), std::move(theta)}; }

double angle(const Vec2& x) { return std::atan2(x.y(), x.x()); }

ForwardProblem boundary_problem()
{
    ForwardProblem pb;
    pb.coeffs = CoefficientSet::laplace();
    pb.data = BoundaryData::from_series(pb.domain.outer, {1.0, {0.3}, {0.2}}, {0.5, {}, {0.3}});
    return pb;
}

void check_monotone(const ReconstructionResult& r)
{
    for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k].residual <= r.history[k - 1].residual);
}

}  // namespace

TEST_CASE("residual projection")
{
    const auto t = outer_trace(0.1);
    const auto zero = [](const Vec2&) { return 0.0; };
    const auto one = [](const Vec2&) { return 1.0; };
    const std::vector<TestPair> tests{pair(one, zero), pair(zero, one)};

    SUBCASE("identical traces")
    {
        CHECK(residual_projection(t, t, tests).lpNorm<Eigen::Infinity>() == 0.0);
    }
    SUBCASE("constant alpha residual")
    {
        auto target = t;
        target.alpha.array() += 0.7;
        const auto r = residual_projection(target, t, tests);
        CHECK(std::abs(r[0] + 0.7 * t.length()) <= 1e-10);
        CHECK(std::abs(r[1]) <= 1e-12);
    }
    SUBCASE("trigonometric orthogonality")
    {
        auto target = t;
        for (std::size_t k = 0; k < t.size(); ++k)
            target.alpha[static_cast<Eigen::Index>(k)] += std::cos(8.0 * angle(t.points[k]));
        const std::vector<TestPair> cos3{pair([](const Vec2& x) { return std::cos(3.0 * angle(x)); }, zero)};
        CHECK(std::abs(residual_projection(target, t, cos3)[0]) <= 1e-8);
    }
    SUBCASE("mismatched traces")
    {
        CHECK_THROWS_AS(residual_projection(outer_trace(0.05), t, tests), InvalidInput);
    }
}

TEST_CASE("update_shape")
{
    const Domain d;
    const auto c = ObstacleShape::circle({0, 0}, 0.3);

    SUBCASE("zero step")
    {
        const auto u = update_shape(c, Vector::Zero(3), 0.5, d);
        CHECK(u.shape.radius(1.0) == 0.3);
        CHECK(u.tau_eff == 0.5);
    }
    SUBCASE("constant mode")
    {
        Vector l = Vector::Zero(1);
        l[0] = 0.05;
        const auto u = update_shape(c, l, 1.0, d);
        for (double th : {0.0, 1.0, 2.5, 4.0}) CHECK(u.shape.radius(th) == doctest::Approx(0.35).epsilon(1e-15));
    }
    SUBCASE("infeasible step is halved")
    {
        Vector l = Vector::Zero(2);
        l[1] = 0.5;  // 0.3 + 0.5 cos(t) is negative at t = pi
        const auto u = update_shape(c, l, 1.0, d);
        CHECK(u.tau_eff < 1.0);
        CHECK(u.shape.violations(d).empty());
    }
    SUBCASE("step collapse")
    {
        // start already outside D*: no step length repairs it
        const ObstacleShape bad({0, 0}, 0.72);
        Vector l = Vector::Zero(1);
        l[0] = 0.1;
        CHECK_THROWS_WITH_AS(update_shape(bad, l, 1.0, d), "step collapse", NumericalError);
    }
}

TEST_CASE("config validation")
{
    ReconstructionConfig c;
    c.tau = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = {};
    c.p = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = {};
    c.residual_tolerance = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    CHECK_NOTHROW(ReconstructionConfig{}.validate());
}

TEST_CASE("ground truth is a fixed point")
{
    const auto pb = boundary_problem();
    ReconstructionConfig cfg;
    const auto truth = ObstacleShape::circle({0, 0}, 0.3);
    const auto r = reconstruct(synthesize(pb, truth, cfg), truth, pb, cfg, truth);
    REQUIRE(r.history.size() == 1);
    CHECK(r.converged);
    CHECK(r.history[0].residual == 0.0);
    CHECK(r.history[0].lambda.norm() == 0.0);
}

TEST_CASE("concentric circle recovered from boundary data")
{
    const auto pb = boundary_problem();
    ReconstructionConfig cfg;
    const auto truth = ObstacleShape::circle({0, 0}, 0.3);
    const auto r = reconstruct(synthesize(pb, truth, cfg), ObstacleShape::circle({0, 0}, 0.4), pb, cfg, truth);
    REQUIRE_FALSE(r.error);
    CHECK(r.history.size() <= 31);
    CHECK(r.history.front().hausdorff == doctest::Approx(0.1));
    CHECK(r.history.back().hausdorff <= 0.01);
    check_monotone(r);
}

TEST_CASE("off-center circle recovered with translation modes")
{
    const auto pb = boundary_problem();
    ReconstructionConfig cfg;
    const ObstacleShape truth({0.1, 0}, 0.3);
    const auto r = reconstruct(synthesize(pb, truth, cfg), ObstacleShape::circle({0, 0}, 0.4), pb, cfg, truth);
    REQUIRE_FALSE(r.error);
    CHECK((r.history.back().shape.centroid() - truth.centroid()).norm() <= 0.02);
    check_monotone(r);
}

TEST_CASE("bad step triggers backtracking")
{
    const auto pb = boundary_problem();
    ReconstructionConfig cfg;
    cfg.max_iterations = 3;
    cfg.step_hook = [](Vector& l) { l *= 8.0; };
    const auto truth = ObstacleShape::circle({0, 0}, 0.3);
    const auto r = reconstruct(synthesize(pb, truth, cfg), ObstacleShape::circle({0, 0}, 0.4), pb, cfg, truth);
    REQUIRE(r.history.size() >= 2);
    CHECK(r.history[0].tau_eff < cfg.tau);
    check_monotone(r);
}

TEST_CASE("internal observation")
{
    ForwardProblem pb;
    pb.domain.safety = Disk{{0, 0}, 0.5};
    ReconstructionConfig cfg;
    cfg.mode = ObservationMode::Internal;
    cfg.omega = observation::Omega({0, 0}, 0.9, 0.55);
    cfg.omega_resolution = 30;
    const auto truth = ObstacleShape::circle({0, 0}, 0.3);
    const auto initial = ObstacleShape::circle({0, 0}, 0.4);

    SUBCASE("b != 0 recovers the circle")
    {
        pb.coeffs = {1, 2, -1, 0.5};
        pb.data = BoundaryData::constant(1, 0.5);
        const auto r = reconstruct(synthesize(pb, truth, cfg), initial, pb, cfg, truth);
        REQUIRE_FALSE(r.error);
        CHECK_FALSE(r.rank_deficient);
        CHECK(r.history.back().hausdorff <= 0.1 * r.history.front().hausdorff);
    }
    SUBCASE("b = 0 with data only in z is rank deficient")
    {
        pb.coeffs = {1, 0, -1, 0.5};
        pb.data = BoundaryData::constant(0, 1);
        const auto r = reconstruct(synthesize(pb, truth, cfg), initial, pb, cfg, truth);
        CHECK(r.rank_deficient);
        REQUIRE(r.error);
        CHECK(r.error->find("rank-deficient") != std::string::npos);
        CHECK_FALSE(r.converged);
    }
    SUBCASE("mode mismatch")
    {
        ReconstructionConfig bcfg;
        CHECK_THROWS_AS(reconstruct(synthesize(pb, truth, bcfg), initial, pb, cfg), InvalidInput);
    }
}

TEST_CASE("noise is seeded and the floor reported")
{
    const auto pb = boundary_problem();
    ReconstructionConfig cfg;
    cfg.noise_level = 1e-3;
    cfg.seed = 42;
    const auto truth = ObstacleShape::circle({0, 0}, 0.3);
    const auto a = std::get<BoundaryTrace>(synthesize(pb, truth, cfg));
    const auto b = std::get<BoundaryTrace>(synthesize(pb, truth, cfg));
    CHECK(a.alpha == b.alpha);
    cfg.seed = 43;
    const auto c = std::get<BoundaryTrace>(synthesize(pb, truth, cfg));
    CHECK(a.alpha != c.alpha);
    cfg.seed = 42;
    cfg.max_iterations = 2;
    const auto r = reconstruct(Observation{a}, ObstacleShape::circle({0, 0}, 0.4), pb, cfg, truth);
    CHECK(r.noise_floor > 0.0);
}

TEST_CASE("history csv")
{
    ReconstructionResult r;
    IterationRecord rec;
    rec.iteration = 0;
    rec.shape = ObstacleShape::circle({0, 0}, 0.3);
    rec.residual = 0.5;
    rec.hausdorff = 0.1;
    rec.cond_k = 2;
    rec.tau_eff = 0.5;
    rec.lambda = Vector::Constant(2, 0.25);
    r.history.push_back(rec);
    std::ostringstream os;
    write_history_csv(os, r, 2);
    CHECK(os.str() == "iter,residual,hausdorff,cond_K,tau_eff,lambda_1,lambda_2\n0,0.5,0.10000000000000001,2,0.5,0.25,0.25\n");
}
