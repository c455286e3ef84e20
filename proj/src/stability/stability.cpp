#include "geoinv/stability/stability.hpp"

#include "geoinv/io/csv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

namespace geoinv::stability {

using geometry::TriangleMesh;

std::vector<double> default_sigma_grid() { return {-0.04, -0.02, -0.01, -0.005, 0.0, 0.005, 0.01, 0.02, 0.04}; }

namespace {

reconstruction::ReconstructionConfig observe_config(const SweepSetup& s)
{
    reconstruction::ReconstructionConfig c;
    c.mode = s.mode;
    c.omega = s.omega;
    c.omega_resolution = s.omega_resolution;
    c.mesh_size = s.mesh_size;
    return c;
}

Observation solve_and_observe(const SweepSetup& s, const TriangleMesh& mesh)
{
    const auto sol = fem::solve_forward(mesh, s.problem.coeffs, s.problem.data);
    return reconstruction::observe(s.problem, mesh, sol, observe_config(s));
}

/// Weighted coefficient vector of an observation: its Euclidean norm is the L2 norm.
Vector weighted(const Observation& obs)
{
    if (const auto* t = std::get_if<observation::BoundaryTrace>(&obs)) {
        const Vector w = t->weights.cwiseSqrt();
        Vector v(2 * w.size());
        v << w.cwiseProduct(t->alpha), w.cwiseProduct(t->beta);
        return v;
    }
    const auto& t = std::get<observation::InternalTrace>(obs);
    return t.weights.cwiseSqrt().cwiseProduct(t.values);
}

/// Reference observation on the h / sqrt(2) mesh, sampled like `coarse`.
Observation fine_observation(const SweepSetup& s, const ObstacleShape& d0, const Observation& coarse)
{
    const TriangleMesh fine_mesh = geometry::build_mesh(s.problem.domain, d0, s.mesh_size / std::sqrt(2.0));
    Observation fine = solve_and_observe(s, fine_mesh);
    if (const auto* t = std::get_if<observation::BoundaryTrace>(&fine))
        fine = observation::resample(*t, std::get<observation::BoundaryTrace>(coarse));
    return fine;
}

/// Two-mesh floor at the reference shape.
double mesh_floor(const SweepSetup& s, const ObstacleShape& d0, const Observation& coarse)
{
    return observation_distance(coarse, fine_observation(s, d0, coarse), s.distance) + 1e-12;
}

}  // namespace

double observation_distance(const Observation& a, const Observation& b, DistanceMode mode)
{
    if (a.index() != b.index()) throw InvalidInput("observation_distance: observations are of different kinds");
    if (const auto* t = std::get_if<observation::BoundaryTrace>(&a))
        return observation::trace_distance(*t, std::get<observation::BoundaryTrace>(b), mode);
    return observation::trace_distance(std::get<observation::InternalTrace>(a),
                                       std::get<observation::InternalTrace>(b), mode);
}

std::vector<ObservationCurve> observation_curves(const SweepSetup& setup, const ObstacleShape& d0,
                                                const DeformationField& mu, const std::vector<double>& sigma_grid,
                                                const std::vector<DistanceMode>& modes)
{
    if (modes.empty()) throw InvalidInput("observation_curves: no distance modes");
    d0.validate(setup.problem.domain);
    const TriangleMesh mesh0 = geometry::build_mesh(setup.problem.domain, d0, setup.mesh_size);
    const Observation obs0 = solve_and_observe(setup, mesh0);
    const Observation again = solve_and_observe(setup, mesh0);
    const Observation fine = fine_observation(setup, d0, obs0);

    const std::size_t n = sigma_grid.size();
    std::vector<ObservationCurve> curves(modes.size());
    for (std::size_t m = 0; m < modes.size(); ++m) {
        curves[m].resolve_floor = observation_distance(obs0, again, modes[m]);
        curves[m].floor = observation_distance(obs0, fine, modes[m]) + 1e-12;
        curves[m].sigma = sigma_grid;
        curves[m].distance.assign(n, std::numeric_limits<double>::quiet_NaN());
    }
    std::vector<char> ok(n, 0);  // not vector<bool>: workers write neighbouring slots
    // each sample writes only its own slot, so the result is independent of scheduling
    auto sample = [&](std::size_t i) {
        try {
            const TriangleMesh m = geometry::apply_deformation(mesh0, mu, sigma_grid[i]);
            const Observation obs = solve_and_observe(setup, m);
            for (std::size_t k = 0; k < modes.size(); ++k) curves[k].distance[i] = observation_distance(obs0, obs, modes[k]);
            ok[i] = 1;
        } catch (const InvalidInput&) {
        } catch (const NumericalError&) {
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(setup.jobs, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) sample(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) sample(i);
            });
    }
    for (auto& c : curves) c.valid.assign(ok.begin(), ok.end());
    return curves;
}

ObservationCurve observation_curve(const SweepSetup& setup, const ObstacleShape& d0, const DeformationField& mu,
                                   const std::vector<double>& sigma_grid)
{
    return std::move(observation_curves(setup, d0, mu, sigma_grid, {setup.distance}).front());
}

StabilityFit fit_order(const ObservationCurve& curve)
{
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < curve.sigma.size(); ++i) {
        if (!curve.valid[i] || curve.sigma[i] == 0.0) continue;
        if (!(curve.distance[i] > 10.0 * curve.floor)) continue;
        lx.push_back(std::log(std::abs(curve.sigma[i])));
        ly.push_back(std::log(curve.distance[i]));
    }
    if (lx.size() < 4) throw NumericalError("regime unresolved");
    const auto n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double den = n * sxx - sx * sx;
    if (!(den > 0.0)) throw NumericalError("regime unresolved");
    StabilityFit f;
    f.k_raw = (n * sxy - sx * sy) / den;
    const double intercept = (sy - f.k_raw * sx) / n;
    f.c = std::exp(intercept);
    f.k_int = std::max(1, static_cast<int>(std::lround(f.k_raw)));
    f.floor = curve.floor;
    f.samples = lx.size();
    double ss = 0.0;
    f.lower_bound_holds = true;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (intercept + f.k_raw * lx[i]);
        ss += r * r;
        if (std::exp(ly[i]) < 0.9 * f.c * std::exp(f.k_raw * lx[i])) f.lower_bound_holds = false;
    }
    f.residual = std::sqrt(ss / n);
    return f;
}

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::Distinguishable: return "distinguishable";
    case Verdict::Indistinguishable: return "indistinguishable";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

DiscriminationReport discrimination_test(const SweepSetup& setup, const ObstacleShape& d0, const ObstacleShape& d1)
{
    d0.validate(setup.problem.domain);
    d1.validate(setup.problem.domain);
    const auto& dom = setup.problem.domain;
    const Observation o0 = solve_and_observe(setup, geometry::build_mesh(dom, d0, setup.mesh_size));
    const Observation o1 = solve_and_observe(setup, geometry::build_mesh(dom, d1, setup.mesh_size));
    DiscriminationReport r;
    r.hausdorff = geometry::hausdorff_distance(d0, d1);
    r.distance = observation_distance(o0, o1, setup.distance);
    r.floor = mesh_floor(setup, d0, o0);
    if (r.distance > 10.0 * r.floor)
        r.verdict = Verdict::Distinguishable;
    else if (r.distance <= r.floor)
        r.verdict = Verdict::Indistinguishable;
    else
        r.verdict = Verdict::Inconclusive;
    return r;
}

std::vector<DividedDifferences> divided_differences(const SweepSetup& setup, const ObstacleShape& d0,
                                                    const DeformationField& mu, const std::vector<double>& steps)
{
    const TriangleMesh mesh0 = geometry::build_mesh(setup.problem.domain, d0, setup.mesh_size);
    const Vector t0 = weighted(solve_and_observe(setup, mesh0));
    std::vector<DividedDifferences> out;
    for (double s : steps) {
        if (!(s > 0.0)) throw InvalidInput("divided_differences: steps must be positive");
        Vector t[4];
        t[0] = t0;
        for (int k = 1; k < 4; ++k)
            t[k] = weighted(solve_and_observe(setup, geometry::apply_deformation(mesh0, mu, k * s)));
        out.push_back({s, (t[1] - t[0]).norm() / s, (t[2] - 2.0 * t[1] + t[0]).norm() / (2.0 * s * s),
                       (t[3] - 3.0 * t[2] + 3.0 * t[1] - t[0]).norm() / (6.0 * s * s * s)});
    }
    return out;
}

namespace {

/// Cumulative trapezoid sums of f on a uniform grid.
Vector cumulative(const Vector& f, double h)
{
    Vector c = Vector::Zero(f.size());
    for (Eigen::Index i = 1; i < f.size(); ++i) c[i] = c[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
    return c;
}

/// integral_0^x f(s) sinh(w (x - s)) ds = sinh(wx) int f cosh(ws) - cosh(wx) int f sinh(ws)
Vector sinh_convolution(const Vector& x, const Vector& f, double w, double h)
{
    const Vector ch = (w * x).array().cosh(), sh = (w * x).array().sinh();
    const Vector ic = cumulative(f.cwiseProduct(ch), h), is = cumulative(f.cwiseProduct(sh), h);
    return sh.cwiseProduct(ic) - ch.cwiseProduct(is);
}

}  // namespace

CounterexampleReport one_dim_counterexample(const CounterexampleParams& p)
{
    if (p.eta == 0.0 || p.zeta == 0.0 || p.b == 0.0 || p.a == 0.0)
        throw InvalidInput("counterexample: eta, zeta, b and A must be nonzero");
    if (!(std::abs(p.a) + std::abs(p.b) < 2.0 * std::abs(p.eta) * std::abs(p.zeta)))
        throw InvalidInput("counterexample: requires |A| + |b| < 2 |eta| |zeta|");
    if (!(p.length > 0.0 && p.length < 1.0)) throw InvalidInput("counterexample: L must lie in (0, 1)");
    if (p.points < 5) throw InvalidInput("counterexample: at least 5 grid points");

    const auto n = static_cast<Eigen::Index>(p.points);
    const double h = p.length / static_cast<double>(n - 1);
    CounterexampleReport r;
    r.x = Vector::LinSpaced(n, 0.0, p.length);
    r.y = Vector::Zero(n);
    r.z = Vector::Zero(n);
    const Vector zfree = (p.k / p.zeta) * (p.zeta * r.x).array().sinh();

    r.sweeps = 0;
    double change = std::numeric_limits<double>::infinity();
    while (r.sweeps < p.max_sweeps && change > p.tolerance) {
        const Vector z = zfree + (p.a / p.zeta) * sinh_convolution(r.x, r.y, p.zeta, h);
        const Vector y = (p.b / p.eta) * sinh_convolution(r.x, z, p.eta, h);
        change = std::max((y - r.y).lpNorm<Eigen::Infinity>(), (z - r.z).lpNorm<Eigen::Infinity>());
        r.y = y;
        r.z = z;
        ++r.sweeps;
        if (!std::isfinite(change)) throw NumericalError("counterexample: fixed-point iteration diverged");
    }
    if (change > p.tolerance) throw NumericalError("counterexample: fixed-point iteration did not settle");

    r.y0 = r.y[0];
    r.z0 = r.z[0];
    // second-order one-sided differences
    r.yx0 = (-3.0 * r.y[0] + 4.0 * r.y[1] - r.y[2]) / (2.0 * h);
    r.zx0 = (-3.0 * r.z[0] + 4.0 * r.z[1] - r.z[2]) / (2.0 * h);
    r.residual_y = r.residual_z = 0.0;
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        const double ypp = (r.y[i - 1] - 2.0 * r.y[i] + r.y[i + 1]) / (h * h);
        const double zpp = (r.z[i - 1] - 2.0 * r.z[i] + r.z[i + 1]) / (h * h);
        r.residual_y = std::max(r.residual_y, std::abs(-ypp + p.eta * p.eta * r.y[i] + p.b * r.z[i]));
        r.residual_z = std::max(r.residual_z, std::abs(-zpp + p.a * r.y[i] + p.zeta * p.zeta * r.z[i]));
    }
    return r;
}

void write_sweep_csv(std::ostream& os, const ObservationCurve& curve)
{
    io::CsvWriter csv(os, {"sigma", "distance", "valid"});
    for (std::size_t i = 0; i < curve.sigma.size(); ++i)
        csv.row(curve.sigma[i], curve.distance[i], static_cast<int>(curve.valid[i]));
}

void write_fit_csv(std::ostream& os, const StabilityFit& fit)
{
    io::CsvWriter csv(os, {"k_raw", "k_int", "C", "residual", "floor"});
    csv.row(fit.k_raw, fit.k_int, fit.c, fit.residual, fit.floor);
}

}  // namespace geoinv::stability
