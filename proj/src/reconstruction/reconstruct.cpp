#include "geoinv/reconstruction/reconstruct.hpp"

#include "geoinv/io/csv.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace geoinv::reconstruction {

using geometry::TriangleMesh;

void ReconstructionConfig::validate() const
{
    if (p < 1) throw InvalidInput("reconstruction: p must be at least 1");
    if (!(tau > 0.0 && tau <= 1.0)) throw InvalidInput("reconstruction: tau must lie in (0, 1]");
    if (!(residual_tolerance > 0.0) || !(shape_tolerance > 0.0))
        throw InvalidInput("reconstruction: tolerances must be positive");
    if (!(rho_factor >= 0.0)) throw InvalidInput("reconstruction: rho must be non-negative");
    if (svd_truncation && !(*svd_truncation > 0.0 && *svd_truncation < 1.0))
        throw InvalidInput("reconstruction: svd_truncation must lie in (0, 1)");
    if (!(mesh_size > 0.0)) throw InvalidInput("reconstruction: mesh_size must be positive");
    if (!(noise_level >= 0.0)) throw InvalidInput("reconstruction: noise_level must be non-negative");
    if (mode == ObservationMode::Boundary && test_modes == 0)
        throw InvalidInput("reconstruction: test_modes must be at least 1");
    if (mode == ObservationMode::Internal && internal_tests == 0)
        throw InvalidInput("reconstruction: internal_tests must be at least 1");
}

namespace {

void require_same_samples(const std::vector<Vec2>& a, const std::vector<Vec2>& b)
{
    if (a.size() != b.size()) throw InvalidInput("observations have different sample counts");
    for (std::size_t k = 0; k < a.size(); ++k)
        if ((a[k] - b[k]).norm() > 1e-12) throw InvalidInput("observations are sampled at different points");
}

double norm(const Observation& obs)
{
    if (const auto* t = std::get_if<BoundaryTrace>(&obs))
        return std::sqrt(t->inner(t->alpha, t->alpha) + t->inner(t->beta, t->beta));
    const auto& t = std::get<InternalTrace>(obs);
    return std::sqrt(t.weights.dot(t.values.cwiseAbs2()));
}

}  // namespace

Vector residual_projection(const BoundaryTrace& target, const BoundaryTrace& current,
                           const std::vector<TestPair>& tests)
{
    require_same_samples(target.points, current.points);
    const Vector da = target.alpha - current.alpha;
    const Vector db = target.beta - current.beta;
    Vector r(static_cast<Eigen::Index>(tests.size()));
    Vector eta(da.size()), theta(da.size());
    for (std::size_t j = 0; j < tests.size(); ++j) {
        for (std::size_t k = 0; k < current.size(); ++k) {
            eta[static_cast<Eigen::Index>(k)] = tests[j].eta(current.points[k]);
            theta[static_cast<Eigen::Index>(k)] = tests[j].theta(current.points[k]);
        }
        r[static_cast<Eigen::Index>(j)] = -(current.inner(da, eta) + current.inner(db, theta));
    }
    return r;
}

Vector residual_projection(const InternalTrace& target, const InternalTrace& current,
                           const std::vector<InternalTest>& tests)
{
    require_same_samples(target.points, current.points);
    const Vector d = target.values - current.values;
    Vector r(static_cast<Eigen::Index>(tests.size()));
    for (std::size_t j = 0; j < tests.size(); ++j) {
        double s = 0.0;
        for (std::size_t q = 0; q < current.size(); ++q) {
            const auto qi = static_cast<Eigen::Index>(q);
            s += current.weights[qi] * tests[j].rho(current.points[q]) * d[qi];
        }
        r[static_cast<Eigen::Index>(j)] = -s;
    }
    return r;
}

double misfit(const Observation& target, const Observation& current)
{
    if (target.index() != current.index()) throw InvalidInput("observations are of different kinds");
    if (const auto* t = std::get_if<BoundaryTrace>(&target)) {
        const auto& c = std::get<BoundaryTrace>(current);
        require_same_samples(t->points, c.points);
        const Vector da = t->alpha - c.alpha, db = t->beta - c.beta;
        return std::sqrt(c.inner(da, da) + c.inner(db, db));
    }
    const auto& t = std::get<InternalTrace>(target);
    const auto& c = std::get<InternalTrace>(current);
    require_same_samples(t.points, c.points);
    return std::sqrt(c.weights.dot((t.values - c.values).cwiseAbs2()));
}

ShapeUpdate update_shape(const ObstacleShape& shape, const Vector& lambda, double tau, const geometry::Domain& domain)
{
    if (!lambda.allFinite()) throw InvalidInput("update_shape: lambda is not finite");
    for (int halvings = 0; halvings <= 20; ++halvings) {
        std::vector<double> delta(static_cast<std::size_t>(lambda.size()));
        for (Eigen::Index i = 0; i < lambda.size(); ++i) delta[static_cast<std::size_t>(i)] = tau * lambda[i];
        ObstacleShape next = shape.perturbed(delta);
        if (next.violations(domain).empty()) return {std::move(next), tau};
        tau *= 0.5;
    }
    throw NumericalError("step collapse");
}

Observation observe(const ForwardProblem& problem, const TriangleMesh& mesh, const fem::FieldPair& solution,
                    const ReconstructionConfig& config)
{
    if (config.mode == ObservationMode::Boundary) return observation::normal_trace(solution, mesh);
    return observation::internal_trace(solution, mesh, config.omega, config.omega_resolution, problem.domain);
}

Observation add_noise(const Observation& obs, double level, std::uint64_t seed)
{
    if (level == 0.0) return obs;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Observation out = obs;
    if (auto* t = std::get_if<BoundaryTrace>(&out)) {
        const double n = static_cast<double>(2 * t->size());
        const double rms = std::sqrt((t->alpha.squaredNorm() + t->beta.squaredNorm()) / n);
        for (Eigen::Index k = 0; k < t->alpha.size(); ++k) t->alpha[k] += level * rms * normal(rng);
        for (Eigen::Index k = 0; k < t->beta.size(); ++k) t->beta[k] += level * rms * normal(rng);
    } else {
        auto& it = std::get<InternalTrace>(out);
        const double rms = std::sqrt(it.values.squaredNorm() / static_cast<double>(it.size()));
        for (Eigen::Index k = 0; k < it.values.size(); ++k) it.values[k] += level * rms * normal(rng);
    }
    return out;
}

Observation synthesize(const ForwardProblem& problem, const ObstacleShape& truth, const ReconstructionConfig& config)
{
    truth.validate(problem.domain);
    const TriangleMesh mesh = geometry::build_mesh(problem.domain, truth, config.mesh_size);
    const auto sol = fem::solve_forward(mesh, problem.coeffs, problem.data);
    return add_noise(observe(problem, mesh, sol, config), config.noise_level, config.seed);
}

StepSolve solve_step(const shape_gradient::SensitivityMatrix& k, const Vector& r, const ReconstructionConfig& config)
{
    const Eigen::MatrixXd& a = k.entries;
    if (r.size() != a.rows()) throw InvalidInput("solve_step: residual length does not match K");
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector s = svd.singularValues();
    StepSolve out{Vector::Zero(a.cols()), std::numeric_limits<double>::infinity(), 0};
    const double smax = s.size() ? s[0] : 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > config.rank_tolerance * k.scale) ++out.rank;
    if (s.size() == a.cols() && s[s.size() - 1] > 0.0) out.cond = smax / s[s.size() - 1];
    if (smax == 0.0) return out;

    const Vector ur = svd.matrixU().transpose() * r;
    Vector coef = Vector::Zero(s.size());
    if (config.svd_truncation) {
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (s[i] > *config.svd_truncation * smax) coef[i] = ur[i] / s[i];
    } else {
        // (K^T K + rho I) lambda = K^T r, expressed in the SVD basis
        const double rho = config.rho_factor * smax * smax;
        for (Eigen::Index i = 0; i < s.size(); ++i) coef[i] = s[i] * ur[i] / (s[i] * s[i] + rho);
    }
    out.lambda = svd.matrixV() * coef;
    return out;
}

namespace {

struct State {
    ObstacleShape shape;
    TriangleMesh mesh;
    fem::FieldPair forward;
    Observation obs;
    double residual;
};

}  // namespace

ReconstructionResult reconstruct(const Observation& target, const ObstacleShape& initial,
                                 const ForwardProblem& problem, const ReconstructionConfig& config,
                                 const std::optional<ObstacleShape>& truth)
{
    config.validate();
    problem.domain.validate();
    initial.validate(problem.domain);
    const bool boundary = config.mode == ObservationMode::Boundary;
    if (boundary != std::holds_alternative<BoundaryTrace>(target))
        throw InvalidInput("reconstruct: target observation does not match the configured mode");

    const double h = config.mesh_size;
    const std::size_t p = config.p;
    std::vector<TestPair> tests;
    std::vector<InternalTest> itests;
    if (boundary)
        tests = shape_gradient::gamma_test_pairs(problem.domain, config.test_modes, config.channels);
    else
        itests = shape_gradient::omega_test_functions(config.omega, config.internal_tests);

    auto evaluate = [&](ObstacleShape shape, TriangleMesh mesh) {
        auto fwd = fem::solve_forward(mesh, problem.coeffs, problem.data);
        auto obs = observe(problem, mesh, fwd, config);
        const double res = misfit(target, obs);
        return State{std::move(shape), std::move(mesh), std::move(fwd), std::move(obs), res};
    };

    ReconstructionResult result;
    const double target_norm = norm(target);
    result.noise_floor = config.noise_level * target_norm;

    ObstacleShape start = initial.padded(p);
    State cur = evaluate(start, geometry::build_mesh(problem.domain, start, h));
    ObstacleShape anchor = start;  // shape at the last full remesh
    const double nan = std::numeric_limits<double>::quiet_NaN();
    bool settled = false;  // last accepted step moved less than shape_tolerance

    for (std::size_t it = 0;; ++it) {
        IterationRecord rec;
        rec.iteration = it;
        rec.shape = cur.shape;
        rec.residual = cur.residual;
        rec.hausdorff = truth ? geometry::hausdorff_distance(cur.shape, *truth) : nan;
        rec.cond_k = nan;
        StepSolve step;
        try {
            // K is formed even at a converged iterate: its rank is the identifiability diagnostic
            shape_gradient::SensitivityMatrix k;
            Vector r;
            if (boundary) {
                k = shape_gradient::sensitivity_matrix(cur.mesh, problem.coeffs, cur.forward, cur.shape, p, tests);
                r = residual_projection(std::get<BoundaryTrace>(target), std::get<BoundaryTrace>(cur.obs), tests);
            } else {
                const auto& tgt = std::get<InternalTrace>(target);
                k = shape_gradient::internal_sensitivity_matrix(cur.mesh, problem.coeffs, cur.forward, cur.shape, p,
                                                                tgt.points, tgt.weights, itests);
                r = residual_projection(tgt, std::get<InternalTrace>(cur.obs), itests);
            }
            step = solve_step(k, r, config);
            if (config.step_hook) config.step_hook(step.lambda);
        } catch (const std::exception& e) {
            result.error = e.what();
            result.stop_reason = "error";
            result.history.push_back(std::move(rec));
            break;
        }
        rec.lambda = step.lambda;
        rec.cond_k = step.cond;
        rec.rank = step.rank;
        if (step.rank < p) {
            result.rank_deficient = true;
            result.error = "rank-deficient sensitivity matrix: numerical rank " + std::to_string(step.rank) +
                           " < p = " + std::to_string(p);
            result.stop_reason = "rank deficiency";
            result.history.push_back(std::move(rec));
            break;
        }
        if (settled || cur.residual <= config.residual_tolerance * target_norm) {
            result.converged = true;
            result.stop_reason = settled ? "shape tolerance" : "residual tolerance";
            result.history.push_back(std::move(rec));
            break;
        }
        if (it >= config.max_iterations) {
            result.stop_reason = "max iterations";
            result.history.push_back(std::move(rec));
            break;
        }
        try {
            // backtracking: accept the first step that does not raise the misfit
            double tau = config.tau;
            std::optional<State> next;
            for (std::size_t b = 0; b <= config.max_backtracks; ++b) {
                const ShapeUpdate upd = update_shape(cur.shape, step.lambda, tau, problem.domain);
                TriangleMesh mesh;
                bool remeshed = geometry::hausdorff_distance(upd.shape, anchor) > 0.2 * h;
                if (!remeshed) {
                    try {
                        mesh = geometry::relocate_mesh(cur.mesh, cur.shape, upd.shape);
                    } catch (const NumericalError&) {
                        remeshed = true;
                    }
                }
                if (remeshed) mesh = geometry::build_mesh(problem.domain, upd.shape, h);
                State trial = evaluate(upd.shape, std::move(mesh));
                if (trial.residual <= cur.residual) {
                    if (remeshed) anchor = upd.shape;
                    rec.tau_eff = upd.tau_eff;
                    next = std::move(trial);
                    break;
                }
                tau = 0.5 * upd.tau_eff;
            }
            if (!next) {
                result.stop_reason = "no descent after backtracking";
                result.history.push_back(std::move(rec));
                break;
            }
            const double moved = rec.tau_eff * step.lambda.lpNorm<Eigen::Infinity>();
            result.history.push_back(std::move(rec));
            cur = std::move(*next);
            settled = moved <= config.shape_tolerance;
        } catch (const std::exception& e) {
            result.error = e.what();
            result.stop_reason = "error";
            result.history.push_back(std::move(rec));
            break;
        }
    }
    return result;
}

void write_history_csv(std::ostream& os, const ReconstructionResult& result, std::size_t p)
{
    std::vector<std::string> header{"iter", "residual", "hausdorff", "cond_K", "tau_eff"};
    for (std::size_t i = 1; i <= p; ++i) header.push_back("lambda_" + std::to_string(i));
    io::CsvWriter csv(os, header);
    for (const auto& r : result.history) {
        std::vector<std::string> cells{std::to_string(r.iteration), io::format_double(r.residual),
                                       io::format_double(r.hausdorff), io::format_double(r.cond_k),
                                       io::format_double(r.tau_eff)};
        for (std::size_t i = 0; i < p; ++i)
            cells.push_back(io::format_double(
                static_cast<Eigen::Index>(i) < r.lambda.size() ? r.lambda[static_cast<Eigen::Index>(i)] : 0.0));
        csv.cells(cells);
    }
}

}  // namespace geoinv::reconstruction
