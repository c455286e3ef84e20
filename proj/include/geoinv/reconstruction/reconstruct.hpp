#pragma once

#include "geoinv/shape_gradient/sensitivity.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

namespace geoinv::reconstruction {

using fem::Vector;
using geometry::ObstacleShape;
using observation::BoundaryTrace;
using observation::InternalTrace;
using shape_gradient::InternalTest;
using shape_gradient::TestPair;

enum class ObservationMode { Boundary, Internal };

/// Everything about the direct problem except the obstacle.
struct ForwardProblem {
    geometry::Domain domain;
    fem::CoefficientSet coeffs;
    fem::BoundaryData data;
};

struct ReconstructionConfig {
    std::size_t p = 5;
    /// Boundary mode: trigonometric modes per channel on gamma.
    std::size_t test_modes = 3;
    shape_gradient::Channels channels = shape_gradient::Channels::Both;
    /// Internal mode: number of polynomial test functions on omega.
    std::size_t internal_tests = 6;
    /// Tikhonov rho = rho_factor ||K||^2, used unless svd_truncation is set.
    double rho_factor = 1e-8;
    /// Relative singular value cutoff for a truncated-SVD solve.
    std::optional<double> svd_truncation;
    double tau = 0.5;
    std::size_t max_iterations = 30;
    /// Stop when the misfit drops below this fraction of the target norm.
    double residual_tolerance = 1e-6;
    /// Stop when the largest coefficient change of an accepted step is below this.
    double shape_tolerance = 1e-5;
    std::size_t max_backtracks = 6;
    ObservationMode mode = ObservationMode::Boundary;
    double mesh_size = 0.05;
    observation::Omega omega{{0.85, 0.0}, 0.08};
    int omega_resolution = 8;
    /// Relative Gaussian noise on synthetic data; 0 disables.
    double noise_level = 0.0;
    std::uint64_t seed = 1;
    /// Singular values below rank_tolerance * K.scale count as zero.
    double rank_tolerance = 1e-10;
    /// Optional edit of each solved step before the line search (fault injection in tests).
    std::function<void(Vector&)> step_hook;

    void validate() const;
};

using Observation = std::variant<BoundaryTrace, InternalTrace>;

struct IterationRecord {
    std::size_t iteration = 0;
    ObstacleShape shape;
    double residual = 0.0;
    /// Step coefficients solved at this iterate; empty on the final record.
    Vector lambda;
    double cond_k = 0.0;
    std::size_t rank = 0;
    /// NaN when the ground truth is unknown.
    double hausdorff = 0.0;
    double tau_eff = 0.0;
};

struct ReconstructionResult {
    std::vector<IterationRecord> history;
    bool converged = false;
    std::string stop_reason;
    /// Set when the run ended on an error; history holds the iterates before it.
    std::optional<std::string> error;
    bool rank_deficient = false;
    double noise_floor = 0.0;
};

/// r_j = -integral over gamma of (alpha_t - alpha) eta_j + (beta_t - beta) theta_j.
Vector residual_projection(const BoundaryTrace& target, const BoundaryTrace& current,
                           const std::vector<TestPair>& tests);
/// r_j = -sum_p w_p rho_j(x_p) (y_t - y)(x_p).
Vector residual_projection(const InternalTrace& target, const InternalTrace& current,
                           const std::vector<InternalTest>& tests);

/// L2 misfit between observations (gamma or omega).
double misfit(const Observation& target, const Observation& current);

struct ShapeUpdate {
    ObstacleShape shape;
    double tau_eff;
};

/// r + tau sum lambda_i f_i, halving tau until the shape is admissible in `domain`.
/// Throws NumericalError("step collapse") after 20 halvings.
ShapeUpdate update_shape(const ObstacleShape& shape, const Vector& lambda, double tau, const geometry::Domain& domain);

/// Forward solve on a mesh of `truth` plus optional seeded noise (config.noise_level).
Observation synthesize(const ForwardProblem& problem, const ObstacleShape& truth, const ReconstructionConfig& config);

Observation observe(const ForwardProblem& problem, const geometry::TriangleMesh& mesh, const fem::FieldPair& solution,
                    const ReconstructionConfig& config);

/// Adds N(0, (level * rms)^2) to every sample, rms taken over the trace.
Observation add_noise(const Observation& obs, double level, std::uint64_t seed);

/// Regularized solve of K lambda = r; also reports cond(K) and numerical rank.
struct StepSolve {
    Vector lambda;
    double cond;
    std::size_t rank;
};
StepSolve solve_step(const shape_gradient::SensitivityMatrix& k, const Vector& r, const ReconstructionConfig& config);

ReconstructionResult reconstruct(const Observation& target, const ObstacleShape& initial,
                                 const ForwardProblem& problem, const ReconstructionConfig& config,
                                 const std::optional<ObstacleShape>& truth = std::nullopt);

/// "iter,residual,hausdorff,cond_K,tau_eff,lambda_1..lambda_p"
void write_history_csv(std::ostream& os, const ReconstructionResult& result, std::size_t p);

}  // namespace geoinv::reconstruction
