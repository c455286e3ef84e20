#pragma once

#include "geoinv/reconstruction/reconstruct.hpp"

#include <iosfwd>
#include <string>

namespace geoinv::stability {

using fem::Vector;
using geometry::DeformationField;
using geometry::ObstacleShape;
using observation::DistanceMode;
using reconstruction::ForwardProblem;
using reconstruction::Observation;
using reconstruction::ObservationMode;

/// Direct problem plus how it is observed and measured.
struct SweepSetup {
    ForwardProblem problem;
    ObservationMode mode = ObservationMode::Boundary;
    observation::Omega omega{{0.85, 0.0}, 0.08};
    int omega_resolution = 8;
    DistanceMode distance = DistanceMode::L2;
    double mesh_size = 0.025;
    /// Worker threads for the sigma samples of a sweep.
    std::size_t jobs = 1;
};

std::vector<double> default_sigma_grid();

/// Distance between two observations of the same kind and sampling.
double observation_distance(const Observation& a, const Observation& b, DistanceMode mode);

struct ObservationCurve {
    std::vector<double> sigma;
    std::vector<double> distance;
    std::vector<bool> valid;
    /// Distance between sigma = 0 observations on meshes h and h/sqrt(2), plus 1e-12.
    double floor = 0.0;
    /// Distance between two independent sigma = 0 solves on the same mesh.
    double resolve_floor = 0.0;
};

/// Solves on apply_deformation(mesh(D0), mu, sigma) for every sigma and measures the
/// distance to the sigma = 0 observation. Samples whose mesh tangles or whose
/// sigma violates |sigma| L < 1 are marked invalid.
ObservationCurve observation_curve(const SweepSetup& setup, const ObstacleShape& d0, const DeformationField& mu,
                                   const std::vector<double>& sigma_grid);

struct StabilityFit {
    double k_raw = 0.0;
    int k_int = 0;
    double c = 0.0;
    /// RMS of the log-space residuals.
    double residual = 0.0;
    double floor = 0.0;
    std::size_t samples = 0;
    /// distance >= 0.9 C |sigma|^k_raw on every fitted sample.
    bool lower_bound_holds = false;
};

/// One curve per distance mode from a single set of solves (mode order kept).
std::vector<ObservationCurve> observation_curves(const SweepSetup& setup, const ObstacleShape& d0,
                                                const DeformationField& mu, const std::vector<double>& sigma_grid,
                                                const std::vector<DistanceMode>& modes);

/// Least-squares fit of log distance against log |sigma| over the valid samples
/// above 10x floor. Throws NumericalError("regime unresolved") with fewer than 4.
StabilityFit fit_order(const ObservationCurve& curve);

enum class Verdict { Distinguishable, Indistinguishable, Inconclusive };
std::string to_string(Verdict v);

struct DiscriminationReport {
    double hausdorff;
    double distance;
    double floor;
    /// Distinguishable above 10x floor, indistinguishable at or below the floor.
    Verdict verdict;
};

DiscriminationReport discrimination_test(const SweepSetup& setup, const ObstacleShape& d0, const ObstacleShape& d1);

/// Norms of the n-th forward divided differences of the observation map,
/// n = 1..3, on the stencil {0, s, 2s, 3s}.
struct DividedDifferences {
    double step;
    double first;
    double second;
    double third;
};
std::vector<DividedDifferences> divided_differences(const SweepSetup& setup, const ObstacleShape& d0,
                                                    const DeformationField& mu, const std::vector<double>& steps);

struct CounterexampleParams {
    double eta = 1.0;
    double zeta = 1.0;
    double b = 0.5;
    double a = 0.5;
    double k = 1.0;
    double length = 0.5;
    std::size_t points = 10000;
    std::size_t max_sweeps = 50;
    double tolerance = 1e-12;
};

struct CounterexampleReport {
    Vector x, y, z;
    double y0, z0, yx0, zx0;
    /// Max-norm residuals of -y'' + eta^2 y + b z and -z'' + A y + zeta^2 z at interior points.
    double residual_y, residual_z;
    std::size_t sweeps;
};

/// Volterra fixed point for the 1D system with y(0) = z(0) = y'(0) = 0 and z'(0) = K.
/// Throws InvalidInput unless |A| + |b| < 2 |eta| |zeta|, all parameters are nonzero
/// (K may be 0) and 0 < L < 1; NumericalError if the iteration does not settle.
CounterexampleReport one_dim_counterexample(const CounterexampleParams& params);

/// "sigma,distance,valid"
void write_sweep_csv(std::ostream& os, const ObservationCurve& curve);
/// "k_raw,k_int,C,residual,floor"
void write_fit_csv(std::ostream& os, const StabilityFit& fit);

}  // namespace geoinv::stability
