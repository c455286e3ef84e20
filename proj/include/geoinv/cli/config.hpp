#pragma once

#include "geoinv/carleman/carleman.hpp"
#include "geoinv/stability/stability.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace geoinv::cli {

using Json = nlohmann::json;

/// Schema violation, tagged with the dotted key path it concerns.
class SchemaError : public InvalidInput {
public:
    SchemaError(std::string path, const std::string& message)
        : InvalidInput(path + ": " + message), path_(std::move(path)), message_(message)
    {
    }
    const std::string& path() const { return path_; }
    const std::string& message() const { return message_; }

private:
    std::string path_;
    std::string message_;
};

enum class Kind {
    Forward,
    Observe,
    PullbackCheck,
    AdjointCheck,
    Reconstruct,
    Stability,
    Discriminate,
    Carleman,
    Counterexample1d,
    Poincare
};

std::string to_string(Kind k);
/// Module that owns the pipeline of a kind; used in error records.
std::string module_of(Kind k);

struct DeformationSpec {
    /// radial_unit, radial_mode, translation, dilation, rotation
    std::string type = "radial_unit";
    Vec2 origin{0.0, 0.0};
    double amplitude = 1.0;
    std::size_t mode = 0;
    Vec2 shift{1.0, 0.0};
    double rate = 1.0;
    geometry::SmoothCutoff cutoff;
    double rho_min = 0.25;

    geometry::DeformationField build(const geometry::Disk& support) const;
};

struct ObservationSpec {
    reconstruction::ObservationMode mode = reconstruction::ObservationMode::Boundary;
    observation::Omega omega{{0.85, 0.0}, 0.08};
    int resolution = 8;
    observation::DistanceMode distance = observation::DistanceMode::L2;
};

struct NumericSpec {
    double h = 0.05;
    std::vector<double> h_grid;
    double sigma = 0.1;
    std::vector<double> sigma_grid;
    std::vector<double> dd_steps;
    double poincare_h = 0.05;
    std::size_t symmetry = 1;
};

struct AdjointTestSpec {
    shape_gradient::Channels channel = shape_gradient::Channels::Alpha;
    std::size_t mode = 0;
    std::size_t p = 5;
    std::size_t test_modes = 3;
};

struct CarlemanSpec {
    carleman::CarlemanWeight weight;
    std::size_t samples = 10000;
    carleman::AnnularRegion region{};
    carleman::Bump bump;
    std::vector<double> h_grid{0.4, 0.2, 0.1, 0.05};
};

struct ExperimentConfig {
    Kind kind = Kind::Forward;
    std::uint64_t seed = 1;
    std::optional<std::string> output;

    geometry::Domain domain;
    std::optional<geometry::ObstacleShape> obstacle;
    std::optional<fem::CoefficientSet> coeffs;
    fem::TrigSeries phi;
    fem::TrigSeries psi;
    NumericSpec numeric;
    std::optional<DeformationSpec> deformation;
    ObservationSpec observation;

    std::optional<AdjointTestSpec> test;
    std::optional<geometry::ObstacleShape> initial;
    reconstruction::ReconstructionConfig reconstruction;
    std::optional<geometry::ObstacleShape> other;
    std::optional<CarlemanSpec> carleman;
    std::optional<stability::CounterexampleParams> counterexample;

    fem::BoundaryData boundary_data() const;
    reconstruction::ForwardProblem forward_problem() const;
    stability::SweepSetup sweep_setup(std::size_t jobs) const;
};

/// Parses and type-checks a config; throws SchemaError on the first problem.
/// Unknown keys are errors, so typos do not silently fall back to defaults.
ExperimentConfig parse_config(const Json& j);

Json load_json(const std::filesystem::path& path);

struct Violation {
    std::string path;
    std::string message;
    /// Warnings are reported but do not stop a run.
    bool warning = false;
};

/// Schema plus invariant checks (clearances, admissibility, sigma bounds,
/// observation region). No forward solves; mu1 may be computed or read from
/// `cache_dir`.
std::vector<Violation> validate_config(const Json& j, const std::optional<std::filesystem::path>& cache_dir);

/// mu1 of the obstacle-free Omega at mesh size h, cached as
/// cache_dir/mu1_<hash>.txt when a directory is given.
double cached_mu1(const geometry::OuterBoundary& outer, double h,
                  const std::optional<std::filesystem::path>& cache_dir);

/// Stable 64-bit hash of the outer boundary and mesh size, as 16 hex digits.
std::string geometry_hash(const geometry::OuterBoundary& outer, double h);

}  // namespace geoinv::cli
