#pragma once

#include "geoinv/geometry/domain.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace geoinv::geometry {

/// Trigonometric basis in the fixed order {1, cos t, sin t, cos 2t, sin 2t, ...};
/// `index` is zero-based.
double trig_basis(std::size_t index, double theta);
double trig_basis_derivative(std::size_t index, double theta);

/// Star-shaped obstacle boundary r(theta) = mean_radius + sum_k c_k f_k(theta)
/// about a movable center.
class ObstacleShape {
public:
    /// Grid used for the sampled invariant checks.
    static constexpr std::size_t kCheckSamples = 4096;

    ObstacleShape() = default;
    ObstacleShape(Vec2 center, double mean_radius, std::vector<double> coefficients = {});

    static ObstacleShape circle(Vec2 center, double radius) { return {center, radius}; }

    const Vec2& center() const { return center_; }
    double mean_radius() const { return mean_radius_; }
    const std::vector<double>& coefficients() const { return coefficients_; }

    double radius(double theta) const;
    double radius_derivative(double theta) const;
    Vec2 point(double theta) const;
    /// Outward unit normal of the obstacle at angle theta.
    Vec2 normal(double theta) const;

    double min_radius() const;
    /// Enclosed area, by quadrature of r^2/2.
    double area() const;
    /// Area centroid (absolute coordinates).
    Vec2 centroid() const;

    /// Returns a copy whose coefficient vector has at least `n` entries.
    ObstacleShape padded(std::size_t n) const;
    /// Returns a copy with coefficients[k] += delta[k] (vector padded as needed).
    ObstacleShape perturbed(std::span<const double> delta) const;

    /// Human-readable descriptions of every violated invariant; empty when valid.
    std::vector<std::string> violations(const Domain& domain) const;
    /// Throws InvalidInput listing the violations.
    void validate(const Domain& domain) const;

    /// Shape text format: "center cx cy", "mean_radius r", then "k c_k" lines (k is 1-based).
    void write(std::ostream& os) const;
    static ObstacleShape read(std::istream& is);

private:
    Vec2 center_{0.0, 0.0};
    double mean_radius_ = 0.3;
    std::vector<double> coefficients_;
};

/// Symmetric Hausdorff distance between two obstacle boundaries, each sampled with
/// `samples` points and compared against the other's polyline.
double hausdorff_distance(const ObstacleShape& a, const ObstacleShape& b, std::size_t samples = 4096);

}  // namespace geoinv::geometry
