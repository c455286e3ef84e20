#pragma once

#include "geoinv/core.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace geoinv::carleman {

/// phi(x) = exp(-delta |x - center|^2) on the ball of radius 2R.
struct CarlemanWeight {
    double delta = 5.0;
    double radius = 1.0;
    Vec2 center{0.0, 0.0};

    /// delta = 5 / R^2, inside the positivity range delta > 4 / R^2.
    static CarlemanWeight standard(double radius, Vec2 center = Vec2::Zero());
    /// Throws InvalidInput on non-finite or non-positive parameters, and when
    /// `positivity` is requested without delta > 4 / R^2.
    void validate(bool positivity = false) const;
};

struct WeightValues {
    double phi;
    Vec2 gradient;
    Mat2 hessian;
};

WeightValues weight_eval(const CarlemanWeight& w, const Vec2& x);

/// xi = rot90(grad phi): a0 = b0 = 0 by construction. Throws InvalidInput
/// ("gradient vanishes") at the center.
Vec2 characteristic_point(const CarlemanWeight& w, const Vec2& x);

/// a0 = |xi|^2 - |grad phi|^2 and b0 = 2 xi . grad phi.
double symbol_a0(const CarlemanWeight& w, const Vec2& x, const Vec2& xi);
double symbol_b0(const CarlemanWeight& w, const Vec2& x, const Vec2& xi);

/// grad_xi a0 . grad_x b0 - grad_x a0 . grad_xi b0 from the partial derivatives of the symbols.
double poisson_bracket(const CarlemanWeight& w, const Vec2& x, const Vec2& xi);
/// 64 delta^3 phi^3 |x|^2 (delta |x|^2 - 1), valid on the characteristic set.
double bracket_closed_form(const CarlemanWeight& w, const Vec2& x);
/// 16 delta^3 R^2 exp(-12 R^2 delta) (delta R^2 / 4 - 1): lower bound over R/2 < |x| < 2R.
double bracket_lower_bound(const CarlemanWeight& w);

struct BracketSample {
    Vec2 x;
    Vec2 xi;
    double bracket;
    double closed_form;
    double lower_bound;
};

/// `count` characteristic pairs with x uniform (by area) in R/2 < |x - center| < 2R.
std::vector<BracketSample> sample_bracket(const CarlemanWeight& w, std::size_t count, std::uint64_t seed);

/// Closed annulus inner <= |x - center| <= outer.
struct AnnularRegion {
    double inner;
    double outer;
};

/// (1 - t^2)^4 bumps with closed-form Laplacians.
struct Bump {
    enum class Kind { Radial, Product };
    Kind kind = Kind::Radial;
    double amplitude = 1.0;
    /// Radial: t = (|x - c| - center_radius) / half_width.
    double center_radius = 0.0;
    double half_width = 0.0;
    /// Product: t_k = (x_k - offset_k) / half_widths_k, relative to the weight center.
    Vec2 offset{0.0, 0.0};
    Vec2 half_widths{0.0, 0.0};

    static Bump radial(double center_radius, double half_width, double amplitude = 1.0);
    static Bump product(Vec2 offset, Vec2 half_widths, double amplitude = 1.0);

    /// Value, gradient and Laplacian at y = x - weight center.
    double value(const Vec2& y) const;
    Vec2 gradient(const Vec2& y) const;
    double laplacian(const Vec2& y) const;
};

struct RatioRow {
    double h;
    /// Both sides carry the factor exp(-2 max_supp phi / h).
    double lhs;
    double rhs;
    double ratio;
    bool degenerate;
};

/// I0(u) / (h^3 int_K e^{2 phi/h} |Lap u|^2) for each h, by adaptive composite
/// Gauss quadrature over the bump support. Throws InvalidInput unless the
/// support lies in the interior of K and the h values decrease inside (0, 1).
std::vector<RatioRow> carleman_ratio(const CarlemanWeight& w, const AnnularRegion& k, const Bump& u,
                                     const std::vector<double>& h_grid, double relative_tolerance = 1e-8);

/// "h,lhs,rhs,ratio"
void write_ratio_csv(std::ostream& os, const std::vector<RatioRow>& rows);
/// "x1,x2,bracket,closed_form,lower_bound"
void write_bracket_csv(std::ostream& os, const std::vector<BracketSample>& samples);

}  // namespace geoinv::carleman
