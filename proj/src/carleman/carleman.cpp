#include "geoinv/carleman/carleman.hpp"

#include "geoinv/io/csv.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace geoinv::carleman {

CarlemanWeight CarlemanWeight::standard(double radius, Vec2 center)
{
    return {5.0 / (radius * radius), radius, center};
}

void CarlemanWeight::validate(bool positivity) const
{
    if (!std::isfinite(delta) || !(delta > 0.0)) throw InvalidInput("carleman: delta must be positive and finite");
    if (!std::isfinite(radius) || !(radius > 0.0)) throw InvalidInput("carleman: R must be positive and finite");
    if (positivity && !(delta > 4.0 / (radius * radius)))
        throw InvalidInput("carleman: positivity needs delta > 4 / R^2");
}

WeightValues weight_eval(const CarlemanWeight& w, const Vec2& x)
{
    const Vec2 y = x - w.center;
    const double phi = std::exp(-w.delta * y.squaredNorm());
    WeightValues v;
    v.phi = phi;
    v.gradient = -2.0 * w.delta * phi * y;
    v.hessian = phi * (-2.0 * w.delta * Mat2::Identity() + 4.0 * w.delta * w.delta * y * y.transpose());
    return v;
}

Vec2 characteristic_point(const CarlemanWeight& w, const Vec2& x)
{
    const Vec2 g = weight_eval(w, x).gradient;
    if (g.norm() == 0.0) throw InvalidInput("gradient vanishes");
    return {-g.y(), g.x()};
}

double symbol_a0(const CarlemanWeight& w, const Vec2& x, const Vec2& xi)
{
    return xi.squaredNorm() - weight_eval(w, x).gradient.squaredNorm();
}

double symbol_b0(const CarlemanWeight& w, const Vec2& x, const Vec2& xi)
{
    return 2.0 * xi.dot(weight_eval(w, x).gradient);
}

double poisson_bracket(const CarlemanWeight& w, const Vec2& x, const Vec2& xi)
{
    const auto v = weight_eval(w, x);
    const Vec2 dxi_a = 2.0 * xi;
    const Vec2 dx_a = -2.0 * v.hessian * v.gradient;
    const Vec2 dxi_b = 2.0 * v.gradient;
    const Vec2 dx_b = 2.0 * v.hessian * xi;
    return dxi_a.dot(dx_b) - dx_a.dot(dxi_b);
}

double bracket_closed_form(const CarlemanWeight& w, const Vec2& x)
{
    const double r2 = (x - w.center).squaredNorm();
    const double phi = std::exp(-w.delta * r2);
    return 64.0 * std::pow(w.delta, 3) * phi * phi * phi * r2 * (w.delta * r2 - 1.0);
}

double bracket_lower_bound(const CarlemanWeight& w)
{
    const double r2 = w.radius * w.radius;
    return 16.0 * std::pow(w.delta, 3) * r2 * std::exp(-12.0 * r2 * w.delta) * (w.delta * r2 / 4.0 - 1.0);
}

std::vector<BracketSample> sample_bracket(const CarlemanWeight& w, std::size_t count, std::uint64_t seed)
{
    w.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r0 = 0.5 * w.radius, r1 = 2.0 * w.radius;
    const double lb = bracket_lower_bound(w);
    std::vector<BracketSample> out;
    out.reserve(count);
    while (out.size() < count) {
        // area-uniform radius in the open annulus
        const double r = std::sqrt(r0 * r0 + unit(rng) * (r1 * r1 - r0 * r0));
        const double t = kTwoPi * unit(rng);
        if (!(r > r0 && r < r1)) continue;
        const Vec2 x = w.center + r * Vec2(std::cos(t), std::sin(t));
        const Vec2 xi = characteristic_point(w, x);
        out.push_back({x, xi, poisson_bracket(w, x, xi), bracket_closed_form(w, x), lb});
    }
    return out;
}

namespace {

// (1 - t^2)^4 and its first two derivatives; zero outside |t| < 1
std::array<double, 3> bump1d(double t)
{
    if (std::abs(t) >= 1.0) return {0.0, 0.0, 0.0};
    const double s = 1.0 - t * t;
    return {s * s * s * s, -8.0 * t * s * s * s, -8.0 * s * s * s + 48.0 * t * t * s * s};
}

}  // namespace

Bump Bump::radial(double center_radius, double half_width, double amplitude)
{
    if (!(half_width > 0.0) || !(center_radius > half_width)) throw InvalidInput("bump: need 0 < half_width < center_radius");
    Bump b;
    b.kind = Kind::Radial;
    b.center_radius = center_radius;
    b.half_width = half_width;
    b.amplitude = amplitude;
    return b;
}

Bump Bump::product(Vec2 offset, Vec2 half_widths, double amplitude)
{
    if (!(half_widths.x() > 0.0 && half_widths.y() > 0.0)) throw InvalidInput("bump: half widths must be positive");
    Bump b;
    b.kind = Kind::Product;
    b.offset = offset;
    b.half_widths = half_widths;
    b.amplitude = amplitude;
    return b;
}

double Bump::value(const Vec2& y) const
{
    if (kind == Kind::Radial) return amplitude * bump1d((y.norm() - center_radius) / half_width)[0];
    const Vec2 t = (y - offset).cwiseQuotient(half_widths);
    return amplitude * bump1d(t.x())[0] * bump1d(t.y())[0];
}

Vec2 Bump::gradient(const Vec2& y) const
{
    if (kind == Kind::Radial) {
        const double r = y.norm();
        const auto b = bump1d((r - center_radius) / half_width);
        return amplitude * b[1] / half_width * y / r;
    }
    const Vec2 t = (y - offset).cwiseQuotient(half_widths);
    const auto bx = bump1d(t.x()), by = bump1d(t.y());
    return amplitude * Vec2(bx[1] / half_widths.x() * by[0], bx[0] * by[1] / half_widths.y());
}

double Bump::laplacian(const Vec2& y) const
{
    if (kind == Kind::Radial) {
        const double r = y.norm();
        const auto b = bump1d((r - center_radius) / half_width);
        return amplitude * (b[2] / (half_width * half_width) + b[1] / half_width / r);
    }
    const Vec2 t = (y - offset).cwiseQuotient(half_widths);
    const auto bx = bump1d(t.x()), by = bump1d(t.y());
    return amplitude * (bx[2] / (half_widths.x() * half_widths.x()) * by[0] +
                        bx[0] * by[2] / (half_widths.y() * half_widths.y()));
}

namespace {

using Vec3 = Eigen::Vector3d;
using Integrand = std::function<Vec3(double)>;

struct GaussRule {
    std::array<double, 10> x, w;
    GaussRule()
    {
        // Newton iteration on P_10
        constexpr int n = 10;
        for (int i = 0; i < n; ++i) {
            double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = z;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                const double dp = n * (z * p1 - p0) / (z * z - 1.0);
                const double dz = p1 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) {
                    x[static_cast<std::size_t>(i)] = z;
                    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
                    break;
                }
            }
        }
    }
};

const GaussRule& gauss()
{
    static const GaussRule rule;
    return rule;
}

Vec3 panel(const Integrand& f, double a, double b)
{
    const auto& g = gauss();
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    Vec3 s = Vec3::Zero();
    for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * f(mid + half * g.x[i]);
    return half * s;
}

Vec3 refine(const Integrand& f, double a, double b, const Vec3& whole, const Vec3& tol, int depth)
{
    const double m = 0.5 * (a + b);
    const Vec3 left = panel(f, a, m), right = panel(f, m, b);
    const Vec3 both = left + right;
    if (depth >= 40 || ((both - whole).array().abs() <= tol.array()).all()) return both;
    return refine(f, a, m, left, 0.5 * tol, depth + 1) + refine(f, m, b, right, 0.5 * tol, depth + 1);
}

/// Adaptive composite Gauss for a non-negative vector integrand; the tolerance
/// is relative per component, anchored on a 64-panel first estimate.
Vec3 integrate(const Integrand& f, double a, double b, double rel)
{
    constexpr int panels = 64;
    const double step = (b - a) / panels;
    std::array<Vec3, panels> parts;
    Vec3 estimate = Vec3::Zero();
    for (int i = 0; i < panels; ++i) {
        parts[static_cast<std::size_t>(i)] = panel(f, a + i * step, a + (i + 1) * step);
        estimate += parts[static_cast<std::size_t>(i)];
    }
    const Vec3 tol = rel * estimate.cwiseAbs() / panels;
    Vec3 total = Vec3::Zero();
    for (int i = 0; i < panels; ++i)
        total += refine(f, a + i * step, a + (i + 1) * step, parts[static_cast<std::size_t>(i)], tol, 0);
    return total;
}

}  // namespace

std::vector<RatioRow> carleman_ratio(const CarlemanWeight& w, const AnnularRegion& k, const Bump& u,
                                     const std::vector<double>& h_grid, double relative_tolerance)
{
    w.validate();
    if (!(k.inner >= 0.0 && k.outer > k.inner)) throw InvalidInput("carleman: K needs 0 <= inner < outer");
    // support extent in |y|
    double rmin = 0.0, rmax = 0.0;
    if (u.kind == Bump::Kind::Radial) {
        rmin = u.center_radius - u.half_width;
        rmax = u.center_radius + u.half_width;
    } else {
        const Vec2 lo = u.offset - u.half_widths, hi = u.offset + u.half_widths;
        const Vec2 nearest(std::clamp(0.0, lo.x(), hi.x()), std::clamp(0.0, lo.y(), hi.y()));
        rmin = nearest.norm();
        for (double cx : {lo.x(), hi.x()})
            for (double cy : {lo.y(), hi.y()}) rmax = std::max(rmax, Vec2(cx, cy).norm());
    }
    if (!(rmin > k.inner && rmax < k.outer)) throw InvalidInput("carleman: bump support must lie inside K");
    const double phi_max = std::exp(-w.delta * rmin * rmin);

    for (std::size_t i = 0; i < h_grid.size(); ++i) {
        if (!(h_grid[i] > 0.0 && h_grid[i] < 1.0)) throw InvalidInput("carleman: h must lie in (0, 1)");
        if (i > 0 && !(h_grid[i] < h_grid[i - 1])) throw InvalidInput("carleman: h values must decrease");
    }

    std::vector<RatioRow> rows;
    for (double h : h_grid) {
        // weighted (|u|^2, |grad u|^2, |Lap u|^2) with exp(2 phi_max / h) factored out
        auto point = [&](const Vec2& y) {
            const double e = std::exp(2.0 * (std::exp(-w.delta * y.squaredNorm()) - phi_max) / h);
            const double v = u.value(y), l = u.laplacian(y);
            return Vec3(e * v * v, e * u.gradient(y).squaredNorm(), e * l * l);
        };
        Vec3 sums;
        if (u.kind == Bump::Kind::Radial) {
            sums = kTwoPi * integrate([&](double r) { return Vec3(r * point(Vec2(r, 0.0))); }, rmin, rmax,
                                      relative_tolerance);
        } else {
            const Vec2 lo = u.offset - u.half_widths, hi = u.offset + u.half_widths;
            sums = integrate(
                [&](double x1) {
                    return integrate([&](double x2) { return point(Vec2(x1, x2)); }, lo.y(), hi.y(),
                                     relative_tolerance);
                },
                lo.x(), hi.x(), relative_tolerance);
        }
        RatioRow row;
        row.h = h;
        row.lhs = sums[0] + h * h * sums[1];
        row.rhs = h * h * h * sums[2];
        row.degenerate = !(row.rhs > 0.0);
        row.ratio = row.degenerate ? std::numeric_limits<double>::quiet_NaN() : row.lhs / row.rhs;
        rows.push_back(row);
    }
    return rows;
}

void write_ratio_csv(std::ostream& os, const std::vector<RatioRow>& rows)
{
    io::CsvWriter csv(os, {"h", "lhs", "rhs", "ratio"});
    for (const auto& r : rows) csv.row(r.h, r.lhs, r.rhs, r.ratio);
}

void write_bracket_csv(std::ostream& os, const std::vector<BracketSample>& samples)
{
    io::CsvWriter csv(os, {"x1", "x2", "bracket", "closed_form", "lower_bound"});
    for (const auto& s : samples) csv.row(s.x.x(), s.x.y(), s.bracket, s.closed_form, s.lower_bound);
}

}  // namespace geoinv::carleman
