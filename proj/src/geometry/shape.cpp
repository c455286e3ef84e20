#include "geoinv/geometry/shape.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace geoinv::geometry {

double trig_basis(std::size_t index, double theta)
{
    if (index == 0) return 1.0;
    const double m = static_cast<double>((index + 1) / 2);
    return (index % 2 == 1) ? std::cos(m * theta) : std::sin(m * theta);
}

double trig_basis_derivative(std::size_t index, double theta)
{
    if (index == 0) return 0.0;
    const double m = static_cast<double>((index + 1) / 2);
    return (index % 2 == 1) ? -m * std::sin(m * theta) : m * std::cos(m * theta);
}

ObstacleShape::ObstacleShape(Vec2 center, double mean_radius, std::vector<double> coefficients)
    : center_(center), mean_radius_(mean_radius), coefficients_(std::move(coefficients))
{
    if (!(mean_radius > 0.0)) throw InvalidInput("obstacle mean_radius must be positive");
}

double ObstacleShape::radius(double theta) const
{
    double r = mean_radius_;
    for (std::size_t k = 0; k < coefficients_.size(); ++k) r += coefficients_[k] * trig_basis(k, theta);
    return r;
}

double ObstacleShape::radius_derivative(double theta) const
{
    double dr = 0.0;
    for (std::size_t k = 0; k < coefficients_.size(); ++k)
        dr += coefficients_[k] * trig_basis_derivative(k, theta);
    return dr;
}

Vec2 ObstacleShape::point(double theta) const
{
    return center_ + radius(theta) * Vec2(std::cos(theta), std::sin(theta));
}

Vec2 ObstacleShape::normal(double theta) const
{
    const double r = radius(theta);
    const double dr = radius_derivative(theta);
    const Vec2 er(std::cos(theta), std::sin(theta));
    const Vec2 et(-std::sin(theta), std::cos(theta));
    const Vec2 tangent = dr * er + r * et;
    return Vec2(tangent.y(), -tangent.x()).normalized();
}

double ObstacleShape::min_radius() const
{
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < kCheckSamples; ++i)
        m = std::min(m, radius(kTwoPi * static_cast<double>(i) / kCheckSamples));
    return m;
}

double ObstacleShape::area() const
{
    // trapezoid rule is spectrally accurate for the periodic integrand
    double s = 0.0;
    for (std::size_t i = 0; i < kCheckSamples; ++i) {
        const double r = radius(kTwoPi * static_cast<double>(i) / kCheckSamples);
        s += 0.5 * r * r;
    }
    return s * kTwoPi / kCheckSamples;
}

Vec2 ObstacleShape::centroid() const
{
    Vec2 m = Vec2::Zero();
    double a = 0.0;
    for (std::size_t i = 0; i < kCheckSamples; ++i) {
        const double t = kTwoPi * static_cast<double>(i) / kCheckSamples;
        const double r = radius(t);
        a += 0.5 * r * r;
        m += (r * r * r / 3.0) * Vec2(std::cos(t), std::sin(t));
    }
    return center_ + m / a;
}

ObstacleShape ObstacleShape::padded(std::size_t n) const
{
    ObstacleShape s = *this;
    if (s.coefficients_.size() < n) s.coefficients_.resize(n, 0.0);
    return s;
}

ObstacleShape ObstacleShape::perturbed(std::span<const double> delta) const
{
    ObstacleShape s = padded(delta.size());
    for (std::size_t k = 0; k < delta.size(); ++k) s.coefficients_[k] += delta[k];
    return s;
}

std::vector<std::string> ObstacleShape::violations(const Domain& domain) const
{
    std::vector<std::string> out;
    double rmin = std::numeric_limits<double>::infinity();
    double reach_safety = -std::numeric_limits<double>::infinity();
    double gap_outer = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < kCheckSamples; ++i) {
        const double t = kTwoPi * static_cast<double>(i) / kCheckSamples;
        const double r = radius(t);
        rmin = std::min(rmin, r);
        const Vec2 p = point(t);
        if (domain.safety) reach_safety = std::max(reach_safety, (p - domain.safety->center).norm());
        gap_outer = std::min(gap_outer, domain.outer.distance_to_boundary(p));
    }
    std::ostringstream msg;
    if (!(rmin > 0.0)) {
        msg << "obstacle radius is not positive (min r = " << rmin << ")";
        out.push_back(msg.str());
        msg.str("");
    }
    if (!domain.outer.contains(center_)) out.emplace_back("obstacle center lies outside the outer boundary");
    if (gap_outer < domain.clearance) {
        msg << "clearance violation: obstacle comes within " << gap_outer
            << " of the outer boundary (required " << domain.clearance << ")";
        out.push_back(msg.str());
        msg.str("");
    }
    if (domain.safety) {
        const double allowed = domain.safety->radius - domain.clearance;
        if (reach_safety > allowed) {
            msg << "clearance violation: obstacle reaches distance " << reach_safety
                << " from the D* center (allowed " << allowed << ")";
            out.push_back(msg.str());
        }
    }
    return out;
}

void ObstacleShape::validate(const Domain& domain) const
{
    const auto v = violations(domain);
    if (v.empty()) return;
    std::string msg = "invalid obstacle:";
    for (const auto& s : v) msg += " " + s + ";";
    throw InvalidInput(msg);
}

void ObstacleShape::write(std::ostream& os) const
{
    const auto old = os.precision(17);
    os << "center " << center_.x() << ' ' << center_.y() << '\n';
    os << "mean_radius " << mean_radius_ << '\n';
    for (std::size_t k = 0; k < coefficients_.size(); ++k) os << (k + 1) << ' ' << coefficients_[k] << '\n';
    os.precision(old);
}

ObstacleShape ObstacleShape::read(std::istream& is)
{
    Vec2 c = Vec2::Zero();
    double r = 0.0;
    std::vector<std::pair<std::size_t, double>> coeffs;
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "center") {
            ls >> c.x() >> c.y();
        } else if (key == "mean_radius") {
            ls >> r;
        } else {
            std::size_t k = 0;
            double v = 0.0;
            try {
                k = std::stoul(key);
            } catch (const std::exception&) {
                throw InvalidInput("shape file: unknown key '" + key + "'");
            }
            if (k == 0 || !(ls >> v)) throw InvalidInput("shape file: malformed coefficient line");
            coeffs.emplace_back(k, v);
        }
        if (ls.fail()) throw InvalidInput("shape file: malformed line '" + line + "'");
    }
    std::vector<double> cv;
    for (const auto& [k, v] : coeffs) {
        if (cv.size() < k) cv.resize(k, 0.0);
        cv[k - 1] = v;
    }
    return {c, r, std::move(cv)};
}

namespace {

std::vector<Vec2> sample_boundary(const ObstacleShape& s, std::size_t n)
{
    std::vector<Vec2> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = s.point(kTwoPi * static_cast<double>(i) / n);
    return pts;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b)
{
    const Vec2 e = b - a;
    const double t = std::clamp((p - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
    return (p - (a + t * e)).norm();
}

// Exact directed distance with early exit: the scan starts at the previous
// nearest segment and stops once the point cannot raise the running maximum.
double directed(const std::vector<Vec2>& from, const std::vector<Vec2>& to)
{
    double worst = 0.0;
    const std::size_t m = to.size();
    std::size_t hint = 0;
    for (const auto& p : from) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = hint;
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t j = (hint + k) % m;
            const double d = point_segment_distance(p, to[j], to[(j + 1) % m]);
            if (d < best) {
                best = d;
                arg = j;
            }
            if (best <= worst) break;
        }
        hint = arg;
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace

double hausdorff_distance(const ObstacleShape& a, const ObstacleShape& b, std::size_t samples)
{
    if (samples < 16) throw InvalidInput("hausdorff_distance: too few samples");
    const auto pa = sample_boundary(a, samples);
    const auto pb = sample_boundary(b, samples);
    return std::max(directed(pa, pb), directed(pb, pa));
}

}  // namespace geoinv::geometry
