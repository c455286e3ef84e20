#include "geoinv/cli/config.hpp"

#include "geoinv/io/csv.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace geoinv::cli {

using geometry::Disk;
using geometry::ObstacleShape;
using geometry::OuterBoundary;

std::string to_string(Kind k)
{
    switch (k) {
    case Kind::Forward: return "forward";
    case Kind::Observe: return "observe";
    case Kind::PullbackCheck: return "pullback-check";
    case Kind::AdjointCheck: return "adjoint-check";
    case Kind::Reconstruct: return "reconstruct";
    case Kind::Stability: return "stability";
    case Kind::Discriminate: return "discriminate";
    case Kind::Carleman: return "carleman";
    case Kind::Counterexample1d: return "counterexample-1d";
    case Kind::Poincare: return "poincare";
    }
    return "?";
}

std::string module_of(Kind k)
{
    switch (k) {
    case Kind::Forward:
    case Kind::PullbackCheck:
    case Kind::Poincare: return "elliptic_fem";
    case Kind::Observe: return "observation";
    case Kind::AdjointCheck: return "shape_gradient";
    case Kind::Reconstruct: return "reconstruction";
    case Kind::Stability:
    case Kind::Discriminate:
    case Kind::Counterexample1d: return "stability_lab";
    case Kind::Carleman: return "carleman_check";
    }
    return "cli";
}

namespace {

const std::vector<std::pair<std::string, Kind>> kKinds{
    {"forward", Kind::Forward},           {"observe", Kind::Observe},
    {"pullback-check", Kind::PullbackCheck}, {"adjoint-check", Kind::AdjointCheck},
    {"reconstruct", Kind::Reconstruct},   {"stability", Kind::Stability},
    {"discriminate", Kind::Discriminate}, {"carleman", Kind::Carleman},
    {"counterexample-1d", Kind::Counterexample1d}, {"poincare", Kind::Poincare}};

/// JSON object with a key path and a record of the keys read, so that
/// unread (unknown) keys can be rejected at the end.
class Node {
public:
    Node(const Json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw SchemaError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    bool is_null(const std::string& key) const { return j_.contains(key) && j_.at(key).is_null(); }

    const Json& raw(const std::string& key)
    {
        used_.insert(key);
        if (!j_.contains(key)) throw SchemaError(at(key), "missing required key");
        return j_.at(key);
    }

    Node child(const std::string& key)
    {
        used_.insert(key);
        if (!has(key)) throw SchemaError(at(key), "missing required block");
        return {j_.at(key), at(key)};
    }

    std::optional<Node> optional_child(const std::string& key)
    {
        used_.insert(key);
        if (!has(key)) return std::nullopt;
        return Node(j_.at(key), at(key));
    }

    double number(const std::string& key) { return as_number(raw(key), at(key)); }
    double number(const std::string& key, double fallback)
    {
        used_.insert(key);
        return has(key) ? as_number(j_.at(key), at(key)) : fallback;
    }
    double positive(const std::string& key, double fallback)
    {
        const double v = number(key, fallback);
        if (!(v > 0.0)) throw SchemaError(at(key), "must be positive");
        return v;
    }

    std::size_t count(const std::string& key, std::size_t fallback)
    {
        used_.insert(key);
        if (!has(key)) return fallback;
        const Json& v = j_.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw SchemaError(at(key), "expected a non-negative integer");
        return v.get<std::size_t>();
    }

    std::string text(const std::string& key, const std::string& fallback)
    {
        used_.insert(key);
        if (!has(key)) return fallback;
        if (!j_.at(key).is_string()) throw SchemaError(at(key), "expected a string");
        return j_.at(key).get<std::string>();
    }

    Vec2 point(const std::string& key, const Vec2& fallback)
    {
        used_.insert(key);
        return has(key) ? as_point(j_.at(key), at(key)) : fallback;
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback)
    {
        used_.insert(key);
        if (!has(key)) return fallback;
        const Json& v = j_.at(key);
        if (!v.is_array()) throw SchemaError(at(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], at(key) + "[" + std::to_string(i) + "]"));
        return out;
    }

    std::vector<Vec2> points(const std::string& key)
    {
        const Json& v = raw(key);
        if (!v.is_array()) throw SchemaError(at(key), "expected an array of [x, y] pairs");
        std::vector<Vec2> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_point(v[i], at(key) + "[" + std::to_string(i) + "]"));
        return out;
    }

    /// Rejects keys that were never read.
    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw SchemaError(at(it.key()), "unknown key");
    }

    const std::string& path() const { return path_; }

private:
    static double as_number(const Json& v, const std::string& path)
    {
        if (!v.is_number()) throw SchemaError(path, "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw SchemaError(path, "must be finite");
        return d;
    }
    static Vec2 as_point(const Json& v, const std::string& path)
    {
        if (!v.is_array() || v.size() != 2) throw SchemaError(path, "expected [x, y]");
        return {as_number(v[0], path + "[0]"), as_number(v[1], path + "[1]")};
    }

    const Json& j_;
    std::string path_;
    std::set<std::string> used_;
};

ObstacleShape parse_obstacle(Node n)
{
    const Vec2 c = n.point("center", {0.0, 0.0});
    const double r = n.number("mean_radius");
    if (!(r > 0.0)) throw SchemaError(n.at("mean_radius"), "must be positive");
    auto coeffs = n.numbers("coefficients", {});
    n.finish();
    return {c, r, std::move(coeffs)};
}

fem::TrigSeries parse_series(Node n)
{
    fem::TrigSeries s;
    s.constant = n.number("constant", 0.0);
    s.cos = n.numbers("cos", {});
    s.sin = n.numbers("sin", {});
    n.finish();
    return s;
}

void parse_geometry(Node g, ExperimentConfig& c, bool needs_obstacle)
{
    {
        Node o = g.child("omega");
        const std::string type = o.text("type", "disk");
        if (type == "disk") {
            const double r = o.positive("radius", 1.0);
            c.domain.outer = OuterBoundary::disk(o.point("center", {0.0, 0.0}), r);
        } else if (type == "polygon") {
            try {
                c.domain.outer = OuterBoundary::polygon(o.points("vertices"));
            } catch (const SchemaError&) {
                throw;
            } catch (const InvalidInput& e) {
                throw SchemaError(o.at("vertices"), e.what());
            }
        } else {
            throw SchemaError(o.at("type"), "expected \"disk\" or \"polygon\"");
        }
        o.finish();
    }
    // absent keeps the default D*, null removes it
    if (g.is_null("safety")) c.domain.safety.reset();
    if (auto s = g.optional_child("safety")) {
        Disk d;
        d.center = s->point("center", {0.0, 0.0});
        d.radius = s->positive("radius", 0.75);
        s->finish();
        c.domain.safety = d;
    }
    c.domain.clearance = g.number("clearance", c.domain.clearance);
    if (auto gm = g.optional_child("gamma")) {
        c.domain.gamma.start = gm->number("start", 0.0);
        c.domain.gamma.end = gm->number("end", c.domain.gamma.start + kTwoPi);
        gm->finish();
    }
    if (auto ob = g.optional_child("obstacle"))
        c.obstacle = parse_obstacle(*ob);
    else if (needs_obstacle)
        throw SchemaError(g.at("obstacle"), "missing required block");
    g.finish();
}

DeformationSpec parse_deformation(Node n)
{
    DeformationSpec d;
    d.type = n.text("type", d.type);
    static const std::set<std::string> types{"radial_unit", "radial_mode", "translation", "dilation", "rotation"};
    if (!types.count(d.type))
        throw SchemaError(n.at("type"), "expected one of radial_unit, radial_mode, translation, dilation, rotation");
    d.origin = n.point("origin", d.origin);
    d.amplitude = n.number("amplitude", d.amplitude);
    d.mode = n.count("mode", d.mode);
    d.shift = n.point("shift", d.shift);
    d.rate = n.number("rate", d.rate);
    if (auto ch = n.optional_child("cutoff")) {
        d.cutoff.center = ch->point("center", d.cutoff.center);
        d.cutoff.r_in = ch->positive("r_in", d.cutoff.r_in);
        d.cutoff.r_out = ch->positive("r_out", d.cutoff.r_out);
        if (!(d.cutoff.r_out > d.cutoff.r_in)) throw SchemaError(ch->at("r_out"), "must exceed r_in");
        ch->finish();
    }
    d.rho_min = n.number("rho_min", d.rho_min);
    n.finish();
    return d;
}

ObservationSpec parse_observation(Node n)
{
    ObservationSpec o;
    const std::string mode = n.text("mode", "boundary");
    if (mode == "boundary")
        o.mode = reconstruction::ObservationMode::Boundary;
    else if (mode == "internal")
        o.mode = reconstruction::ObservationMode::Internal;
    else
        throw SchemaError(n.at("mode"), "expected \"boundary\" or \"internal\"");
    if (auto w = n.optional_child("omega")) {
        o.omega.center = w->point("center", o.omega.center);
        o.omega.radius = w->positive("radius", o.omega.radius);
        o.omega.inner_radius = w->number("inner_radius", 0.0);
        if (!(o.omega.inner_radius >= 0.0 && o.omega.inner_radius < o.omega.radius))
            throw SchemaError(w->at("inner_radius"), "must lie in [0, radius)");
        w->finish();
    }
    const std::size_t res = n.count("resolution", static_cast<std::size_t>(o.resolution));
    if (res < 2) throw SchemaError(n.at("resolution"), "must be at least 2");
    o.resolution = static_cast<int>(res);
    const std::string dist = n.text("distance", "l2");
    if (dist == "l2")
        o.distance = observation::DistanceMode::L2;
    else if (dist == "hminus_surrogate")
        o.distance = observation::DistanceMode::HminusSurrogate;
    else
        throw SchemaError(n.at("distance"), "expected \"l2\" or \"hminus_surrogate\"");
    n.finish();
    return o;
}

shape_gradient::Channels parse_channels(Node& n, const std::string& key, const std::string& fallback)
{
    const std::string s = n.text(key, fallback);
    if (s == "both") return shape_gradient::Channels::Both;
    if (s == "alpha" || s == "eta") return shape_gradient::Channels::Alpha;
    if (s == "beta" || s == "theta") return shape_gradient::Channels::Beta;
    throw SchemaError(n.at(key), "expected both, alpha or beta");
}

void parse_reconstruction(Node n, ExperimentConfig& c)
{
    auto& r = c.reconstruction;
    c.initial = parse_obstacle(n.child("initial"));
    r.p = n.count("p", r.p);
    r.test_modes = n.count("test_modes", r.test_modes);
    r.channels = parse_channels(n, "channels", "both");
    r.internal_tests = n.count("internal_tests", r.internal_tests);
    r.rho_factor = n.number("rho_factor", r.rho_factor);
    if (n.has("svd_truncation")) r.svd_truncation = n.number("svd_truncation");
    else n.number("svd_truncation", 0.0);
    r.tau = n.number("tau", r.tau);
    r.max_iterations = n.count("max_iterations", r.max_iterations);
    r.residual_tolerance = n.number("residual_tolerance", r.residual_tolerance);
    r.shape_tolerance = n.number("shape_tolerance", r.shape_tolerance);
    r.max_backtracks = n.count("max_backtracks", r.max_backtracks);
    r.noise_level = n.number("noise_level", r.noise_level);
    r.rank_tolerance = n.number("rank_tolerance", r.rank_tolerance);
    n.finish();
    try {
        r.validate();
    } catch (const InvalidInput& e) {
        throw SchemaError(n.path(), e.what());
    }
}

CarlemanSpec parse_carleman(Node n)
{
    CarlemanSpec s;
    const double radius = n.positive("radius", 0.15);
    const Vec2 center = n.point("center", {0.0, 0.0});
    s.weight = carleman::CarlemanWeight::standard(radius, center);
    s.weight.delta = n.positive("delta", s.weight.delta);
    s.samples = n.count("samples", s.samples);
    s.region = {0.505 * radius, 1.99 * radius};
    if (auto k = n.optional_child("region")) {
        s.region.inner = k->number("inner", s.region.inner);
        s.region.outer = k->number("outer", s.region.outer);
        k->finish();
    }
    s.bump = carleman::Bump::radial(0.885 * radius, 0.375 * radius);
    if (auto b = n.optional_child("bump")) {
        const std::string type = b->text("type", "radial");
        const double amp = b->number("amplitude", 1.0);
        try {
            if (type == "radial")
                s.bump = carleman::Bump::radial(b->number("center_radius"), b->number("half_width"), amp);
            else if (type == "product")
                s.bump = carleman::Bump::product(b->point("offset", {0.0, 0.0}),
                                                 b->point("half_widths", {0.0, 0.0}), amp);
            else
                throw SchemaError(b->at("type"), "expected \"radial\" or \"product\"");
        } catch (const SchemaError&) {
            throw;
        } catch (const InvalidInput& e) {
            throw SchemaError(b->path(), e.what());
        }
        b->finish();
    }
    s.h_grid = n.numbers("h_grid", s.h_grid);
    n.finish();
    return s;
}

stability::CounterexampleParams parse_counterexample(Node n)
{
    stability::CounterexampleParams p;
    p.eta = n.number("eta", p.eta);
    p.zeta = n.number("zeta", p.zeta);
    p.a = n.number("a", p.a);
    p.b = n.number("b", p.b);
    p.k = n.number("k", p.k);
    p.length = n.number("length", p.length);
    p.points = n.count("points", p.points);
    p.max_sweeps = n.count("max_sweeps", p.max_sweeps);
    p.tolerance = n.number("tolerance", p.tolerance);
    n.finish();
    return p;
}

bool needs_problem(Kind k)
{
    return k != Kind::Carleman && k != Kind::Counterexample1d && k != Kind::Poincare;
}

}  // namespace

geometry::DeformationField DeformationSpec::build(const Disk& support) const
{
    if (type == "radial_unit") return geometry::radial_unit_field(origin, amplitude, cutoff, support, rho_min);
    if (type == "radial_mode") {
        const std::size_t m = mode;
        const double amp = amplitude;
        return geometry::radial_profile_field(
            origin, [m, amp](double t) { return amp * geometry::trig_basis(m, t); },
            [m, amp](double t) { return amp * geometry::trig_basis_derivative(m, t); }, cutoff, support, rho_min);
    }
    if (type == "translation") return geometry::translation_field(shift, cutoff, support);
    if (type == "dilation") return geometry::dilation_field(origin, rate, cutoff, support);
    return geometry::rotation_field(origin, rate, cutoff, support);
}

fem::BoundaryData ExperimentConfig::boundary_data() const
{
    return fem::BoundaryData::from_series(domain.outer, phi, psi);
}

reconstruction::ForwardProblem ExperimentConfig::forward_problem() const
{
    return {domain, coeffs.value_or(fem::CoefficientSet::laplace()), boundary_data()};
}

stability::SweepSetup ExperimentConfig::sweep_setup(std::size_t jobs) const
{
    stability::SweepSetup s;
    s.problem = forward_problem();
    s.mode = observation.mode;
    s.omega = observation.omega;
    s.omega_resolution = observation.resolution;
    s.distance = observation.distance;
    s.mesh_size = numeric.h;
    s.jobs = jobs;
    return s;
}

ExperimentConfig parse_config(const Json& j)
{
    Node root(j, "");
    ExperimentConfig c;

    const std::string kind = root.text("kind", "");
    if (kind.empty()) throw SchemaError("kind", "missing required key");
    bool found = false;
    for (const auto& [name, k] : kKinds)
        if (name == kind) {
            c.kind = k;
            found = true;
        }
    if (!found) throw SchemaError("kind", "unknown experiment kind '" + kind + "'");

    c.seed = root.count("seed", 1);
    if (root.has("output")) c.output = root.text("output", "");
    else root.text("output", "");

    const bool problem = needs_problem(c.kind);
    const bool needs_obstacle = problem && c.kind != Kind::Forward;
    if (problem || c.kind == Kind::Poincare)
        parse_geometry(root.child("geometry"), c, needs_obstacle);
    else if (root.has("geometry"))
        parse_geometry(root.child("geometry"), c, false);

    if (problem) {
        Node co = root.child("coefficients");
        c.coeffs = fem::CoefficientSet{co.number("a", 0.0), co.number("b", 0.0), co.number("A", 0.0),
                                       co.number("B", 0.0), std::nullopt};
        co.finish();
        Node d = root.child("data");
        c.phi = parse_series(d.child("phi"));
        c.psi = parse_series(d.child("psi"));
        d.finish();
    } else if (auto co = root.optional_child("coefficients")) {
        c.coeffs = fem::CoefficientSet{co->number("a", 0.0), co->number("b", 0.0), co->number("A", 0.0),
                                       co->number("B", 0.0), std::nullopt};
        co->finish();
    }

    // kind-dependent default mesh sizes follow the module defaults
    if (c.kind == Kind::Stability || c.kind == Kind::Discriminate) c.numeric.h = stability::SweepSetup{}.mesh_size;
    if (c.kind == Kind::Reconstruct) c.numeric.h = reconstruction::ReconstructionConfig{}.mesh_size;
    if (c.kind == Kind::AdjointCheck) c.numeric.h = 0.03;
    if (c.kind == Kind::AdjointCheck) c.numeric.sigma_grid = {0.0, 0.04, 0.02, 0.01, 0.005};
    if (c.kind == Kind::Stability) c.numeric.sigma_grid = stability::default_sigma_grid();
    if (auto n = root.optional_child("numeric")) {
        c.numeric.h = n->positive("h", c.numeric.h);
        c.numeric.h_grid = n->numbers("h_grid", {});
        for (std::size_t i = 0; i < c.numeric.h_grid.size(); ++i)
            if (!(c.numeric.h_grid[i] > 0.0)) throw SchemaError(n->at("h_grid") + "[" + std::to_string(i) + "]", "must be positive");
        c.numeric.sigma = n->number("sigma", c.numeric.sigma);
        c.numeric.sigma_grid = n->numbers("sigma_grid", c.numeric.sigma_grid);
        c.numeric.dd_steps = n->numbers("dd_steps", {});
        c.numeric.poincare_h = n->positive("poincare_h", c.numeric.poincare_h);
        c.numeric.symmetry = n->count("symmetry", 1);
        if (c.numeric.symmetry == 0) throw SchemaError(n->at("symmetry"), "must be at least 1");
        n->finish();
    }
    if (c.numeric.h_grid.empty()) c.numeric.h_grid = {c.numeric.h};
    c.reconstruction.mesh_size = c.numeric.h;

    if (auto o = root.optional_child("observation")) c.observation = parse_observation(*o);
    c.reconstruction.mode = c.observation.mode;
    c.reconstruction.omega = c.observation.omega;
    c.reconstruction.omega_resolution = c.observation.resolution;
    c.reconstruction.seed = c.seed;

    const bool deform = c.kind == Kind::PullbackCheck || c.kind == Kind::AdjointCheck || c.kind == Kind::Stability;
    if (deform) c.deformation = parse_deformation(root.child("deformation"));
    else if (auto d = root.optional_child("deformation")) c.deformation = parse_deformation(*d);
    if (c.deformation && !c.domain.safety)
        throw SchemaError("geometry.safety", "a deformation needs the safety region D* as its support");

    if (c.kind == Kind::AdjointCheck) {
        Node t = root.child("test");
        AdjointTestSpec s;
        s.channel = parse_channels(t, "channel", "eta");
        if (s.channel == shape_gradient::Channels::Both) throw SchemaError(t.at("channel"), "expected eta or theta");
        s.mode = t.count("mode", 0);
        s.p = t.count("p", s.p);
        s.test_modes = t.count("test_modes", s.test_modes);
        if (s.p == 0 || s.test_modes == 0) throw SchemaError(t.path(), "p and test_modes must be positive");
        t.finish();
        c.test = s;
    }
    if (c.kind == Kind::Reconstruct) parse_reconstruction(root.child("reconstruction"), c);
    if (c.kind == Kind::Discriminate) {
        Node d = root.child("discriminate");
        c.other = parse_obstacle(d.child("other"));
        d.finish();
    }
    if (c.kind == Kind::Carleman) c.carleman = parse_carleman(root.child("carleman"));
    if (c.kind == Kind::Counterexample1d) {
        if (auto n = root.optional_child("counterexample"))
            c.counterexample = parse_counterexample(*n);
        else
            c.counterexample = stability::CounterexampleParams{};
    }
    // a plan block is consumed by the plan subcommand only
    root.optional_child("plan");
    root.finish();
    return c;
}

Json load_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw SchemaError("<file>", "cannot read config '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw SchemaError("<file>", std::string("malformed JSON: ") + e.what());
    }
}

std::string geometry_hash(const OuterBoundary& outer, double h)
{
    std::ostringstream key;
    if (outer.is_disk()) {
        key << "disk " << io::format_double(outer.center().x()) << ' ' << io::format_double(outer.center().y())
            << ' ' << io::format_double(outer.radius());
    } else {
        key << "polygon";
        for (const auto& v : outer.vertices()) key << ' ' << io::format_double(v.x()) << ' ' << io::format_double(v.y());
    }
    key << " h " << io::format_double(h);
    // FNV-1a, stable across platforms and runs
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char ch : key.str()) {
        hash ^= ch;
        hash *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

double cached_mu1(const OuterBoundary& outer, double h, const std::optional<std::filesystem::path>& cache_dir)
{
    std::filesystem::path file;
    if (cache_dir) {
        file = *cache_dir / ("mu1_" + geometry_hash(outer, h) + ".txt");
        std::ifstream in(file);
        double v = 0.0;
        if (in >> v && v > 0.0) return v;
    }
    geometry::Domain plain;
    plain.outer = outer;
    plain.safety.reset();
    const double mu1 = fem::poincare_constant(geometry::build_mesh(plain, std::nullopt, h));
    if (cache_dir) {
        std::filesystem::create_directories(*cache_dir);
        std::ofstream out(file);
        out << io::format_double(mu1) << '\n';
    }
    return mu1;
}

std::vector<Violation> validate_config(const Json& j, const std::optional<std::filesystem::path>& cache_dir)
{
    std::vector<Violation> out;
    ExperimentConfig c;
    try {
        c = parse_config(j);
    } catch (const SchemaError& e) {
        out.push_back({e.path(), e.message()});
        return out;
    }
    auto add = [&](std::string path, std::string msg, bool warning = false) {
        out.push_back({std::move(path), std::move(msg), warning});
    };

    const bool problem = needs_problem(c.kind) || c.kind == Kind::Poincare;
    if (problem) {
        try {
            c.domain.validate();
        } catch (const InvalidInput& e) {
            add("geometry", e.what());
        }
        const auto check_shape = [&](const std::optional<ObstacleShape>& s, const std::string& path) {
            if (!s) return;
            for (const auto& v : s->violations(c.domain)) add(path, v);
        };
        check_shape(c.obstacle, "geometry.obstacle");
        check_shape(c.initial, "reconstruction.initial");
        check_shape(c.other, "discriminate.other");
    }

    if (c.coeffs && problem) {
        try {
            const double mu1 = cached_mu1(c.domain.outer, c.numeric.poincare_h, cache_dir);
            const auto v = fem::check_admissibility(*c.coeffs, mu1);
            if (!v.admissible) {
                std::ostringstream msg;
                msg << "coefficients are not admissible: lambda* = " << v.lambda_star
                    << " is not below 1/mu1 = " << v.inverse_mu1;
                add("coefficients", msg.str());
            }
        } catch (const std::exception& e) {
            add("coefficients", std::string("admissibility check failed: ") + e.what());
        }
    }

    if (c.deformation && c.domain.safety) {
        try {
            const auto mu = c.deformation->build(*c.domain.safety);
            const double l = mu.lipschitz_bound();
            std::vector<double> sigmas = c.numeric.sigma_grid;
            if (c.kind == Kind::PullbackCheck) sigmas = {c.numeric.sigma};
            for (double s : sigmas)
                if (std::abs(s) * l >= 1.0) {
                    std::ostringstream msg;
                    msg << "sigma " << s << " violates |sigma| L < 1 (L = " << l << ")";
                    // a sweep flags such samples invalid instead of failing
                    add(c.kind == Kind::Stability ? "numeric.sigma_grid" : "numeric.sigma", msg.str(),
                        c.kind == Kind::Stability);
                }
        } catch (const InvalidInput& e) {
            add("deformation", e.what());
        }
    }

    const bool uses_observation = c.kind == Kind::Observe || c.kind == Kind::Reconstruct ||
                                  c.kind == Kind::Stability || c.kind == Kind::Discriminate;
    if (uses_observation && c.observation.mode == reconstruction::ObservationMode::Internal) {
        try {
            observation::check_omega(c.observation.omega, c.domain);
        } catch (const InvalidInput& e) {
            add("observation.omega", e.what());
        }
    }

    if (c.carleman) {
        const auto& s = *c.carleman;
        try {
            s.weight.validate(true);
        } catch (const InvalidInput& e) {
            add("carleman.delta", e.what());
        }
        try {
            carleman::carleman_ratio(s.weight, s.region, s.bump, {});
        } catch (const InvalidInput& e) {
            add("carleman.bump", e.what());
        }
        for (std::size_t i = 0; i < s.h_grid.size(); ++i) {
            if (!(s.h_grid[i] > 0.0 && s.h_grid[i] < 1.0)) add("carleman.h_grid", "h must lie in (0, 1)");
            if (i > 0 && !(s.h_grid[i] < s.h_grid[i - 1])) add("carleman.h_grid", "h values must decrease");
        }
    }

    if (c.counterexample) {
        const auto& p = *c.counterexample;
        if (!(std::abs(p.a) + std::abs(p.b) < 2.0 * std::abs(p.eta) * std::abs(p.zeta)))
            add("counterexample", "needs |a| + |b| < 2 |eta| |zeta|");
        if (!(p.length > 0.0 && p.length < 1.0)) add("counterexample.length", "must lie in (0, 1)");
    }
    return out;
}

}  // namespace geoinv::cli
