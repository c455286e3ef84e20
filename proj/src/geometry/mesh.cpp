#include "geoinv/geometry/mesh.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace geoinv::geometry {

const char* to_string(BoundaryTag tag)
{
    switch (tag) {
    case BoundaryTag::Outer: return "OUTER";
    case BoundaryTag::Gamma: return "GAMMA";
    case BoundaryTag::Obstacle: return "OBSTACLE";
    }
    return "?";
}

BoundaryTag tag_from_string(const std::string& s)
{
    if (s == "OUTER") return BoundaryTag::Outer;
    if (s == "GAMMA") return BoundaryTag::Gamma;
    if (s == "OBSTACLE") return BoundaryTag::Obstacle;
    throw InvalidInput("unknown boundary tag '" + s + "'");
}

double TriangleMesh::signed_area(std::size_t t) const
{
    const auto& tri = triangles[t];
    return 0.5 * cross(vertices[tri[1]] - vertices[tri[0]], vertices[tri[2]] - vertices[tri[0]]);
}

Vec2 TriangleMesh::barycenter(std::size_t t) const
{
    const auto& tri = triangles[t];
    return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
}

double TriangleMesh::total_area() const
{
    double a = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) a += signed_area(t);
    return a;
}

double TriangleMesh::max_edge_length() const
{
    double h = 0.0;
    for (const auto& tri : triangles)
        for (int k = 0; k < 3; ++k) h = std::max(h, (vertices[tri[k]] - vertices[tri[(k + 1) % 3]]).norm());
    return h;
}

std::vector<char> TriangleMesh::boundary_mask() const
{
    std::vector<char> m(vertices.size(), 0);
    for (const auto& e : boundary_edges) m[e.v[0]] = m[e.v[1]] = 1;
    return m;
}

std::vector<char> TriangleMesh::tagged_mask(std::initializer_list<BoundaryTag> tags) const
{
    std::vector<char> m(vertices.size(), 0);
    for (const auto& e : boundary_edges)
        if (std::find(tags.begin(), tags.end(), e.tag) != tags.end()) m[e.v[0]] = m[e.v[1]] = 1;
    return m;
}

std::vector<BoundaryEdge> TriangleMesh::edges_with(std::initializer_list<BoundaryTag> tags) const
{
    std::vector<BoundaryEdge> out;
    for (const auto& e : boundary_edges)
        if (std::find(tags.begin(), tags.end(), e.tag) != tags.end()) out.push_back(e);
    return out;
}

std::pair<std::vector<int>, bool> TriangleMesh::chain(std::initializer_list<BoundaryTag> tags) const
{
    const auto edges = edges_with(tags);
    if (edges.empty()) return {{}, false};
    std::map<int, int> next;
    std::set<int> has_incoming;
    for (const auto& e : edges) {
        if (!next.emplace(e.v[0], e.v[1]).second)
            throw InvalidInput("boundary chain branches at node " + std::to_string(e.v[0]));
        has_incoming.insert(e.v[1]);
    }
    int start = edges.front().v[0];
    bool open = false;
    for (const auto& e : edges) {
        if (!has_incoming.count(e.v[0])) {
            if (open) throw InvalidInput("boundary tags form more than one open chain");
            start = e.v[0];
            open = true;
        }
    }
    std::vector<int> nodes{start};
    int cur = start;
    while (true) {
        const auto it = next.find(cur);
        if (it == next.end()) break;
        cur = it->second;
        if (cur == start) break;
        nodes.push_back(cur);
        if (nodes.size() > edges.size() + 1) throw InvalidInput("boundary chain does not terminate");
    }
    const std::size_t expected = open ? edges.size() + 1 : edges.size();
    if (nodes.size() != expected) throw InvalidInput("boundary tags form more than one loop");
    return {nodes, !open};
}

void TriangleMesh::validate() const
{
    for (std::size_t t = 0; t < triangles.size(); ++t)
        if (!(signed_area(t) > 0.0))
            throw InvalidInput("triangle " + std::to_string(t) + " has non-positive signed area");

    // edges used by exactly one triangle must be exactly the boundary edges
    std::map<std::pair<int, int>, int> count;
    for (const auto& tri : triangles)
        for (int k = 0; k < 3; ++k) {
            const int a = tri[k], b = tri[(k + 1) % 3];
            ++count[{a, b}];
        }
    std::set<std::pair<int, int>> open_edges;
    for (const auto& [e, c] : count)
        if (!count.count({e.second, e.first})) open_edges.insert(e);
    std::set<std::pair<int, int>> tagged;
    for (const auto& e : boundary_edges) tagged.insert({e.v[0], e.v[1]});
    if (open_edges != tagged) throw InvalidInput("boundary edges do not match the triangulation boundary");

    std::map<int, int> degree;
    for (const auto& e : boundary_edges) {
        ++degree[e.v[0]];
        ++degree[e.v[1]];
    }
    for (const auto& [v, d] : degree)
        if (d != 2) throw InvalidInput("boundary node " + std::to_string(v) + " is not on a closed loop");

    const auto outer = chain({BoundaryTag::Outer, BoundaryTag::Gamma});
    if (!outer.second) throw InvalidInput("outer boundary is not a closed loop");
    if (!edges_with({BoundaryTag::Obstacle}).empty()) {
        const auto obs = chain({BoundaryTag::Obstacle});
        if (!obs.second) throw InvalidInput("obstacle boundary is not a closed loop");
    }
}

void TriangleMesh::write(std::ostream& os) const
{
    char buf[96];
    os << "vertices " << vertices.size() << " triangles " << triangles.size() << '\n';
    for (const auto& v : vertices) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x(), v.y());
        os << buf;
    }
    for (const auto& t : triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    for (const auto& e : boundary_edges) os << e.v[0] << ' ' << e.v[1] << ' ' << to_string(e.tag) << '\n';
}

TriangleMesh TriangleMesh::read(std::istream& is)
{
    TriangleMesh m;
    std::string kw1, kw2;
    std::size_t nv = 0, nt = 0;
    if (!(is >> kw1 >> nv >> kw2 >> nt) || kw1 != "vertices" || kw2 != "triangles")
        throw InvalidInput("mesh file: bad header");
    m.vertices.resize(nv);
    for (auto& v : m.vertices)
        if (!(is >> v.x() >> v.y())) throw InvalidInput("mesh file: truncated vertex block");
    m.triangles.resize(nt);
    for (auto& t : m.triangles)
        if (!(is >> t[0] >> t[1] >> t[2])) throw InvalidInput("mesh file: truncated triangle block");
    int a = 0, b = 0;
    std::string tag;
    while (is >> a >> b >> tag) m.boundary_edges.push_back({{a, b}, tag_from_string(tag)});
    m.mesh_size = m.max_edge_length();
    return m;
}

namespace {

using RadiusFn = std::function<double(double)>;

double angle_diff(double a, double b)
{
    double d = std::fmod(a - b, kTwoPi);
    if (d > kPi) d -= kTwoPi;
    if (d <= -kPi) d += kTwoPi;
    return d;
}

std::size_t round_up(std::size_t n, std::size_t multiple) { return (n + multiple - 1) / multiple * multiple; }

/// Angles of n nodes spaced uniformly in arc length along the star curve
/// c + rho(t)(cos t, sin t), starting at t = 0; n = ceil(length / h) rounded
/// up to a multiple of `multiple`.
std::vector<double> arc_length_angles(const RadiusFn& rho, double h, std::size_t multiple)
{
    const std::size_t dense = 8192;
    std::vector<double> cum(dense + 1, 0.0);
    auto pt = [&](double t) { return Vec2(rho(t) * std::cos(t), rho(t) * std::sin(t)); };
    Vec2 prev = pt(0.0);
    for (std::size_t m = 1; m <= dense; ++m) {
        const Vec2 p = pt(kTwoPi * static_cast<double>(m) / dense);
        cum[m] = cum[m - 1] + (p - prev).norm();
        prev = p;
    }
    const double length = cum[dense];
    const std::size_t n =
        round_up(std::max<std::size_t>(6, static_cast<std::size_t>(std::ceil(length / h - 1e-9))), multiple);
    std::vector<double> angles(n);
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double target = length * static_cast<double>(i) / n;
        while (m + 1 < dense && cum[m + 1] < target) ++m;
        const double w = (target - cum[m]) / (cum[m + 1] - cum[m]);
        angles[i] = kTwoPi * (static_cast<double>(m) + w) / dense;
    }
    return angles;
}

/// Outer ring nodes: depend only on Omega, gamma and h.
std::vector<Vec2> outer_ring(const Domain& domain, double h, std::size_t multiple)
{
    const auto& outer = domain.outer;
    std::vector<double> breaks;  // angles about outer.center()
    if (!domain.gamma.is_full()) {
        breaks.push_back(wrap_angle(domain.gamma.start));
        breaks.push_back(wrap_angle(domain.gamma.end));
    }
    if (!outer.is_disk())
        for (const auto& v : outer.vertices()) breaks.push_back(outer.angle_of(v));
    if (breaks.empty()) breaks.push_back(0.0);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 breaks.end());

    std::vector<Vec2> pts;
    const std::size_t nb = breaks.size();
    for (std::size_t k = 0; k < nb; ++k) {
        const double a0 = breaks[k];
        double a1 = (k + 1 < nb) ? breaks[k + 1] : breaks[0] + kTwoPi;
        if (nb == 1) a1 = a0 + kTwoPi;
        if (outer.is_disk()) {
            const double len = outer.radius() * (a1 - a0);
            auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / h - 1e-9)));
            if (nb == 1) n = round_up(n, multiple);
            for (std::size_t i = 0; i < n; ++i)
                pts.push_back(outer.point_at_angle(a0 + (a1 - a0) * static_cast<double>(i) / n));
        } else {
            // straight piece between two boundary points
            const Vec2 p0 = outer.point_at_angle(a0);
            const Vec2 p1 = outer.point_at_angle(a1);
            const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((p1 - p0).norm() / h - 1e-9)));
            for (std::size_t i = 0; i < n; ++i) pts.push_back(p0 + (p1 - p0) * (static_cast<double>(i) / n));
        }
    }
    // polygon corners must be exact
    if (!outer.is_disk())
        for (auto& p : pts)
            for (const auto& v : outer.vertices())
                if ((p - v).norm() < 1e-9) p = v;
    return pts;
}

struct Ring {
    std::vector<int> ids;
    std::vector<double> angles;  // about the ring center, in [0, 2pi)
};

/// Triangulates the band between two nested rings by an angular merge. With
/// `sectors` > 1 both rings start at angle 0 and have node counts divisible by
/// `sectors`; one sector is merged and its connectivity replicated, so the
/// band is exactly equivariant under rotation by 2 pi / sectors.
void stitch(const Ring& in, const Ring& out, std::size_t sectors, std::vector<std::array<int, 3>>& tris)
{
    const std::size_t ni = in.ids.size(), no = out.ids.size();
    std::vector<double> ui(ni + 1);
    ui[0] = in.angles[0];
    for (std::size_t i = 1; i < ni; ++i) ui[i] = ui[0] + wrap_angle(in.angles[i] - in.angles[0]);
    ui[ni] = ui[0] + kTwoPi;

    std::size_t j0 = 0;
    if (sectors == 1) {
        double best = kTwoPi;
        for (std::size_t j = 0; j < no; ++j) {
            const double d = std::abs(angle_diff(out.angles[j], ui[0]));
            if (d < best) {
                best = d;
                j0 = j;
            }
        }
    }
    std::vector<double> uo(no + 1);
    uo[0] = ui[0] + angle_diff(out.angles[j0], ui[0]);
    for (std::size_t m = 1; m < no; ++m) uo[m] = uo[0] + wrap_angle(out.angles[(j0 + m) % no] - out.angles[j0]);
    uo[no] = uo[0] + kTwoPi;
    if (sectors > 1) {
        ui[ni / sectors] = ui[0] + kTwoPi / static_cast<double>(sectors);
        uo[no / sectors] = uo[0] + kTwoPi / static_cast<double>(sectors);
    }

    const std::size_t si = ni / sectors, so = no / sectors;
    std::vector<std::array<std::size_t, 3>> local;  // (kind, inner offset, outer offset)
    std::size_t i = 0, m = 0;
    while (i < si || m < so) {
        const bool advance_inner = (m == so) || (i < si && ui[i + 1] <= uo[m + 1]);
        if (advance_inner) {
            local.push_back({0, i, m});
            ++i;
        } else {
            local.push_back({1, i, m});
            ++m;
        }
    }
    for (std::size_t s = 0; s < sectors; ++s) {
        const std::size_t oi = s * si, oo = s * so;
        for (const auto& [kind, a, b] : local) {
            const int p = in.ids[(oi + a) % ni];
            const int o = out.ids[(j0 + oo + b) % no];
            if (kind == 0)
                tris.push_back({p, o, in.ids[(oi + a + 1) % ni]});
            else
                tris.push_back({p, o, out.ids[(j0 + oo + b + 1) % no]});
        }
    }
}

/// Regular strip between two rings with the same node count and matching angles.
void stitch_aligned(const Ring& in, const Ring& out, std::vector<std::array<int, 3>>& tris)
{
    const std::size_t n = in.ids.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        tris.push_back({in.ids[i], out.ids[i], in.ids[j]});
        tris.push_back({in.ids[j], out.ids[i], out.ids[j]});
    }
}

void check_orientation(const TriangleMesh& mesh)
{
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
        if (!(mesh.signed_area(t) > 0.0)) throw NumericalError("mesh tangled: triangle " + std::to_string(t) + " inverted");
}

}  // namespace

TriangleMesh build_mesh(const Domain& domain, const std::optional<ObstacleShape>& obstacle, double target_h,
                        std::size_t symmetry)
{
    if (!(target_h > 0.0)) throw InvalidInput("build_mesh: target_h must be positive");
    if (symmetry == 0) throw InvalidInput("build_mesh: symmetry order must be at least 1");
    if (symmetry > 1 && (!domain.outer.is_disk() || !domain.gamma.is_full() ||
                         (obstacle && (obstacle->center() - domain.outer.center()).norm() != 0.0)))
        throw InvalidInput("build_mesh: rotational symmetry needs a disk, full gamma and a concentric obstacle");
    domain.validate();
    if (obstacle) obstacle->validate(domain);

    const Vec2 c = obstacle ? obstacle->center() : domain.outer.center();
    const auto& outer = domain.outer;
    const RadiusFn inner_r = [&](double t) { return obstacle ? obstacle->radius(t) : 0.0; };
    const RadiusFn outer_r = [&](double t) { return outer.ray_distance(c, t); };

    double max_gap = 0.0;
    for (int s = 0; s < 2048; ++s) {
        const double t = kTwoPi * s / 2048.0;
        max_gap = std::max(max_gap, outer_r(t) - inner_r(t));
    }
    // radial spacing 0.8 h keeps the strip diagonals near 1.3 h
    const double radial_h = 0.8 * target_h;
    const auto rings = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(max_gap / radial_h - 1e-9)));

    TriangleMesh mesh;
    auto add_vertex = [&](const Vec2& p) {
        mesh.vertices.push_back(p);
        return static_cast<int>(mesh.vertices.size() - 1);
    };
    auto polar = [&](const Vec2& p) { return wrap_angle(std::atan2(p.y() - c.y(), p.x() - c.x())); };

    // The outer ring is fixed by the domain alone. Rings in the outer quarter
    // of the gap copy its angles and rings in the inner quarter copy the
    // obstacle angles, so both boundary bands are regular strips; the free
    // rings in between absorb the change in node count at a fixed distance
    // from either boundary.
    enum class Source { Obstacle, Outer, Own };
    std::vector<Source> source(rings + 1, Source::Own);
    source[0] = obstacle ? Source::Obstacle : Source::Own;
    source[rings] = Source::Outer;
    std::size_t last_obstacle_aligned = 0;
    for (std::size_t k = 1; k < rings; ++k) {
        const double s = static_cast<double>(k) / static_cast<double>(rings);
        if (k + 1 == rings || s >= 0.75)
            source[k] = Source::Outer;
        else if (obstacle && (s <= 0.25 || (k == 1 && rings >= 3))) {
            source[k] = Source::Obstacle;
            last_obstacle_aligned = k;
        }
    }
    auto ring_radius = [&](std::size_t k) -> RadiusFn {
        const double s = static_cast<double>(k) / static_cast<double>(rings);
        return [&, s](double t) { return inner_r(t) + s * (outer_r(t) - inner_r(t)); };
    };

    Ring rout;
    const std::vector<Vec2> outer_pts = outer_ring(domain, target_h, symmetry);
    for (const Vec2& p : outer_pts) rout.angles.push_back(polar(p));

    std::vector<Ring> ring_list;
    int center_id = -1;
    std::vector<double> obstacle_angles;
    if (obstacle) {
        // sized by the outermost ring sharing these angles, so its spacing stays below h
        obstacle_angles = arc_length_angles(ring_radius(last_obstacle_aligned), target_h, symmetry);
        Ring r0;
        for (double t : obstacle_angles) {
            r0.ids.push_back(add_vertex(obstacle->point(t)));
            r0.angles.push_back(t);
        }
        ring_list.push_back(std::move(r0));
    } else {
        center_id = add_vertex(c);
    }
    for (std::size_t k = 1; k < rings; ++k) {
        const RadiusFn rho = ring_radius(k);
        const std::vector<double> angles = source[k] == Source::Outer      ? rout.angles
                                           : source[k] == Source::Obstacle ? obstacle_angles
                                                                           : arc_length_angles(rho, target_h, symmetry);
        Ring rk;
        for (double t : angles) {
            rk.ids.push_back(add_vertex(c + rho(t) * Vec2(std::cos(t), std::sin(t))));
            rk.angles.push_back(t);
        }
        ring_list.push_back(std::move(rk));
    }
    for (const Vec2& p : outer_pts) rout.ids.push_back(add_vertex(p));
    ring_list.push_back(rout);
    // ring_list[0] is ring k = 1 when there is no obstacle
    const std::size_t k0 = obstacle ? 0 : 1;
    std::vector<char> aligned;
    for (std::size_t q = 0; q + 1 < ring_list.size(); ++q)
        aligned.push_back(source[q + k0] == source[q + k0 + 1] && source[q + k0] != Source::Own);

    if (center_id >= 0) {
        const Ring& first = ring_list.front();
        // fan around the center, ordered by angle
        std::vector<std::size_t> order(first.ids.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return first.angles[a] < first.angles[b]; });
        for (std::size_t i = 0; i < order.size(); ++i)
            mesh.triangles.push_back({center_id, first.ids[order[i]], first.ids[order[(i + 1) % order.size()]]});
    }
    for (std::size_t k = 0; k + 1 < ring_list.size(); ++k) {
        if (aligned[k])
            stitch_aligned(ring_list[k], ring_list[k + 1], mesh.triangles);
        else
            stitch(ring_list[k], ring_list[k + 1], symmetry, mesh.triangles);
    }

    if (obstacle) {
        const auto& r0 = ring_list.front().ids;
        for (std::size_t i = 0; i < r0.size(); ++i)
            mesh.boundary_edges.push_back({{r0[(i + 1) % r0.size()], r0[i]}, BoundaryTag::Obstacle});
    }
    const auto& ro = rout.ids;
    for (std::size_t j = 0; j < ro.size(); ++j) {
        const int a = ro[j], b = ro[(j + 1) % ro.size()];
        const Vec2 mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
        const BoundaryTag tag = domain.gamma.contains(outer.angle_of(mid)) ? BoundaryTag::Gamma : BoundaryTag::Outer;
        mesh.boundary_edges.push_back({{a, b}, tag});
    }

    check_orientation(mesh);
    mesh.mesh_size = mesh.max_edge_length();
    return mesh;
}

TriangleMesh relocate_mesh(const TriangleMesh& mesh, const ObstacleShape& from, const ObstacleShape& to)
{
    const std::size_t n = mesh.num_vertices();
    const auto on_boundary = mesh.boundary_mask();
    const auto on_obstacle = mesh.tagged_mask({BoundaryTag::Obstacle});

    Eigen::MatrixX2d disp = Eigen::MatrixX2d::Zero(static_cast<Eigen::Index>(n), 2);
    for (std::size_t v = 0; v < n; ++v) {
        if (!on_obstacle[v]) continue;
        const Vec2 d = mesh.vertices[v] - from.center();
        const double t = std::atan2(d.y(), d.x());
        disp.row(static_cast<Eigen::Index>(v)) = (to.point(t) - mesh.vertices[v]).transpose();
    }

    std::vector<int> dof(n, -1);
    int ni = 0;
    for (std::size_t v = 0; v < n; ++v)
        if (!on_boundary[v]) dof[v] = ni++;

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::MatrixX2d rhs = Eigen::MatrixX2d::Zero(ni, 2);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double area = mesh.signed_area(t);
        Vec2 grad[3];
        for (int k = 0; k < 3; ++k) {
            const Vec2 e = mesh.vertices[tri[(k + 2) % 3]] - mesh.vertices[tri[(k + 1) % 3]];
            grad[k] = Vec2(-e.y(), e.x()) / (2.0 * area);
        }
        for (int a = 0; a < 3; ++a) {
            if (dof[tri[a]] < 0) continue;
            for (int b = 0; b < 3; ++b) {
                const double kab = area * grad[a].dot(grad[b]);
                if (dof[tri[b]] >= 0)
                    trip.emplace_back(dof[tri[a]], dof[tri[b]], kab);
                else
                    rhs.row(dof[tri[a]]) -= kab * disp.row(tri[b]);
            }
        }
    }
    TriangleMesh out = mesh;
    if (ni > 0) {
        Eigen::SparseMatrix<double> L(ni, ni);
        L.setFromTriplets(trip.begin(), trip.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(L);
        if (solver.info() != Eigen::Success) throw NumericalError("relocate_mesh: Laplace factorization failed");
        const Eigen::MatrixX2d interior = solver.solve(rhs);
        for (std::size_t v = 0; v < n; ++v)
            if (dof[v] >= 0) disp.row(static_cast<Eigen::Index>(v)) = interior.row(dof[v]);
    }
    for (std::size_t v = 0; v < n; ++v) {
        if (on_obstacle[v]) {
            const Vec2 d = mesh.vertices[v] - from.center();
            out.vertices[v] = to.point(std::atan2(d.y(), d.x()));
        } else {
            out.vertices[v] += disp.row(static_cast<Eigen::Index>(v)).transpose();
        }
    }
    check_orientation(out);
    out.mesh_size = out.max_edge_length();
    return out;
}

}  // namespace geoinv::geometry
