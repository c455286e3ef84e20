#pragma once

#include "geoinv/geometry/shape.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

namespace geoinv::geometry {

enum class BoundaryTag { Outer, Gamma, Obstacle };

const char* to_string(BoundaryTag tag);
BoundaryTag tag_from_string(const std::string& s);

/// Boundary edge oriented with the computational domain on its left, so the
/// outward normal of Omega \ D is the right-hand normal (d.y, -d.x)/|d|.
struct BoundaryEdge {
    std::array<int, 2> v;
    BoundaryTag tag;
};

/// P1 triangulation of Omega \ closure(D) with tagged boundary parts.
struct TriangleMesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;
    double mesh_size = 0.0;

    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_triangles() const { return triangles.size(); }

    double signed_area(std::size_t t) const;
    Vec2 barycenter(std::size_t t) const;
    double total_area() const;
    double max_edge_length() const;

    /// Nodes on any boundary edge.
    std::vector<char> boundary_mask() const;
    /// Nodes touched by edges carrying one of the given tags.
    std::vector<char> tagged_mask(std::initializer_list<BoundaryTag> tags) const;
    /// Edges with one of the given tags, in stored order.
    std::vector<BoundaryEdge> edges_with(std::initializer_list<BoundaryTag> tags) const;

    /// Ordered node chain following the edges with the given tags. Returns the
    /// nodes and whether the chain closes on itself.
    std::pair<std::vector<int>, bool> chain(std::initializer_list<BoundaryTag> tags) const;

    /// Checks every invariant (positive areas, closed loops, tag coverage);
    /// throws InvalidInput with the first failure.
    void validate() const;

    /// ASCII format: "vertices N triangles M", N "x y", M "i j k", then "i j TAG".
    void write(std::ostream& os) const;
    static TriangleMesh read(std::istream& is);
};

/// Builds a boundary-conforming mesh of Omega \ closure(D) (or of Omega when
/// `obstacle` is empty) with maximum edge length close to `target_h`.
///
/// Nodes are laid out on nested star-shaped rings about the obstacle center,
/// interpolating between the obstacle curve and the outer boundary; consecutive
/// rings are stitched by an angular merge. The outer ring depends only on Omega,
/// gamma and target_h, so every obstacle shares the same observation nodes.
///
/// `symmetry` > 1 (disk, full gamma, concentric obstacle only) rounds every ring
/// count up to a multiple of it and replicates one angular sector, so the
/// connectivity is exactly invariant under rotation by 2 pi / symmetry.
TriangleMesh build_mesh(const Domain& domain, const std::optional<ObstacleShape>& obstacle, double target_h,
                        std::size_t symmetry = 1);

/// Moves the obstacle nodes of `mesh` (built for `from`) onto `to` and relocates
/// interior nodes by a discrete Laplace extension of the boundary displacement.
/// Throws NumericalError("mesh tangled") if a triangle inverts.
TriangleMesh relocate_mesh(const TriangleMesh& mesh, const ObstacleShape& from, const ObstacleShape& to);

}  // namespace geoinv::geometry
