#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace mgpc {

using VertexId = std::size_t;
using Triangle = std::array<VertexId, 3>;
using Edge = std::pair<VertexId, VertexId>;

/**
 * Validated triangulated 2-manifold (open or closed).
 *
 * Construction checks index ranges, rejects zero-area triangles, non-manifold
 * edges (more than two incident triangles) and unreferenced vertices, then
 * computes barycentric vertex areas and the boundary mask. Immutable afterwards.
 */
class TriangleMesh {
public:
    TriangleMesh() = default;
    TriangleMesh(std::vector<Eigen::Vector3d> vertices, std::vector<Triangle> triangles);

    std::size_t vertex_count() const noexcept { return vertices_.size(); }
    std::size_t triangle_count() const noexcept { return triangles_.size(); }

    const std::vector<Eigen::Vector3d>& vertices() const noexcept { return vertices_; }
    const Eigen::Vector3d& vertex(VertexId v) const { return vertices_[v]; }
    const std::vector<Triangle>& triangles() const noexcept { return triangles_; }

    /// One third of the area of every incident triangle.
    const std::vector<double>& vertex_areas() const noexcept { return vertex_areas_; }
    /// True for vertices on an edge with exactly one incident triangle.
    const std::vector<bool>& boundary_mask() const noexcept { return boundary_; }
    bool has_boundary() const noexcept { return boundary_vertex_count_ > 0; }
    std::size_t boundary_vertex_count() const noexcept { return boundary_vertex_count_; }

    double total_area() const noexcept { return total_area_; }
    double triangle_area(std::size_t t) const;

    /// Unique undirected edges, each stored with first < second.
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    double mean_edge_length() const noexcept { return mean_edge_length_; }

    /// Vertex adjacency lists (sorted).
    const std::vector<std::vector<VertexId>>& neighbors() const noexcept { return neighbors_; }

    /// Connected-component label per vertex, components numbered from 0 in order of lowest vertex.
    const std::vector<std::size_t>& component_of() const noexcept { return component_; }
    std::size_t component_count() const noexcept { return component_count_; }

private:
    std::vector<Eigen::Vector3d> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<double> vertex_areas_;
    std::vector<bool> boundary_;
    std::size_t boundary_vertex_count_ = 0;
    double total_area_ = 0.0;
    std::vector<Edge> edges_;
    double mean_edge_length_ = 0.0;
    std::vector<std::vector<VertexId>> neighbors_;
    std::vector<std::size_t> component_;
    std::size_t component_count_ = 0;
};

enum class MeshFormat { off, ply_ascii };

TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
/// Format chosen from the file extension (.off / .ply).
TriangleMesh load_mesh(const std::filesystem::path& path);

TriangleMesh parse_off(const std::string& text);
TriangleMesh parse_ply(const std::string& text);

/// Center on the vertex centroid and divide by the largest per-axis
/// (population) standard deviation of the vertex coordinates.
TriangleMesh normalize_coordinates(const TriangleMesh& mesh);

/// Scalar attribute attached to every vertex when exporting.
struct VertexAttribute {
    std::string name;
    std::span<const double> values;
};

/// ASCII PLY with one float property per attribute after x, y, z.
void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh,
               std::span<const VertexAttribute> attributes = {});
void write_off(const std::filesystem::path& path, const TriangleMesh& mesh);

/// ASCII PLY contents plus every extra per-vertex property, keyed by name.
struct PlyContents {
    TriangleMesh mesh;
    std::vector<std::pair<std::string, std::vector<double>>> vertex_properties;

    const std::vector<double>* property(const std::string& name) const;
};
PlyContents read_ply_with_properties(const std::filesystem::path& path);

/// Distance field from one source vertex to every vertex.
using DistanceProvider = std::function<std::vector<double>(VertexId)>;

/// Mean distance over all unordered pairs of distinct points; duplicate indices
/// are rejected.
double average_pairwise_geodesic(const TriangleMesh& mesh, std::span<const VertexId> points,
                                 const DistanceProvider& distances);

} // namespace mgpc
