#include "mgpc/meshgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>
#include <vector>

#include <Eigen/Geometry>

#include "mgpc/error.hpp"

namespace mgpc::meshgen {

namespace {

struct IcosahedronData {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Triangle> faces;
};

IcosahedronData icosahedron_data() {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    IcosahedronData d;
    d.vertices = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
                  {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
                  {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& v : d.vertices) {
        v.normalize();
    }
    d.faces = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
               {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
               {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
               {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    return d;
}

} // namespace

TriangleMesh icosahedron() {
    auto d = icosahedron_data();
    return TriangleMesh(std::move(d.vertices), std::move(d.faces));
}

TriangleMesh geodesic_sphere(std::size_t frequency, double radius) {
    if (frequency == 0) {
        fail(ErrorCode::argument, "geodesic sphere frequency must be positive");
    }
    const auto ico = icosahedron_data();
    const long n = static_cast<long>(frequency);

    // Lattice points are keyed by their integer barycentric weights on the
    // original icosahedron vertices so shared edges produce shared vertices.
    using Key = std::array<std::pair<VertexId, long>, 3>;
    std::map<Key, VertexId> index;
    std::vector<Eigen::Vector3d> vertices;
    auto lattice_vertex = [&](const Triangle& f, long i, long j) {
        const long k = n - i - j;
        std::array<std::pair<VertexId, long>, 3> w{{{f[0], i}, {f[1], j}, {f[2], k}}};
        Key key{};
        std::size_t used = 0;
        for (const auto& e : w) {
            if (e.second != 0) key[used++] = e;
        }
        for (std::size_t a = used; a < 3; ++a) key[a] = {static_cast<VertexId>(-1), 0};
        std::sort(key.begin(), key.begin() + static_cast<long>(used));
        auto [it, inserted] = index.try_emplace(key, vertices.size());
        if (inserted) {
            Eigen::Vector3d p = (static_cast<double>(i) * ico.vertices[f[0]] + static_cast<double>(j) * ico.vertices[f[1]] +
                                 static_cast<double>(k) * ico.vertices[f[2]]) /
                                static_cast<double>(n);
            vertices.push_back(radius * p.normalized());
        }
        return it->second;
    };

    std::vector<Triangle> triangles;
    triangles.reserve(ico.faces.size() * frequency * frequency);
    for (const auto& f : ico.faces) {
        // Point (i,j) has weight i on f[0], j on f[1], n-i-j on f[2].
        for (long i = 0; i < n; ++i) {
            for (long j = 0; j < n - i; ++j) {
                const VertexId a = lattice_vertex(f, i, j);
                const VertexId b = lattice_vertex(f, i + 1, j);
                const VertexId c = lattice_vertex(f, i, j + 1);
                triangles.push_back({a, b, c});
                if (i + j + 2 <= n) {
                    const VertexId d = lattice_vertex(f, i + 1, j + 1);
                    triangles.push_back({b, d, c});
                }
            }
        }
    }
    // Orient outward.
    for (auto& t : triangles) {
        const Eigen::Vector3d nrm = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
        if (nrm.dot(vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) < 0.0) {
            std::swap(t[1], t[2]);
        }
    }
    return TriangleMesh(std::move(vertices), std::move(triangles));
}

TriangleMesh icosphere(std::size_t level, double radius) {
    return geodesic_sphere(std::size_t{1} << level, radius);
}

TriangleMesh rectangle(std::size_t nx, std::size_t ny, double width, double height) {
    if (nx < 2 || ny < 2) {
        fail(ErrorCode::argument, "rectangle grid needs at least 2x2 vertices");
    }
    std::vector<Eigen::Vector3d> vertices;
    vertices.reserve(nx * ny);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            vertices.emplace_back(width * static_cast<double>(i) / static_cast<double>(nx - 1),
                                  height * static_cast<double>(j) / static_cast<double>(ny - 1), 0.0);
        }
    }
    std::vector<Triangle> triangles;
    auto id = [nx](std::size_t i, std::size_t j) { return j * nx + i; };
    for (std::size_t j = 0; j + 1 < ny; ++j) {
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            const VertexId a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            if ((i + j) % 2 == 0) {
                triangles.push_back({a, b, c});
                triangles.push_back({a, c, d});
            } else {
                triangles.push_back({a, b, d});
                triangles.push_back({b, c, d});
            }
        }
    }
    return TriangleMesh(std::move(vertices), std::move(triangles));
}

TriangleMesh demo_surface(std::size_t frequency) {
    const TriangleMesh sphere = geodesic_sphere(frequency);

    // Openings: unit directions and angular radii (radians).
    const std::array<std::pair<Eigen::Vector3d, double>, 4> holes{{
        {Eigen::Vector3d(0.6, 0.75, 0.3).normalized(), 0.16},
        {Eigen::Vector3d(0.6, -0.75, 0.3).normalized(), 0.16},
        {Eigen::Vector3d(-0.7, 0.2, 0.7).normalized(), 0.13},
        {Eigen::Vector3d(-0.2, -0.1, -1.0).normalized(), 0.2},
    }};

    std::vector<bool> removed(sphere.vertex_count(), false);
    for (VertexId v = 0; v < sphere.vertex_count(); ++v) {
        for (const auto& [dir, radius] : holes) {
            if (std::acos(std::clamp(sphere.vertex(v).dot(dir), -1.0, 1.0)) < radius) {
                removed[v] = true;
            }
        }
    }
    std::vector<VertexId> remap(sphere.vertex_count(), static_cast<VertexId>(-1));
    std::vector<Eigen::Vector3d> vertices;
    for (VertexId v = 0; v < sphere.vertex_count(); ++v) {
        if (removed[v]) continue;
        remap[v] = vertices.size();
        const Eigen::Vector3d& p = sphere.vertex(v);
        // Elongate, flatten, and add two smooth lobes.
        const double lobe = 0.25 * std::exp(-8.0 * (p - Eigen::Vector3d(0.8, 0.0, 0.6)).squaredNorm()) +
                            0.18 * std::exp(-6.0 * (p - Eigen::Vector3d(-0.9, 0.3, -0.2)).squaredNorm());
        const double r = 1.0 + lobe + 0.05 * std::sin(3.0 * p.x()) * std::cos(2.0 * p.y());
        vertices.emplace_back(1.8 * r * p.x(), 1.1 * r * p.y(), 0.85 * r * p.z());
    }
    std::vector<Triangle> triangles;
    for (const auto& t : sphere.triangles()) {
        if (removed[t[0]] || removed[t[1]] || removed[t[2]]) continue;
        triangles.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
    }
    // Drop vertices orphaned by the cut.
    std::vector<bool> used(vertices.size(), false);
    for (const auto& t : triangles) {
        for (VertexId v : t) used[v] = true;
    }
    std::vector<VertexId> compact(vertices.size(), static_cast<VertexId>(-1));
    std::vector<Eigen::Vector3d> kept;
    for (VertexId v = 0; v < vertices.size(); ++v) {
        if (used[v]) {
            compact[v] = kept.size();
            kept.push_back(vertices[v]);
        }
    }
    for (auto& t : triangles) {
        for (auto& v : t) v = compact[v];
    }
    return TriangleMesh(std::move(kept), std::move(triangles));
}

} // namespace mgpc::meshgen
