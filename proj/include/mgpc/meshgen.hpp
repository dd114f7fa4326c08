#pragma once

#include <cstddef>

#include "mgpc/mesh.hpp"

namespace mgpc::meshgen {

/// Regular icosahedron inscribed in the unit sphere (12 vertices, 20 faces).
TriangleMesh icosahedron();

/// Icosahedron with every face split into frequency^2 triangles, projected
/// onto the sphere of the given radius. 10 f^2 + 2 vertices.
TriangleMesh geodesic_sphere(std::size_t frequency, double radius = 1.0);

/// Recursive 4-to-1 subdivision depth `level` (= geodesic_sphere(2^level)).
TriangleMesh icosphere(std::size_t level, double radius = 1.0);

/// Planar nx-by-ny vertex grid on [0,width]x[0,height], alternating diagonals.
TriangleMesh rectangle(std::size_t nx, std::size_t ny, double width, double height);

/**
 * Desk-scale stand-in for an atrial surface: an elongated, bumpy closed
 * surface with four small circular openings (giving boundary vertices),
 * roughly 3000 vertices at the default frequency. Not normalized.
 */
TriangleMesh demo_surface(std::size_t frequency = 18);

} // namespace mgpc::meshgen
