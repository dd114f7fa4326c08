#pragma once

#include <memory>
#include <vector>

#include "mgpc/mesh.hpp"

namespace mgpc {

struct GeodesicField {
    VertexId source = 0;
    std::vector<double> distances;
};

/**
 * Heat-method geodesic distances. Factorizes (M + t A) and the pinned
 * stiffness once; each source then costs two sparse triangular solves.
 * Immutable after construction, so solve() may run concurrently.
 */
class HeatGeodesicSolver {
public:
    explicit HeatGeodesicSolver(const TriangleMesh& mesh, double t_factor = 1.0);
    ~HeatGeodesicSolver();
    HeatGeodesicSolver(HeatGeodesicSolver&&) noexcept;
    HeatGeodesicSolver& operator=(HeatGeodesicSolver&&) noexcept;

    GeodesicField solve(VertexId source) const;
    double time_step() const noexcept;
    const TriangleMesh& mesh() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

GeodesicField heat_geodesics(const TriangleMesh& mesh, VertexId source, double t_factor = 1.0);

/// Distance provider backed by a solver, memoizing each source.
DistanceProvider heat_distance_provider(std::shared_ptr<const HeatGeodesicSolver> solver);

} // namespace mgpc
