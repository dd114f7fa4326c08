#include "mgpc/geodesic.hpp"

#include <map>
#include <mutex>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/SparseCholesky>

#include "mgpc/error.hpp"
#include "mgpc/laplace.hpp"

namespace mgpc {

struct HeatGeodesicSolver::Impl {
    TriangleMesh mesh;
    double t = 0.0;
    Eigen::VectorXd mass;
    std::vector<VertexId> pinned;  // one per component
    Eigen::SimplicialLDLT<SparseMatrix> heat;
    Eigen::SimplicialLDLT<SparseMatrix> poisson;
    // Per-triangle gradients of the three hat functions, and areas.
    std::vector<std::array<Eigen::Vector3d, 3>> grads;
    std::vector<double> areas;
};

HeatGeodesicSolver::HeatGeodesicSolver(const TriangleMesh& mesh, double t_factor) : impl_(std::make_unique<Impl>()) {
    if (!(t_factor > 0.0)) fail(ErrorCode::argument, "t_factor must be positive");
    auto& m = *impl_;
    m.mesh = mesh;
    const double h = mesh.mean_edge_length();
    m.t = t_factor * h * h;

    const FemOperators ops = assemble_operators(mesh, MassKind::lumped);
    m.mass = ops.mass.diagonal();

    SparseMatrix heat_op = ops.mass + m.t * ops.stiffness;
    m.heat.compute(heat_op);
    if (m.heat.info() != Eigen::Success) fail(ErrorCode::numerical, "heat operator factorization failed");

    const std::size_t n = mesh.vertex_count();
    std::vector<bool> is_pinned(n, false);
    std::vector<bool> seen(mesh.component_count(), false);
    for (VertexId v = 0; v < n; ++v) {
        const auto c = mesh.component_of()[v];
        if (!seen[c]) {
            seen[c] = true;
            is_pinned[v] = true;
            m.pinned.push_back(v);
        }
    }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(ops.stiffness.nonZeros()) + n);
    for (int k = 0; k < ops.stiffness.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(ops.stiffness, k); it; ++it) {
            const auto r = static_cast<std::size_t>(it.row()), c = static_cast<std::size_t>(it.col());
            if (!is_pinned[r] && !is_pinned[c]) trip.emplace_back(it.row(), it.col(), it.value());
        }
    }
    for (auto v : m.pinned) trip.emplace_back(static_cast<int>(v), static_cast<int>(v), 1.0);
    SparseMatrix pinned_op(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    pinned_op.setFromTriplets(trip.begin(), trip.end());
    m.poisson.compute(pinned_op);
    if (m.poisson.info() != Eigen::Success) fail(ErrorCode::numerical, "Poisson operator factorization failed");

    const auto& tris = mesh.triangles();
    m.grads.resize(tris.size());
    m.areas.resize(tris.size());
    for (std::size_t t = 0; t < tris.size(); ++t) {
        const Eigen::Vector3d& a = mesh.vertex(tris[t][0]);
        const Eigen::Vector3d& b = mesh.vertex(tris[t][1]);
        const Eigen::Vector3d& c = mesh.vertex(tris[t][2]);
        const Eigen::Vector3d cr = (b - a).cross(c - a);
        const double area2 = cr.norm();
        const Eigen::Vector3d nrm = cr / area2;
        const Eigen::Vector3d* x[3] = {&a, &b, &c};
        for (int l = 0; l < 3; ++l) {
            // grad N_l is the in-plane normal of the opposite edge, pointing toward vertex l.
            const Eigen::Vector3d& prev = *x[(l + 2) % 3];
            const Eigen::Vector3d& next = *x[(l + 1) % 3];
            m.grads[t][l] = nrm.cross(prev - next) / area2;
        }
        m.areas[t] = 0.5 * area2;
    }
}

HeatGeodesicSolver::~HeatGeodesicSolver() = default;
HeatGeodesicSolver::HeatGeodesicSolver(HeatGeodesicSolver&&) noexcept = default;
HeatGeodesicSolver& HeatGeodesicSolver::operator=(HeatGeodesicSolver&&) noexcept = default;

double HeatGeodesicSolver::time_step() const noexcept { return impl_->t; }
const TriangleMesh& HeatGeodesicSolver::mesh() const noexcept { return impl_->mesh; }

GeodesicField HeatGeodesicSolver::solve(VertexId source) const {
    const auto& m = *impl_;
    const std::size_t n = m.mesh.vertex_count();
    if (source >= n) fail(ErrorCode::argument, "source vertex " + std::to_string(source) + " out of range");
    if (m.mesh.component_count() > 1) {
        const auto src_c = m.mesh.component_of()[source];
        for (VertexId v = 0; v < n; ++v) {
            const auto c = m.mesh.component_of()[v];
            if (c != src_c) {
                fail(ErrorCode::geometry, "component " + std::to_string(c) + " (containing vertex " + std::to_string(v) +
                                              ") is unreachable from source " + std::to_string(source) +
                                              ": infinite distance");
            }
        }
    }

    Eigen::VectorXd delta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    delta(static_cast<Eigen::Index>(source)) = m.mass(static_cast<Eigen::Index>(source));
    const Eigen::VectorXd u = m.heat.solve(delta);

    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    const auto& tris = m.mesh.triangles();
    for (std::size_t t = 0; t < tris.size(); ++t) {
        Eigen::Vector3d g = Eigen::Vector3d::Zero();
        for (int l = 0; l < 3; ++l) g += u(static_cast<Eigen::Index>(tris[t][l])) * m.grads[t][l];
        const double len = g.norm();
        if (!(len > 0.0)) continue;
        const Eigen::Vector3d x = -g / len;
        for (int l = 0; l < 3; ++l) b(static_cast<Eigen::Index>(tris[t][l])) += m.areas[t] * x.dot(m.grads[t][l]);
    }
    for (auto v : m.pinned) b(static_cast<Eigen::Index>(v)) = 0.0;
    const Eigen::VectorXd phi = m.poisson.solve(b);
    if (!phi.allFinite()) fail(ErrorCode::numerical, "non-finite geodesic distances from source " + std::to_string(source));

    GeodesicField field;
    field.source = source;
    field.distances.resize(n);
    const double base = phi(static_cast<Eigen::Index>(source));
    for (std::size_t v = 0; v < n; ++v) field.distances[v] = std::max(0.0, phi(static_cast<Eigen::Index>(v)) - base);
    field.distances[source] = 0.0;
    return field;
}

GeodesicField heat_geodesics(const TriangleMesh& mesh, VertexId source, double t_factor) {
    return HeatGeodesicSolver(mesh, t_factor).solve(source);
}

DistanceProvider heat_distance_provider(std::shared_ptr<const HeatGeodesicSolver> solver) {
    struct Memo {
        std::shared_ptr<const HeatGeodesicSolver> solver;
        std::mutex mutex;
        std::map<VertexId, std::vector<double>> fields;
    };
    auto memo = std::make_shared<Memo>();
    memo->solver = std::move(solver);
    return [memo](VertexId v) {
        {
            std::lock_guard lock(memo->mutex);
            auto it = memo->fields.find(v);
            if (it != memo->fields.end()) return it->second;
        }
        auto d = memo->solver->solve(v).distances;
        std::lock_guard lock(memo->mutex);
        return memo->fields.emplace(v, std::move(d)).first->second;
    };
}

} // namespace mgpc
