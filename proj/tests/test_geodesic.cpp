#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mgpc/geodesic.hpp"
#include "mgpc/meshgen.hpp"
#include "mgpc/random.hpp"
#include "support.hpp"

using namespace mgpc;

namespace {

VertexId antipode(const TriangleMesh& mesh, VertexId v) {
    const Eigen::Vector3d p = mesh.vertices()[v];
    VertexId best = 0;
    double best_dot = 2.0;
    for (VertexId u = 0; u < mesh.vertex_count(); ++u) {
        const double d = mesh.vertices()[u].normalized().dot(p.normalized());
        if (d < best_dot) {
            best_dot = d;
            best = u;
        }
    }
    return best;
}

} // namespace

TEST_CASE("antipodal distance on the unit sphere") {
    const auto mesh = meshgen::icosphere(5);
    REQUIRE(mesh.vertex_count() >= 10242);
    const HeatGeodesicSolver solver(mesh);
    for (VertexId src : {0u, 1234u, 7000u}) {
        const auto field = solver.solve(src);
        CHECK(field.source == src);
        CHECK(field.distances[src] == 0.0);
        const double d = field.distances[antipode(mesh, src)];
        MESSAGE("antipodal distance " << d);
        CHECK(std::abs(d - std::numbers::pi) / std::numbers::pi < 0.05);
    }
}

TEST_CASE("planar rectangle distances are Euclidean") {
    const auto mesh = meshgen::rectangle(41, 21, 2.0, 1.0);
    const VertexId src = 20 * 41 / 2 + 10;
    const auto d = heat_geodesics(mesh, src).distances;
    std::vector<double> rel;
    for (VertexId v = 0; v < mesh.vertex_count(); ++v) {
        if (v == src) continue;
        const double e = (mesh.vertices()[v] - mesh.vertices()[src]).norm();
        rel.push_back(std::abs(d[v] - e) / e);
    }
    std::nth_element(rel.begin(), rel.begin() + rel.size() / 2, rel.end());
    MESSAGE("median relative error " << rel[rel.size() / 2]);
    CHECK(rel[rel.size() / 2] < 0.03);
}

TEST_CASE("distances are nearly symmetric") {
    const auto mesh = meshgen::icosphere(4);
    const HeatGeodesicSolver solver(mesh);
    Rng rng = make_rng(3);
    std::uniform_int_distribution<VertexId> pick(0, mesh.vertex_count() - 1);
    for (int i = 0; i < 10; ++i) {
        const VertexId a = pick(rng), b = pick(rng);
        if (a == b) continue;
        const double ab = solver.solve(a).distances[b], ba = solver.solve(b).distances[a];
        CHECK(std::abs(ab - ba) / std::max(ab, ba) < 0.05);
    }
}

TEST_CASE("distances scale with the mesh") {
    const auto mesh = meshgen::icosphere(3);
    const auto big = meshgen::icosphere(3, 3.0);
    const auto a = heat_geodesics(mesh, 5).distances;
    const auto b = heat_geodesics(big, 5).distances;
    for (std::size_t v = 0; v < a.size(); ++v) CHECK(b[v] == doctest::Approx(3.0 * a[v]).epsilon(1e-6));
}

TEST_CASE("provider memoizes and solver validates input") {
    const auto mesh = meshgen::icosphere(2);
    auto solver = std::make_shared<const HeatGeodesicSolver>(mesh);
    const auto provider = heat_distance_provider(solver);
    CHECK(provider(3) == solver->solve(3).distances);
    CHECK(provider(3) == provider(3));
    CHECK(solver->time_step() > 0.0);
    CHECK_MGPC_ERROR(solver->solve(static_cast<VertexId>(mesh.vertex_count())), ErrorCode::argument);
    CHECK_MGPC_ERROR(HeatGeodesicSolver(mesh, 0.0), ErrorCode::argument);
}

TEST_CASE("an unreachable component is an error") {
    const TriangleMesh two({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 0, 0}, {6, 0, 0}, {5, 1, 0}},
                           {Triangle{0, 1, 2}, Triangle{3, 4, 5}});
    CHECK_MGPC_ERROR(heat_geodesics(two, 0), ErrorCode::geometry);
}
