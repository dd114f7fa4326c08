#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mgpc/baseline.hpp"
#include "mgpc/meshgen.hpp"
#include "mgpc/sampling.hpp"
#include "support.hpp"

using namespace mgpc;

namespace {

std::vector<VertexId> all_vertices(std::size_t n) {
    std::vector<VertexId> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

} // namespace

TEST_CASE("training vertices keep their own label") {
    const auto mesh = meshgen::icosphere(2);
    const auto data = LabeledDataset::from_labels({0, 5, 9}, {1, 0, 1}, Fidelity::high);
    const std::vector<VertexId> q{0, 5, 9};
    CHECK(nn_classify(mesh, data, q) == std::vector<int>{1, 0, 1});
}

TEST_CASE("a single training point labels everything") {
    const auto mesh = meshgen::icosphere(2);
    const auto data = LabeledDataset::from_labels({17}, {1}, Fidelity::high);
    const auto labels = nn_classify(mesh, data, all_vertices(mesh.vertex_count()));
    CHECK(std::all_of(labels.begin(), labels.end(), [](int y) { return y == 1; }));
}

TEST_CASE("ties go to the lowest training id and order does not matter") {
    const auto mesh = meshgen::icosphere(1);
    // Constant distances: every query ties between all training points.
    const DistanceProvider flat = [&](VertexId v) {
        std::vector<double> d(mesh.vertex_count(), 1.0);
        d[v] = 0.0;
        return d;
    };
    const auto a = LabeledDataset::from_labels({7, 3, 11}, {0, 1, 0}, Fidelity::high);
    const auto b = LabeledDataset::from_labels({11, 7, 3}, {0, 0, 1}, Fidelity::high);
    const std::vector<VertexId> q{0, 1, 2};
    CHECK(nn_classify(mesh, a, q, flat) == std::vector<int>{1, 1, 1});
    CHECK(nn_classify(mesh, b, q, flat) == nn_classify(mesh, a, q, flat));

    const auto exact = testing::heat_provider(mesh);
    const auto all = all_vertices(mesh.vertex_count());
    CHECK(nn_classify(mesh, a, all, exact) == nn_classify(mesh, b, all, exact));
}

TEST_CASE("low-fidelity entries are ignored and empty training is an error") {
    const auto mesh = meshgen::icosphere(1);
    LabeledDataset data = LabeledDataset::from_labels({0}, {1}, Fidelity::high);
    data.entries.push_back({1, 0, Fidelity::low});
    const std::vector<VertexId> q{1};
    CHECK(nn_classify(mesh, data, q) == std::vector<int>{1});
    CHECK_MGPC_ERROR(nn_classify(mesh, LabeledDataset::from_labels({0}, {1}, Fidelity::low), q),
                     ErrorCode::argument);
}

namespace {

/// Fraction of equatorial vertices whose closed one-ring contains both predicted labels.
double boundary_near_equator(const TriangleMesh& mesh, const std::vector<int>& labels) {
    double edge = 0.0;
    std::size_t n_edges = 0;
    std::vector<std::vector<VertexId>> nbr(mesh.vertex_count());
    for (const auto& t : mesh.triangles()) {
        for (int k = 0; k < 3; ++k) {
            const VertexId a = t[k], b = t[(k + 1) % 3];
            nbr[a].push_back(b);
            nbr[b].push_back(a);
            edge += (mesh.vertices()[a] - mesh.vertices()[b]).norm();
            ++n_edges;
        }
    }
    edge /= static_cast<double>(n_edges);
    std::size_t equatorial = 0, near = 0;
    for (VertexId v = 0; v < mesh.vertex_count(); ++v) {
        if (std::abs(mesh.vertices()[v].z()) > 0.5 * edge) continue;
        ++equatorial;
        bool mixed = false;
        for (VertexId u : nbr[v]) mixed = mixed || labels[u] != labels[v];
        near += mixed;
    }
    REQUIRE(equatorial > 0);
    return static_cast<double>(near) / static_cast<double>(equatorial);
}

std::vector<int> hemisphere_nn(const TriangleMesh& mesh, std::uint64_t seed, std::vector<int>& truth) {
    truth.resize(mesh.vertex_count());
    for (std::size_t v = 0; v < truth.size(); ++v) truth[v] = mesh.vertices()[v].z() >= 0.0;
    const auto design = farthest_point_design(mesh, 20, seed);
    std::vector<int> y;
    for (auto v : design) y.push_back(truth[v]);
    return nn_classify(mesh, LabeledDataset::from_labels(design, y, Fidelity::high), all_vertices(mesh.vertex_count()));
}

} // namespace

TEST_CASE("two hemispheres from 20 points") {
    std::vector<int> truth;
    SUBCASE("boundary within one edge ring of the equator") {
        // The ring must be comparable to the design spacing: on finer meshes the
        // Voronoi boundary of 20 points wanders several rings off the equator.
        const auto mesh = meshgen::icosphere(1);
        for (std::uint64_t seed : {1, 2, 3}) {
            const double frac = boundary_near_equator(mesh, hemisphere_nn(mesh, seed, truth));
            CHECK(frac >= 0.9);
        }
    }
    SUBCASE("error confined to a band on a fine mesh") {
        const auto mesh = meshgen::icosphere(4);
        for (std::uint64_t seed : {1, 2, 3}) {
            const auto labels = hemisphere_nn(mesh, seed, truth);
            std::size_t wrong = 0;
            for (std::size_t v = 0; v < truth.size(); ++v) wrong += labels[v] != truth[v];
            CHECK(static_cast<double>(wrong) / static_cast<double>(truth.size()) < 0.15);
        }
    }
}

TEST_CASE("labels as a field") {
    const std::vector<VertexId> q{2, 4};
    const auto f = labels_to_field(q, {1, 0});
    CHECK(f.probability(0) == 1.0);
    CHECK(f.mean(1) == -1.0);
    CHECK(f.variance.cwiseAbs().maxCoeff() == 0.0);
    CHECK_MGPC_ERROR(labels_to_field(q, {1}), ErrorCode::argument);
}
